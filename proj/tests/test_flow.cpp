#include <doctest.h>

#include "coseg/flow.hpp"
#include "coseg/synthetic.hpp"

#include <cmath>

using namespace coseg;

namespace {

Frame noiseFrame(int w, int h, const Imagef& noise, int ox, int oy) {
  Frame f;
  f.r.resize(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      f.r(y, x) = static_cast<std::uint8_t>(noise(y + oy, x + ox));
  f.g = f.r;
  f.b = f.r;
  return f;
}

}  // namespace

TEST_CASE("flow of a frame against itself is zero") {
  const Imagef noise = valueNoise(80, 60, 6, 5);
  const Frame a = noiseFrame(64, 48, noise, 0, 0);
  const FlowField f = computeFlow(a, a);
  const double meanMag = (f.dx.square() + f.dy.square()).sqrt().mean();
  CHECK(meanMag <= 0.1);
  CHECK(f.dx.isFinite().all());
  CHECK(f.dy.isFinite().all());
}

TEST_CASE("flow rejects mismatched dimensions") {
  Frame a, b;
  a.r = Imageu8::Zero(48, 64);
  a.g = a.r;
  a.b = a.r;
  b.r = Imageu8::Zero(24, 32);
  b.g = b.r;
  b.b = b.r;
  CHECK_THROWS_AS(computeFlow(a, b), std::runtime_error);
}

// generator ground truth: a 16x16 square translating by (3,0)
TEST_CASE("translating square flow accuracy") {
  SyntheticSpec spec;
  spec.videoCount = 1;
  spec.framesPerVideo = 2;
  spec.width = 64;
  spec.height = 48;
  SyntheticObject obj;
  obj.shape = ObjectShape::Rect;
  obj.color = {205, 45, 40};
  obj.sizeX = obj.sizeY = 16;
  obj.start = {{20, 24}};
  obj.vel = {{3, 0}};
  spec.objects = {obj};
  const SyntheticSet set = generateSyntheticSet(spec);

  const FlowField f = computeFlow(set.videos[0].frames[0], set.videos[0].frames[1]);
  double err = 0;
  long n = 0;
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x)
      if (set.gt[0][0][0](y, x)) {
        err += std::hypot(f.dx(y, x) - 3.0, f.dy(y, x) - 0.0);
        ++n;
      }
  CHECK(n == 256);
  CHECK(err / n <= 0.5);
}

// generator ground truth: global translation of a textured frame by (1,2)
TEST_CASE("global translation flow accuracy") {
  const Imagef noise = valueNoise(96, 80, 5, 9);
  const Frame a = noiseFrame(64, 48, noise, 8, 8);
  const Frame b = noiseFrame(64, 48, noise, 7, 6);  // content moves by (+1,+2)
  const FlowField f = computeFlow(a, b);
  std::vector<float> dxs, dys;
  for (int y = 4; y < 44; ++y)
    for (int x = 4; x < 60; ++x) {
      dxs.push_back(f.dx(y, x));
      dys.push_back(f.dy(y, x));
    }
  std::nth_element(dxs.begin(), dxs.begin() + dxs.size() / 2, dxs.end());
  std::nth_element(dys.begin(), dys.begin() + dys.size() / 2, dys.end());
  CHECK(std::abs(dxs[dxs.size() / 2] - 1.0) <= 0.5);
  CHECK(std::abs(dys[dys.size() / 2] - 2.0) <= 0.5);
}

TEST_CASE("per-video flows synthesize the last frame from the previous pair") {
  SyntheticSpec spec;
  spec.videoCount = 1;
  spec.framesPerVideo = 3;
  spec.width = 64;
  spec.height = 48;
  spec.texturedBackground = true;
  const SyntheticSet set = generateSyntheticSet(spec);
  const auto flows = computeVideoFlows(set.videos[0]);
  REQUIRE(flows.size() == 3);
  const FlowField again = computeFlow(set.videos[0].frames[2], set.videos[0].frames[1]);
  CHECK((flows[2].dx == -again.dx).all());
  CHECK((flows[2].dy == -again.dy).all());
}
