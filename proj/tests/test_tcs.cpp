#include <doctest.h>

#include "coseg/tcs.hpp"
#include "coseg/synthetic.hpp"

#include <map>
#include <set>

using namespace coseg;

namespace {

Video staticVideo(int frames) {
  SyntheticSpec spec;
  spec.videoCount = 1;
  spec.framesPerVideo = frames;
  spec.width = 64;
  spec.height = 48;
  spec.texturedBackground = true;
  SyntheticObject obj;
  obj.color = {205, 45, 40};
  obj.sizeX = obj.sizeY = 16;
  obj.start = {{24, 24}};
  obj.vel = {{0, 0}};
  spec.objects = {obj};
  return generateSyntheticSet(spec).videos[0];
}

std::vector<FlowField> zeroFlows(int count, int w, int h) {
  std::vector<FlowField> flows;
  for (int i = 0; i < count; ++i)
    flows.push_back({Imagef::Zero(h, w), Imagef::Zero(h, w)});
  return flows;
}

std::set<int> frameLabels(const Imagei& img) {
  std::set<int> out;
  for (int y = 0; y < img.rows(); ++y)
    for (int x = 0; x < img.cols(); ++x) out.insert(img(y, x));
  return out;
}

}  // namespace

TEST_CASE("static video keeps the label image unchanged") {
  const Video v = staticVideo(2);
  const SuperpixelMap spm = computeTcs(v, zeroFlows(1, 64, 48), 100);
  CHECK((spm.labels[0] == spm.labels[1]).all());
}

TEST_CASE("superpixel count stays within 20% of the target") {
  const Video v = staticVideo(2);
  const SuperpixelMap spm = computeTcs(v, zeroFlows(1, 64, 48), 100);
  for (const Imagei& img : spm.labels) {
    const int count = static_cast<int>(frameLabels(img).size());
    CHECK(count >= 80);
    CHECK(count <= 120);
  }
}

TEST_CASE("every frame is a full partition of 4-connected regions") {
  const Video v = staticVideo(3);
  const SuperpixelMap spm = computeTcs(v, zeroFlows(2, 64, 48), 120);
  for (const Imagei& img : spm.labels) {
    CHECK(img.minCoeff() >= 0);
    // 4-connectivity: flood fill each label once; every pixel must be reached
    Imagei seen = Imagei::Zero(img.rows(), img.cols());
    std::set<int> done;
    for (int y = 0; y < img.rows(); ++y)
      for (int x = 0; x < img.cols(); ++x) {
        if (seen(y, x)) continue;
        const int lbl = img(y, x);
        CHECK(done.insert(lbl).second);  // fails if the label is split
        std::vector<std::pair<int, int>> stack{{y, x}};
        seen(y, x) = 1;
        while (!stack.empty()) {
          auto [cy, cx] = stack.back();
          stack.pop_back();
          const int ny[4] = {cy - 1, cy + 1, cy, cy};
          const int nx[4] = {cx, cx, cx - 1, cx + 1};
          for (int k = 0; k < 4; ++k) {
            if (ny[k] < 0 || ny[k] >= img.rows() || nx[k] < 0 || nx[k] >= img.cols()) continue;
            if (seen(ny[k], nx[k]) || img(ny[k], nx[k]) != lbl) continue;
            seen(ny[k], nx[k]) = 1;
            stack.emplace_back(ny[k], nx[k]);
          }
        }
      }
  }
}

// synthetic ground truth: square translating by (3,0)
TEST_CASE("labels inside a translating square persist") {
  SyntheticSpec spec;
  spec.videoCount = 1;
  spec.framesPerVideo = 2;
  spec.width = 64;
  spec.height = 48;
  SyntheticObject obj;
  obj.color = {205, 45, 40};
  obj.sizeX = obj.sizeY = 16;
  obj.start = {{20, 24}};
  obj.vel = {{3, 0}};
  spec.objects = {obj};
  const SyntheticSet set = generateSyntheticSet(spec);
  const auto flows = computeVideoFlows(set.videos[0]);
  const std::vector<FlowField> consecutive(flows.begin(), flows.end() - 1);
  const SuperpixelMap spm = computeTcs(set.videos[0], consecutive, 300);

  // labels fully inside the square at frame 0
  std::map<int, std::pair<long, long>> counts;  // label -> (inside, total)
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) {
      auto& c = counts[spm.labels[0](y, x)];
      c.second++;
      if (set.gt[0][0][0](y, x)) c.first++;
    }
  const std::set<int> next = frameLabels(spm.labels[1]);
  int inside = 0, kept = 0;
  for (const auto& [lbl, c] : counts) {
    if (c.first != c.second) continue;  // not fully inside
    ++inside;
    if (next.count(lbl)) ++kept;
  }
  REQUIRE(inside > 0);
  CHECK(kept >= 0.8 * inside);
}

TEST_CASE("labelsOfMask obeys the majority rule") {
  const Video v = staticVideo(2);
  const SuperpixelMap spm = computeTcs(v, zeroFlows(1, 64, 48), 100);
  const int w = v.width(), h = v.height();

  SUBCASE("full-frame mask returns every label") {
    const Mask all = Mask::Constant(h, w, true);
    CHECK(labelsOfMask(spm, 0, all).size() == frameLabels(spm.labels[0]).size());
  }
  SUBCASE("empty mask returns nothing") {
    const Mask none = Mask::Constant(h, w, false);
    CHECK(labelsOfMask(spm, 0, none).empty());
  }
  SUBCASE("a mask equal to one superpixel returns exactly that label") {
    const int lbl = spm.labels[0](20, 30);
    Mask m(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) m(y, x) = spm.labels[0](y, x) == lbl;
    const auto labels = labelsOfMask(spm, 0, m);
    REQUIRE(labels.size() == 1);
    CHECK(labels[0] == lbl);
  }
}

TEST_CASE("maskOfLabels unions label regions") {
  const Video v = staticVideo(2);
  const SuperpixelMap spm = computeTcs(v, zeroFlows(1, 64, 48), 100);
  const int w = v.width(), h = v.height();
  const auto all = frameLabels(spm.labels[0]);

  SUBCASE("all labels give the full frame") {
    const Mask m = maskOfLabels(spm, 0, std::vector<int>(all.begin(), all.end()));
    CHECK(maskArea(m) == w * h);
  }
  SUBCASE("no labels give the empty mask") { CHECK(maskEmpty(maskOfLabels(spm, 0, {}))); }
  SUBCASE("round trip on a superpixel-aligned mask") {
    std::vector<int> some;
    for (int lbl : all) {
      some.push_back(lbl);
      if (some.size() == 7) break;
    }
    const Mask m = maskOfLabels(spm, 0, some);
    const auto back = labelsOfMask(spm, 0, m);
    CHECK(back == some);
    CHECK((maskOfLabels(spm, 0, back) == m).all());
  }
  SUBCASE("union distributes over label sets") {
    std::vector<int> l1, l2;
    int i = 0;
    for (int lbl : all) {
      (i++ % 2 ? l1 : l2).push_back(lbl);
      if (i == 10) break;
    }
    std::vector<int> both = l1;
    both.insert(both.end(), l2.begin(), l2.end());
    const Mask u = maskOfLabels(spm, 0, both);
    const Mask m1 = maskOfLabels(spm, 0, l1);
    const Mask m2 = maskOfLabels(spm, 0, l2);
    CHECK((u == (m1 || m2)).all());
  }
}

TEST_CASE("computeTcs validates the flow list length") {
  const Video v = staticVideo(3);
  CHECK_THROWS_AS(computeTcs(v, zeroFlows(1, 64, 48), 100), std::runtime_error);
}
