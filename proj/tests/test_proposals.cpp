#include <doctest.h>

#include "coseg/streams.hpp"
#include "coseg/synthetic.hpp"

#include <random>

using namespace coseg;

namespace {

struct Fixture {
  SyntheticSet set;
  std::vector<FlowField> flows;
  std::vector<LabImage> labs;
  SuperpixelMap spm;
};

Fixture makeFixture(const char* name) {
  Fixture fx;
  fx.set = generateSyntheticSet(bundledFixtureSpec(name));
  const Video& v = fx.set.videos[0];
  fx.flows = computeVideoFlows(v);
  for (const Frame& f : v.frames) fx.labs.push_back(rgbToLab(f));
  const std::vector<FlowField> consecutive(fx.flows.begin(), fx.flows.end() - 1);
  fx.spm = computeTcs(v, consecutive, 160);
  return fx;
}

}  // namespace

TEST_CASE("the square dominates proposals on a flat background") {
  Fixture fx = makeFixture("two-videos-one-square");
  ProposalOptions po;
  po.maxPerFrame = 60;
  const auto props = generateProposals(fx.set.videos[0].frames[0], fx.labs[0], fx.spm, 0, po, "v0");
  REQUIRE(!props.empty());
  CHECK(overlapRatio(props[0].mask, fx.set.gt[0][0][0]) >= 0.9);

  SUBCASE("list is sorted by objectness") {
    for (size_t i = 0; i + 1 < props.size(); ++i)
      CHECK(props[i].objectness >= props[i + 1].objectness);
  }
  SUBCASE("type invariants hold") {
    const long frameArea = 64 * 48;
    for (const Proposal& p : props) {
      const long area = maskArea(p.mask);
      CHECK(area >= 0.001 * frameArea);
      CHECK(area <= 0.90 * frameArea);
      CHECK(p.combined == doctest::Approx(p.objectness + p.motion).epsilon(1e-9));
      CHECK(p.tcsLabels == labelsOfMask(fx.spm, 0, p.mask));
      CHECK(p.objectness >= 0.0);
      CHECK(p.objectness <= 1.0);
    }
  }
  SUBCASE("generation is deterministic") {
    const auto again =
        generateProposals(fx.set.videos[0].frames[0], fx.labs[0], fx.spm, 0, po, "v0");
    REQUIRE(again.size() == props.size());
    for (size_t i = 0; i < props.size(); ++i) {
      CHECK((again[i].mask == props[i].mask).all());
      CHECK(again[i].objectness == props[i].objectness);
    }
  }
}

TEST_CASE("a uniform frame yields no proposals") {
  SyntheticSpec spec;
  spec.videoCount = 1;
  spec.framesPerVideo = 2;
  spec.width = 64;
  spec.height = 48;
  const SyntheticSet set = generateSyntheticSet(spec);
  const Video& v = set.videos[0];
  const LabImage lab = rgbToLab(v.frames[0]);
  const auto flows = computeVideoFlows(v);
  const std::vector<FlowField> consecutive(flows.begin(), flows.end() - 1);
  const SuperpixelMap spm = computeTcs(v, consecutive, 160);
  CHECK(generateProposals(v.frames[0], lab, spm, 0, {}, "v0").empty());
}

TEST_CASE("motion score follows the relative-contrast formula") {
  CHECK(motionScoreFromChi(0.0, 0.5) == doctest::Approx(0.0));
  // chi^2 exactly equal to the population mean
  CHECK(motionScoreFromChi(0.4, 0.4) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  CHECK(motionScoreFromChi(30.0, 1.0) < 1.0);  // strict at double precision
  CHECK(motionScoreFromChi(0.7, 0.0) == doctest::Approx(0.0));  // no motion contrast anywhere
}

TEST_CASE("surround ring is the dilated bounding box minus the mask") {
  Mask m = Mask::Constant(20, 30, false);
  for (int y = 5; y < 15; ++y)
    for (int x = 10; x < 20; ++x) m(y, x) = true;
  const Mask ring = surroundRing(m);
  CHECK((ring && m).count() == 0);
  CHECK(ring.any());
  // ring stays near the box: nothing at the far corner
  CHECK(!ring(0, 0));
  CHECK(ring(4, 10));  // one row above the box

  // a full-frame mask has no surround
  CHECK(!surroundRing(Mask::Constant(20, 30, true)).any());
}

TEST_CASE("zero flow makes combined equal objectness and keeps the ranking") {
  Fixture fx = makeFixture("two-objects");
  const Video& v = fx.set.videos[0];
  std::vector<std::vector<Proposal>> perFrame(v.frameCount());
  ProposalOptions po;
  po.maxPerFrame = 60;
  for (int f = 0; f < v.frameCount(); ++f)
    perFrame[f] = generateProposals(v.frames[f], fx.labs[f], fx.spm, f, po, "v0");

  std::vector<FlowField> zero(v.frameCount(),
                              {Imagef::Zero(v.height(), v.width()),
                               Imagef::Zero(v.height(), v.width())});
  std::vector<std::vector<Proposal>> scored = perFrame;
  const double meanChi = scoreProposals(scored, v, fx.labs, zero);
  CHECK(meanChi == doctest::Approx(0.0));
  for (const auto& frame : scored)
    for (size_t i = 0; i < frame.size(); ++i) {
      CHECK(frame[i].motion == doctest::Approx(0.0));
      CHECK(frame[i].combined == doctest::Approx(frame[i].objectness));
      if (i + 1 < frame.size()) CHECK(frame[i].objectness >= frame[i + 1].objectness);
    }
}

TEST_CASE("moving objects outscore static surroundings") {
  Fixture fx = makeFixture("two-videos-one-square");
  const Video& v = fx.set.videos[0];
  std::vector<std::vector<Proposal>> perFrame(v.frameCount());
  ProposalOptions po;
  po.maxPerFrame = 60;
  for (int f = 0; f < v.frameCount(); ++f)
    perFrame[f] = generateProposals(v.frames[f], fx.labs[f], fx.spm, f, po, "v0");
  scoreProposals(perFrame, v, fx.labs, fx.flows);
  // the square moves against a static background: positive motion score
  CHECK(perFrame[0][0].motion > 0.0);
  CHECK(perFrame[0][0].motion < 1.0);
}

// ordering is invariant to a constant shift of every motion score
TEST_CASE("constant motion shifts never change the combined-score ordering") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 20);
    std::vector<double> obj(n), mot(n);
    for (int i = 0; i < n; ++i) {
      obj[i] = uni(rng);
      mot[i] = uni(rng);
    }
    const double shift = uni(rng);
    std::vector<int> order1(n), order2(n);
    std::iota(order1.begin(), order1.end(), 0);
    order2 = order1;
    std::stable_sort(order1.begin(), order1.end(),
                     [&](int a, int b) { return obj[a] + mot[a] > obj[b] + mot[b]; });
    std::stable_sort(order2.begin(), order2.end(), [&](int a, int b) {
      return obj[a] + mot[a] + shift > obj[b] + mot[b] + shift;
    });
    CHECK(order1 == order2);
  }
}
