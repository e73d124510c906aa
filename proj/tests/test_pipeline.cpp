#include <doctest.h>

#include "coseg/pipeline.hpp"

#include <fstream>

namespace fs = std::filesystem;
using namespace coseg;

namespace {

fs::path freshDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("coseg_test_" + name);
  fs::remove_all(p);
  return p;
}

PipelineConfig deskConfig() {
  return parseConfig(
      "tcsCount=160\nxInit=10\nxGrow=5\nmaxProposalsPerFrame=60\nsaliencyClusters=8\nthreads=2\n");
}

}  // namespace

TEST_CASE("merge cluster count rule") {
  const PipelineConfig cfg;  // yLarge 20, ySmall 5, yCutoff 40
  CHECK(mergeClusterCount(100, cfg) == 20);
  CHECK(mergeClusterCount(41, cfg) == 20);
  CHECK(mergeClusterCount(40, cfg) == 5);
  CHECK(mergeClusterCount(12, cfg) == 5);
  // tiny pools can still merge
  CHECK(mergeClusterCount(4, cfg) == 2);
  CHECK(mergeClusterCount(2, cfg) == 1);
  CHECK(mergeClusterCount(1, cfg) == 1);
}

TEST_CASE("end-to-end run produces masks, overlays and a report") {
  const fs::path fix = freshDir("e2e_fix");
  writeFixture(bundledFixtureSpec("two-videos-one-square"), fix);
  const fs::path out = freshDir("e2e_out");
  const VideoSetManifest manifest = loadManifest(fix / "manifest.txt");
  const PipelineArtifacts art = runPipeline(manifest, deskConfig(), out);

  REQUIRE(art.report.has_value());
  CHECK(art.report->meanIoU >= 0.7);
  CHECK(fs::exists(out / "report.json"));
  CHECK(fs::exists(out / "masks" / "v0" / "1" / "000.pgm"));
  CHECK(fs::exists(out / "overlay" / "v1" / "009.ppm"));

  // report.json parses and carries the config echo
  std::ifstream in(out / "report.json");
  std::stringstream ss;
  ss << in.rdbuf();
  const EvalReport back = reportFromJson(ss.str());
  CHECK(back.meanIoU == doctest::Approx(art.report->meanIoU));
  CHECK(!back.configEcho.empty());
}

TEST_CASE("stage re-runs reproduce the pipeline outputs") {
  const fs::path fix = freshDir("stage_fix");
  writeFixture(bundledFixtureSpec("two-videos-one-square"), fix);
  const fs::path out = freshDir("stage_out");
  const VideoSetManifest manifest = loadManifest(fix / "manifest.txt");
  const PipelineConfig cfg = deskConfig();
  const PipelineArtifacts art = runPipeline(manifest, cfg, out, /*dumpStages=*/true);
  REQUIRE(art.report.has_value());

  SUBCASE("crf stage solves the dumped model to the same labeling") {
    runStage("crf", manifest, cfg, out);  // model.txt exists: solve it
    std::ifstream in(out / "stages" / "crf" / "labeling.txt");
    std::string word;
    std::vector<int> states;
    double energy = -1, lb = 0;
    while (in >> word) {
      if (word == "energy") in >> energy;
      else if (word == "lowerBound") in >> lb;
      else if (word == "states") {
        int s;
        while (in >> s) states.push_back(s);
      }
    }
    CHECK(states == art.inference.labeling.states);
    CHECK(energy == doctest::Approx(art.inference.labeling.energy).epsilon(1e-12));
  }

  SUBCASE("eval stage recomputes the same numbers from dumped masks") {
    const fs::path reportFile = out / "report.json";
    std::ifstream before(reportFile);
    std::stringstream b1;
    b1 << before.rdbuf();
    const EvalReport r1 = reportFromJson(b1.str());

    runStage("eval", manifest, cfg, out);
    std::ifstream after(reportFile);
    std::stringstream b2;
    b2 << after.rdbuf();
    const EvalReport r2 = reportFromJson(b2.str());
    CHECK(r2.meanIoU == doctest::Approx(r1.meanIoU).epsilon(1e-12));
    REQUIRE(r2.videos.size() == r1.videos.size());
    for (size_t v = 0; v < r1.videos.size(); ++v)
      CHECK(r2.videos[v].perObjectIoU == r1.videos[v].perObjectIoU);
  }

  SUBCASE("unknown stage names are rejected") {
    CHECK_THROWS_WITH_AS(runStage("bogus", manifest, cfg, out), doctest::Contains("unknown stage"),
                         std::runtime_error);
  }
}

TEST_CASE("reruns with the same seed and config are byte-identical minus timing") {
  const fs::path fix = freshDir("det_fix");
  writeFixture(bundledFixtureSpec("two-videos-one-square"), fix);
  const VideoSetManifest manifest = loadManifest(fix / "manifest.txt");
  const PipelineConfig cfg = deskConfig();
  const fs::path outA = freshDir("det_a"), outB = freshDir("det_b");
  runPipeline(manifest, cfg, outA);
  runPipeline(manifest, cfg, outB);

  auto stripTiming = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string s = ss.str();
    const auto pos = s.find("\"timing\"");
    REQUIRE(pos != std::string::npos);
    return s.substr(0, pos);
  };
  CHECK(stripTiming(outA / "report.json") == stripTiming(outB / "report.json"));

  for (const auto& entry : fs::recursive_directory_iterator(outA / "masks")) {
    if (!entry.is_regular_file()) continue;
    std::ifstream a(entry.path(), std::ios::binary);
    std::ifstream b(outB / fs::relative(entry.path(), outA), std::ios::binary);
    REQUIRE(b.good());
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
  }
}

TEST_CASE("stage errors carry the stage name and video id") {
  const fs::path fix = freshDir("err_fix");
  writeFixture(bundledFixtureSpec("two-videos-one-square"), fix);
  const VideoSetManifest manifest = loadManifest(fix / "manifest.txt");
  PipelineConfig cfg = deskConfig();
  cfg.tcsCount = 4;  // below the documented minimum of 16
  try {
    runPipeline(manifest, cfg, freshDir("err_out"));
    FAIL("expected a stage error");
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    CHECK(what.find("stage tcs") != std::string::npos);
    CHECK(what.find("video v") != std::string::npos);
  }
}

TEST_CASE("evaluation uses whichever ground-truth frames exist") {
  const fs::path fix = freshDir("subset_fix");
  writeFixture(bundledFixtureSpec("two-videos-one-square"), fix);
  // keep ground truth for five frames per video, as annotated datasets do
  for (const char* v : {"v0", "v1"})
    for (int f : {1, 3, 4, 6, 8}) {
      char name[16];
      std::snprintf(name, sizeof(name), "%03d_gt.pgm", f);
      fs::remove(fix / v / "gt" / name);
    }
  const VideoSetManifest manifest = loadManifest(fix / "manifest.txt");
  const GroundTruthFrames gt = loadGroundTruth(*manifest.videos[0].gtDir, 1);
  CHECK(gt.size() == 5);
  const PipelineArtifacts art = runPipeline(manifest, deskConfig(), freshDir("subset_out"));
  REQUIRE(art.report.has_value());
  CHECK(art.report->meanIoU >= 0.7);
}

TEST_CASE("parallelFor covers every index exactly once") {
  std::vector<int> hits(100, 0);
  parallelFor(100, 3, [&](int i) { hits[i]++; });
  for (int h : hits) CHECK(h == 1);
  // exceptions propagate
  CHECK_THROWS_AS(parallelFor(4, 2, [](int i) {
    if (i == 2) throw std::runtime_error("boom");
  }), std::runtime_error);
}
