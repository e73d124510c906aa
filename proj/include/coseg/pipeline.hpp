#pragma once

#include "coseg/config.hpp"
#include "coseg/crf.hpp"
#include "coseg/harness.hpp"
#include "coseg/refine.hpp"
#include "coseg/synthetic.hpp"

#include <functional>
#include <optional>

namespace coseg {

/// Everything the pipeline produced, kept around for inspection and tests.
struct PipelineArtifacts {
  std::vector<Video> videos;
  std::vector<std::vector<FlowField>> flows;          // per video, per frame
  std::vector<SuperpixelMap> tcs;                     // per video
  std::vector<std::vector<std::vector<Proposal>>> scored;    // pre-expansion
  std::vector<std::vector<std::vector<Proposal>>> expanded;  // post-expansion
  std::vector<double> meanFlowChi2;                   // per video
  std::vector<StreamSet> preMergeStreams;
  std::vector<StreamSet> streams;  // post-merge
  std::vector<SaliencyMap> saliency;
  CrfModel model;
  TrwsResult inference;
  std::vector<std::vector<Stream>> selected;  // per video, per slot
  SegmentationResult segmentation;
  std::optional<EvalReport> report;
};

/// Runs proposals -> expansion -> streams -> CRF selection -> refinement,
/// writes masks, overlays and (with ground truth) report.json into outDir.
PipelineArtifacts runPipeline(const VideoSetManifest& manifest, const PipelineConfig& cfg,
                              const std::filesystem::path& outDir, bool dumpStages = false);

/// Re-runs a single stage from the dumps a previous `run --dump-stages` left
/// in outDir.  Stage names: flow, tcs, proposals, expand, streams, crf,
/// refine, eval.
void runStage(const std::string& stage, const VideoSetManifest& manifest,
              const PipelineConfig& cfg, const std::filesystem::path& outDir);

/// The cluster count rule for merging: yLarge when more than yCutoff
/// incomplete streams, else ySmall, additionally clamped so that very small
/// pools can still merge (at most half the pool size).
int mergeClusterCount(int incompleteStreams, const PipelineConfig& cfg);

/// Simple index-based parallel loop; results must be written to disjoint
/// slots.  threads <= 0 uses the hardware concurrency.
void parallelFor(int count, int threads, const std::function<void(int)>& fn);

}  // namespace coseg
