#pragma once

#include "coseg/config.hpp"
#include "coseg/refine.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace coseg {

struct VideoSource {
  std::string id;
  std::filesystem::path framesDir;
  std::optional<std::filesystem::path> gtDir;
};

struct VideoSetManifest {
  std::string name;
  int objectCount = 1;
  std::vector<VideoSource> videos;
};

/// Flat key=value manifest (`objects=C`, `video.<i>.frames=...`,
/// `video.<i>.gt=...`); relative paths resolve against the manifest location.
VideoSetManifest loadManifest(const std::filesystem::path& file);

/// frame index -> one mask per object label (1..objectCount)
using GroundTruthFrames = std::map<int, std::vector<Mask>>;

/// Reads every `<index>_gt.pgm` in the directory (pixel value k = object k).
GroundTruthFrames loadGroundTruth(const std::filesystem::path& gtDir, int objectCount);

/// Per-frame-mean IoU of one object track against one ground-truth label;
/// frames where both are empty are skipped, frames where exactly one is empty
/// contribute zero.
double trackIoU(const std::vector<Mask>& resultPerFrame, const GroundTruthFrames& gt,
                int gtLabel);

/// Optimal one-to-one slot -> ground-truth-label assignment maximizing total
/// IoU; unmatched slots get -1 and score zero.
std::vector<int> matchObjects(const std::vector<std::vector<Mask>>& objectMasks,
                              const GroundTruthFrames& gt);

struct VideoEval {
  std::string id;
  std::vector<int> slotToLabel;      // per slot, ground-truth label or -1
  std::vector<double> perObjectIoU;  // per slot
  double meanIoU = 0;
};

struct EvalReport {
  std::string setName;
  std::string aggregation = "per-frame-mean";
  std::vector<VideoEval> videos;
  double meanIoU = 0;  // over all (video, object) pairs
  std::vector<std::pair<std::string, std::string>> configEcho;
  double wallSeconds = 0;
};

EvalReport evaluateIoU(const SegmentationResult& result,
                       const std::vector<GroundTruthFrames>& gt,
                       const VideoSetManifest& manifest);

/// Per-frame PPM overlays: out = 0.6*src + 0.4*objectColor on mask pixels.
void renderOverlay(const Video& video, const VideoSegmentation& seg,
                   const std::filesystem::path& outDir);

std::string reportToJson(const EvalReport& report);
EvalReport reportFromJson(const std::string& text);
std::string reportTable(const EvalReport& report);

}  // namespace coseg
