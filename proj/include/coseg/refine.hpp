#pragma once

#include "coseg/flow.hpp"
#include "coseg/streams.hpp"

#include <string>
#include <vector>

namespace coseg {

struct RefineOptions {
  double smoothness = 0.5;     // intra-frame contrast-weighted arcs
  double temporalWeight = 0.3; // arcs along the flow to the next frame
  double priorBlend = 0.3;     // stream-mask distance prior vs color likelihood
  int colorClusters = 8;       // Lab codebook size per model
  std::uint32_t seed = 42;
};

/// Refined per-object per-frame masks of one video.
struct VideoSegmentation {
  std::string videoId;
  std::vector<std::vector<Mask>> objectMasks;  // [object][frame]
};

struct SegmentationResult {
  std::vector<VideoSegmentation> videos;
};

/// Pixel-level spatio-temporal refinement of the selected streams: per object,
/// foreground/background Lab codebooks estimated from the stream's masks, one
/// graph over all frames with color-likelihood terminals (blended with a
/// stream-mask distance prior on frames that have an entry), contrast-weighted
/// 4-neighbor arcs and temporal arcs along the flow; the min cut yields the
/// masks.  Overlapping objects keep the higher foreground likelihood.
VideoSegmentation refineStreams(const Video& video, const std::vector<FlowField>& flows,
                                const std::vector<Stream>& selected,
                                const RefineOptions& opts = {});

}  // namespace coseg
