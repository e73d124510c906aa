#pragma once

#include "coseg/image.hpp"

#include <cstdint>

namespace coseg {

struct GraphCutOptions {
  int colorClusters = 5;     // Lab k-means codebook size per side
  double smoothness = 0.5;   // contrast-weighted 4-neighbor strength
  double priorBlend = 0.3;   // seed-distance prior weight in the unaries
  std::uint32_t seed = 42;
};

/// Two-label graph cut around a seed mask: foreground/background Lab color
/// models are estimated from the seed and its surroundings, unaries come from
/// the codebook likelihood ratio, smoothness is contrast-weighted.  Operates
/// inside a dilated bounding box of the seed; everything outside stays
/// background.  Returns the refined mask (possibly empty).
Mask colorModelCut(const LabImage& lab, const Mask& seed, const GraphCutOptions& opts);

}  // namespace coseg
