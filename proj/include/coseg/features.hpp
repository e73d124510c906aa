#pragma once

#include "coseg/flow.hpp"
#include "coseg/image.hpp"

#include <stdexcept>
#include <vector>

namespace coseg {

using Histogram = Eigen::ArrayXd;

inline constexpr int kColorBins = 117;  // 13+13+13 (Lab) + 26+26+26 (RGB)
inline constexpr int kShapeBins = 81;   // 3x3 cells x 9 unsigned orientations
inline constexpr int kFlowBins = 32;    // 4 magnitude ranges x 8 orientations
inline constexpr double kChiEps = 1e-12;

/// chi-squared distance between equal-length non-negative histograms:
/// 0.5 * sum (h1-h2)^2 / (h1+h2+eps).  Bounded by 1 for L1-normalized inputs.
template <typename DerivedA, typename DerivedB>
double chiSquared(const Eigen::ArrayBase<DerivedA>& h1, const Eigen::ArrayBase<DerivedB>& h2) {
  if (h1.size() != h2.size()) throw std::runtime_error("chiSquared: length mismatch");
  const Eigen::ArrayXd a = h1.derived().template cast<double>();
  const Eigen::ArrayXd b = h2.derived().template cast<double>();
  return 0.5 * ((a - b).square() / (a + b + kChiEps)).sum();
}

struct RegionFeature {
  Histogram colorHist = Histogram::Zero(kColorBins);  // L1-normalized once filled
  Histogram shapeHist = Histogram::Zero(kShapeBins);
};

/// Weighted combination of the color and shape chi-squared distances,
/// normalized by the weight sum: (w*chiColor + chiShape) / (w + 1).
double combinedChiSquared(double chiColor, double chiShape, double colorWeight);

double featureDistance(const RegionFeature& f1, const RegionFeature& f2, double colorWeight);

/// Lab (13 bins/channel) + RGB (26 bins/channel) histogram over the masked
/// pixels, L1-normalized over the whole 117-entry vector.
Histogram colorHistogram(const Frame& frame, const Mask& mask);
Histogram colorHistogram(const Frame& frame, const LabImage& lab, const Mask& mask);

/// HOG-style shape histogram: the mask's bounding box mapped onto a 3x3 cell
/// grid, 9 unsigned gradient orientations per cell, per-cell L2 block
/// normalization, then L1 normalization.  A gradient-free region yields the
/// uniform histogram.
Histogram shapeHistogram(const Frame& frame, const Mask& mask);

RegionFeature regionFeature(const Frame& frame, const LabImage& lab, const Mask& mask);

/// L1-normalized histogram over the masked flow vectors, 8 orientations x 4
/// magnitude ranges; near-zero vectors land in the first magnitude range.
Histogram flowHistogram(const FlowField& flow, const Mask& mask);

/// Per-pixel co-saliency over a video, values in [0,1].
struct SaliencyMap {
  std::vector<Imagef> frames;
};

/// Cluster-based co-saliency over all frames of all videos: pooled Lab
/// k-means, per-cluster contrast/spatial/repeatedness cues multiplied, then
/// min-max normalized per video.  Deterministic under a fixed seed.
std::vector<SaliencyMap> coSaliency(const std::vector<Video>& videos, int clusterCount,
                                    std::uint32_t seed);

/// Mean saliency over the mask's pixels.
double saliencyScore(const SaliencyMap& map, int frame, const Mask& mask);

}  // namespace coseg
