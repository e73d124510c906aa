#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace coseg {

/// Pipeline knobs.  Field defaults are the documented values; an unset key in
/// a config file never changes behavior against these defaults.
struct PipelineConfig {
  std::uint32_t seed = 42;
  int threads = 0;  // 0 = available parallelism

  // flow
  int flowLevels = 3;
  int flowIters = 100;
  double flowAlpha = 15;

  // temporally consistent superpixels
  int tcsCount = 1500;
  double tcsCompactness = 10;
  double tcsColorGate = 20;
  int slicIters = 10;

  // proposals
  int maxProposalsPerFrame = 200;
  double proposalColorTau = 10;
  double proposalDedupIou = 0.95;

  // expansion + streams
  double gamma = 0.6;
  int xInit = 40;
  int xGrow = 10;
  int yLarge = 20;
  int ySmall = 5;
  int yCutoff = 40;

  // features / saliency
  double colorWeight = 2;
  int saliencyClusters = 12;

  // CRF
  double alpha1 = 0.5;
  double alpha2 = 1.0;
  int trwsIters = 500;
  double trwsTol = 1e-6;
  int pairBudget = 400;
  double epsilonProb = 1e-6;
  double eBig = 1e4;

  // warp refinement
  int warpColorClusters = 5;
  double warpSmoothness = 0.5;
  double warpPriorBlend = 0.3;

  // pixel-level refinement
  double refineSmoothness = 0.5;
  double refineTemporal = 0.3;
  double refinePriorBlend = 0.3;
  int refineColorClusters = 8;
};

/// Parses `key=value` lines, `#` comments.  Unknown keys are an error.
PipelineConfig parseConfig(const std::string& text);
PipelineConfig loadConfig(const std::filesystem::path& file);

/// Canonical (key, value) echo of every knob, in declaration order.
std::vector<std::pair<std::string, std::string>> configEcho(const PipelineConfig& cfg);

}  // namespace coseg
