#pragma once

#include "coseg/features.hpp"
#include "coseg/tcs.hpp"

#include <string>
#include <vector>

namespace coseg {

enum class ProposalOrigin { Generated, Predicted };

/// One object-like region hypothesis in one frame.
struct Proposal {
  std::string videoId;
  int frame = 0;
  Mask mask;
  std::vector<int> tcsLabels;  // labelsOfMask(mask) at construction time
  double objectness = 0;       // [0,1]
  double motion = 0;           // [0,1)
  double combined = 0;         // objectness + motion
  int rank = 0;
  ProposalOrigin origin = ProposalOrigin::Generated;

  RegionFeature feature;  // filled when the proposal is scored
  double flowChi2 = 0;    // chi^2 between region and surround flow histograms
};

struct ProposalOptions {
  int maxPerFrame = 200;
  double colorTau = 10.0;  // superpixel growth gate; a coarser pass uses 2*tau
  double dedupIou = 0.95;
  double minAreaFrac = 0.001;
  double maxAreaFrac = 0.90;
};

/// Region proposals for one frame: every superpixel seeds a region grown over
/// color-similar 4-adjacent superpixels (at two granularities), near-duplicates
/// are dropped, and the survivors are ranked by objectness
/// (0.5*(1-boundaryContact) + 0.5*colorContrast) and truncated.
std::vector<Proposal> generateProposals(const Frame& frame, const LabImage& lab,
                                        const SuperpixelMap& spm, int frameIdx,
                                        const ProposalOptions& opts, const std::string& videoId);

/// Surroundings of a mask: its bounding box dilated by 20% per side (clipped
/// to the frame), minus the mask itself.
Mask surroundRing(const Mask& mask);

/// chi^2 between the flow histograms of the mask and of its surround ring;
/// 0 when the surround is empty.
double motionChiSquared(const Mask& mask, const FlowField& flow);

/// Motion score of a proposal given the per-video mean chi^2:
/// 1 - exp(-chi2 / meanChi2).  Zero when meanChi2 is zero (no motion contrast
/// anywhere in the video).
double motionScoreFromChi(double chi2, double meanChi2);

/// Two-pass motion scoring over a whole video: collects every proposal's flow
/// chi^2, normalizes by their mean, fills in motion/combined/features, and
/// re-ranks each frame by combined score.  Returns the mean chi^2 so that
/// later predicted proposals can be scored against the same population.
double scoreProposals(std::vector<std::vector<Proposal>>& perFrame, const Video& video,
                      const std::vector<LabImage>& labs, const std::vector<FlowField>& flows);

}  // namespace coseg
