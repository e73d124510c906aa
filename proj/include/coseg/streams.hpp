#pragma once

#include "coseg/graphcut.hpp"
#include "coseg/proposals.hpp"

#include <map>

namespace coseg {

/// Temporally ordered chain of proposals, at most one per frame.  Frame gaps
/// are only possible after merging.
struct Stream {
  std::string videoId;
  std::map<int, Proposal> entries;  // frame -> proposal
  double meanCombined = 0;
  RegionFeature feature;  // mean of entry features
  bool complete = false;  // entry count == video frame count

  int firstFrame() const { return entries.begin()->first; }
  int lastFrame() const { return entries.rbegin()->first; }
  bool hasGap() const;

  /// Recomputes meanCombined / feature / complete from the entries.
  void refreshDerived(int videoFrameCount);
};

struct StreamSet {
  std::string videoId;
  std::vector<Stream> streams;
};

/// Intersection over union of two equally sized masks.  Throws when both are
/// empty (the ratio is undefined).
double overlapRatio(const Mask& a, const Mask& b);

/// Warps a proposal onto an adjacent frame by collecting its TCS labels there,
/// then refines the predicted region with a color-model graph cut.  An empty
/// result means the labels vanished (occlusion).
Mask warpProposal(const Proposal& p, const SuperpixelMap& spm, int toFrame,
                  const LabImage& toFrameLab, const GraphCutOptions& gc);

/// Forward then backward sweep over the frames: each proposal is warped onto
/// the adjacent frame and appended there as a predicted proposal when nothing
/// similar (overlap >= gamma) exists yet.  Original proposals are never
/// removed or mutated; predicted ones inherit objectness and get their motion
/// recomputed against the video's mean flow chi^2.
void expandProposals(std::vector<std::vector<Proposal>>& perFrame, const SuperpixelMap& spm,
                     const Video& video, const std::vector<LabImage>& labs,
                     const std::vector<FlowField>& flows, double gamma, double meanChi2,
                     const GraphCutOptions& gc, const ProposalOptions& po);

/// Builds proposal streams frame by frame: the top xInit proposals of the
/// first frame seed streams, live streams continue onto the proposal with the
/// highest warp overlap (>= gamma), and in every later frame unassigned
/// top-xGrow proposals seed new streams.  A proposal joins at most one stream.
StreamSet buildStreams(const std::vector<std::vector<Proposal>>& perFrame,
                       const SuperpixelMap& spm, const Video& video,
                       const std::vector<LabImage>& labs, int xInit, int xGrow, double gamma,
                       const GraphCutOptions& gc);

/// Occlusion handling: complete streams pass through, single-frame streams
/// are dropped, the rest are grouped by spectral clustering on color
/// appearance and merged within each cluster (frame conflicts keep the higher
/// combined score).  Merged streams may have frame gaps.
StreamSet mergeStreams(const StreamSet& set, int yClusters, std::uint32_t seed,
                       int videoFrameCount);

/// Normalized-Laplacian spectral clustering of a symmetric non-negative
/// affinity matrix into k groups (seeded k-means on the embedding).
Eigen::VectorXi spectralCluster(const Eigen::MatrixXd& affinity, int k, std::uint32_t seed);

}  // namespace coseg
