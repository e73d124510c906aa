#include "coseg/streams.hpp"

#include "coseg/kmeans.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace coseg {

bool Stream::hasGap() const {
  if (entries.empty()) return false;
  return lastFrame() - firstFrame() + 1 != static_cast<int>(entries.size());
}

void Stream::refreshDerived(int videoFrameCount) {
  if (entries.empty()) throw std::runtime_error("stream with no entries");
  double sum = 0;
  Histogram color = Histogram::Zero(kColorBins);
  Histogram shape = Histogram::Zero(kShapeBins);
  for (const auto& [f, p] : entries) {
    sum += p.combined;
    color += p.feature.colorHist;
    shape += p.feature.shapeHist;
  }
  const double n = static_cast<double>(entries.size());
  meanCombined = sum / n;
  feature.colorHist = color / n;
  feature.shapeHist = shape / n;
  complete = static_cast<int>(entries.size()) == videoFrameCount;
}

double overlapRatio(const Mask& a, const Mask& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::runtime_error("overlapRatio: dimension mismatch");
  const long inter = (a && b).count();
  const long uni = (a || b).count();
  if (uni == 0) throw std::runtime_error("overlapRatio: both masks empty");
  return static_cast<double>(inter) / static_cast<double>(uni);
}

Mask warpProposal(const Proposal& p, const SuperpixelMap& spm, int toFrame,
                  const LabImage& toFrameLab, const GraphCutOptions& gc) {
  if (std::abs(toFrame - p.frame) != 1)
    throw std::runtime_error("warpProposal: target frame must be adjacent");
  const Mask predicted = maskOfLabels(spm, toFrame, p.tcsLabels);
  if (!predicted.any()) return predicted;
  return colorModelCut(toFrameLab, predicted, gc);
}

namespace {

bool areaWithinBounds(const Mask& m, const ProposalOptions& po) {
  const long area = maskArea(m);
  const long frameArea = static_cast<long>(m.size());
  return area >= po.minAreaFrac * frameArea && area <= po.maxAreaFrac * frameArea && area > 0;
}

void sweepExpansion(std::vector<std::vector<Proposal>>& perFrame, const SuperpixelMap& spm,
                    const Video& video, const std::vector<LabImage>& labs,
                    const std::vector<FlowField>& flows, double gamma, double meanChi2,
                    const GraphCutOptions& gc, const ProposalOptions& po, bool forward) {
  const int t = static_cast<int>(perFrame.size());
  const int begin = forward ? 0 : t - 1;
  const int end = forward ? t - 1 : 0;
  const int step = forward ? 1 : -1;
  for (int f = begin; f != end; f += step) {
    const int target = f + step;
    for (size_t i = 0; i < perFrame[f].size(); ++i) {
      const Proposal src = perFrame[f][i];  // copy: the list may reallocate
      Mask warped = warpProposal(src, spm, target, labs[target], gc);
      if (!warped.any() || !areaWithinBounds(warped, po)) continue;
      double bestOverlap = 0;
      for (const Proposal& q : perFrame[target]) {
        bestOverlap = std::max(bestOverlap, overlapRatio(warped, q.mask));
      }
      if (bestOverlap >= gamma) continue;

      Proposal np;
      np.videoId = src.videoId;
      np.frame = target;
      np.mask = std::move(warped);
      np.tcsLabels = labelsOfMask(spm, target, np.mask);
      np.objectness = src.objectness;
      np.origin = ProposalOrigin::Predicted;
      np.flowChi2 = motionChiSquared(np.mask, flows[target]);
      np.motion = motionScoreFromChi(np.flowChi2, meanChi2);
      np.combined = np.objectness + np.motion;
      np.feature = regionFeature(video.frames[target], labs[target], np.mask);
      np.rank = static_cast<int>(perFrame[target].size());
      perFrame[target].push_back(std::move(np));
    }
  }
}

// indices of the n proposals with the highest combined score
std::vector<int> topByCombined(const std::vector<Proposal>& list, int n) {
  std::vector<int> idx(list.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return list[a].combined > list[b].combined; });
  if (static_cast<int>(idx.size()) > n) idx.resize(n);
  return idx;
}

}  // namespace

void expandProposals(std::vector<std::vector<Proposal>>& perFrame, const SuperpixelMap& spm,
                     const Video& video, const std::vector<LabImage>& labs,
                     const std::vector<FlowField>& flows, double gamma, double meanChi2,
                     const GraphCutOptions& gc, const ProposalOptions& po) {
  if (gamma <= 0 || gamma >= 1) throw std::runtime_error("expandProposals: gamma must be in (0,1)");
  if (perFrame.size() != video.frames.size())
    throw std::runtime_error("expandProposals: per-frame lists must align with frames");
  sweepExpansion(perFrame, spm, video, labs, flows, gamma, meanChi2, gc, po, true);
  sweepExpansion(perFrame, spm, video, labs, flows, gamma, meanChi2, gc, po, false);
}

StreamSet buildStreams(const std::vector<std::vector<Proposal>>& perFrame,
                       const SuperpixelMap& spm, const Video& video,
                       const std::vector<LabImage>& labs, int xInit, int xGrow, double gamma,
                       const GraphCutOptions& gc) {
  if (xInit < 1) throw std::runtime_error("buildStreams: xInit must be >= 1");
  if (xGrow < 0) throw std::runtime_error("buildStreams: xGrow must be >= 0");
  const int t = static_cast<int>(perFrame.size());

  struct Builder {
    std::vector<std::pair<int, int>> picks;  // (frame, proposal index)
    bool alive = true;
  };
  std::vector<Builder> builders;
  std::vector<std::vector<char>> assigned(t);
  for (int f = 0; f < t; ++f) assigned[f].assign(perFrame[f].size(), 0);

  for (int i : topByCombined(perFrame[0], xInit)) {
    assigned[0][i] = 1;
    builders.push_back({{{0, i}}, true});
  }

  for (int f = 0; f + 1 < t; ++f) {
    for (Builder& b : builders) {
      if (!b.alive || b.picks.back().first != f) continue;
      const Proposal& cur = perFrame[f][b.picks.back().second];
      const Mask warped = warpProposal(cur, spm, f + 1, labs[f + 1], gc);
      if (!warped.any()) {
        b.alive = false;
        continue;
      }
      int best = -1;
      double bestRatio = 0;
      for (size_t q = 0; q < perFrame[f + 1].size(); ++q) {
        if (assigned[f + 1][q]) continue;
        const double r = overlapRatio(warped, perFrame[f + 1][q].mask);
        if (r > bestRatio) {
          bestRatio = r;
          best = static_cast<int>(q);
        }
      }
      if (best >= 0 && bestRatio >= gamma) {
        assigned[f + 1][best] = 1;
        b.picks.emplace_back(f + 1, best);
      } else {
        b.alive = false;
      }
    }
    for (int i : topByCombined(perFrame[f + 1], xGrow)) {
      if (assigned[f + 1][i]) continue;
      assigned[f + 1][i] = 1;
      builders.push_back({{{f + 1, i}}, true});
    }
  }

  StreamSet set;
  set.videoId = video.id;
  for (const Builder& b : builders) {
    Stream s;
    s.videoId = video.id;
    for (const auto& [f, i] : b.picks) s.entries.emplace(f, perFrame[f][i]);
    s.refreshDerived(t);
    set.streams.push_back(std::move(s));
  }
  return set;
}

Eigen::VectorXi spectralCluster(const Eigen::MatrixXd& affinity, int k, std::uint32_t seed) {
  const int n = static_cast<int>(affinity.rows());
  if (affinity.cols() != n) throw std::runtime_error("spectralCluster: matrix must be square");
  if (k < 1 || k > n) throw std::runtime_error("spectralCluster: k out of range");
  if ((affinity - affinity.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw std::runtime_error("spectralCluster: matrix must be symmetric");
  if (affinity.minCoeff() < 0) throw std::runtime_error("spectralCluster: negative affinity");

  Eigen::VectorXi out(n);
  if (k == 1) {
    out.setZero();
    return out;
  }
  if (k == n) {
    for (int i = 0; i < n; ++i) out(i) = i;
    return out;
  }

  Eigen::VectorXd d = affinity.rowwise().sum();
  Eigen::VectorXd dinv(n);
  for (int i = 0; i < n; ++i) dinv(i) = 1.0 / std::sqrt(std::max(d(i), 1e-12));
  Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(n, n) -
                        dinv.asDiagonal() * affinity * dinv.asDiagonal();
  lap = 0.5 * (lap + lap.transpose());  // symmetrize numerical noise away

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
  Eigen::MatrixXd embed = eig.eigenvectors().leftCols(k);  // ascending eigenvalues
  for (int i = 0; i < n; ++i) {
    const double norm = embed.row(i).norm();
    if (norm > 1e-12) embed.row(i) /= norm;
  }
  return kmeans(embed, k, seed).assignment;
}

StreamSet mergeStreams(const StreamSet& set, int yClusters, std::uint32_t seed,
                       int videoFrameCount) {
  if (yClusters < 1) throw std::runtime_error("mergeStreams: yClusters must be >= 1");

  StreamSet out;
  out.videoId = set.videoId;
  std::vector<const Stream*> incomplete;
  for (const Stream& s : set.streams) {
    if (s.complete) {
      out.streams.push_back(s);
    } else if (s.entries.size() >= 2) {
      incomplete.push_back(&s);
    }
    // single-frame streams are abandoned
  }
  const int n = static_cast<int>(incomplete.size());
  if (n == 0) return out;
  if (n == 1) {
    out.streams.push_back(*incomplete[0]);
    return out;
  }

  Eigen::MatrixXd chi(n, n);
  std::vector<double> pairwise;
  for (int i = 0; i < n; ++i) {
    chi(i, i) = 0;
    for (int j = i + 1; j < n; ++j) {
      const double c = chiSquared(incomplete[i]->feature.colorHist,
                                  incomplete[j]->feature.colorHist);
      chi(i, j) = chi(j, i) = c;
      pairwise.push_back(c);
    }
  }
  std::sort(pairwise.begin(), pairwise.end());
  double sigma = pairwise[pairwise.size() / 2];  // median, self-tuning scale
  sigma = std::max(sigma, 1e-6);
  const Eigen::MatrixXd affinity = (-chi / sigma).array().exp();

  const int k = std::min(yClusters, n);
  const Eigen::VectorXi cluster = spectralCluster(affinity, k, seed);

  for (int c = 0; c < k; ++c) {
    Stream merged;
    bool any = false;
    for (int i = 0; i < n; ++i) {
      if (cluster(i) != c) continue;
      if (!any) {
        merged = *incomplete[i];
        any = true;
        continue;
      }
      for (const auto& [f, p] : incomplete[i]->entries) {
        auto it = merged.entries.find(f);
        if (it == merged.entries.end()) {
          merged.entries.emplace(f, p);
        } else if (p.combined > it->second.combined) {
          it->second = p;
        }
      }
    }
    if (any) {
      merged.refreshDerived(videoFrameCount);
      out.streams.push_back(std::move(merged));
    }
  }
  return out;
}

}  // namespace coseg
