#include "coseg/proposals.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace coseg {

namespace {

struct SpStats {
  std::vector<int> labels;                 // labels present in this frame
  std::map<int, int> indexOf;              // label -> dense index
  std::vector<long> size;                  // pixels per superpixel
  std::vector<Eigen::Vector3f> meanLab;
  std::vector<std::set<int>> adjacency;    // dense indices
};

SpStats frameStats(const Imagei& labels, const LabImage& lab) {
  SpStats st;
  const int h = static_cast<int>(labels.rows());
  const int w = static_cast<int>(labels.cols());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int l = labels(y, x);
      if (!st.indexOf.count(l)) {
        st.indexOf[l] = static_cast<int>(st.labels.size());
        st.labels.push_back(l);
        st.size.push_back(0);
        st.meanLab.emplace_back(Eigen::Vector3f::Zero());
        st.adjacency.emplace_back();
      }
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int i = st.indexOf[labels(y, x)];
      st.size[i]++;
      st.meanLab[i] += Eigen::Vector3f(lab.l(y, x), lab.a(y, x), lab.b(y, x));
      if (x + 1 < w && labels(y, x + 1) != labels(y, x)) {
        const int j = st.indexOf[labels(y, x + 1)];
        st.adjacency[i].insert(j);
        st.adjacency[j].insert(i);
      }
      if (y + 1 < h && labels(y + 1, x) != labels(y, x)) {
        const int j = st.indexOf[labels(y + 1, x)];
        st.adjacency[i].insert(j);
        st.adjacency[j].insert(i);
      }
    }
  for (size_t i = 0; i < st.labels.size(); ++i) st.meanLab[i] /= static_cast<float>(st.size[i]);
  return st;
}

// grow a region from a seed superpixel over color-similar neighbors
std::vector<int> growRegion(const SpStats& st, int seedIdx, double tau) {
  std::vector<char> in(st.labels.size(), 0);
  std::vector<int> stack{seedIdx}, region;
  in[seedIdx] = 1;
  const Eigen::Vector3f seedColor = st.meanLab[seedIdx];
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    region.push_back(i);
    for (int j : st.adjacency[i]) {
      if (in[j]) continue;
      if ((st.meanLab[j] - seedColor).norm() <= tau) {
        in[j] = 1;
        stack.push_back(j);
      }
    }
  }
  std::sort(region.begin(), region.end());
  return region;
}

struct Candidate {
  std::vector<int> denseIdx;  // sorted dense superpixel indices
  long area = 0;
  double objectness = 0;
};

long intersectionArea(const std::vector<int>& a, const std::vector<int>& b,
                      const std::vector<long>& size) {
  long inter = 0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      inter += size[a[i]];
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return inter;
}

}  // namespace

Mask surroundRing(const Mask& mask) {
  const int h = static_cast<int>(mask.rows());
  const int w = static_cast<int>(mask.cols());
  int x0 = w, y0 = h, x1 = -1, y1 = -1;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (mask(y, x)) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
  Mask ring = Mask::Constant(h, w, false);
  if (x1 < 0) return ring;
  const int padX = std::max(1, static_cast<int>(std::lround(0.2 * (x1 - x0 + 1))));
  const int padY = std::max(1, static_cast<int>(std::lround(0.2 * (y1 - y0 + 1))));
  x0 = std::max(0, x0 - padX);
  y0 = std::max(0, y0 - padY);
  x1 = std::min(w - 1, x1 + padX);
  y1 = std::min(h - 1, y1 + padY);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) ring(y, x) = !mask(y, x);
  return ring;
}

std::vector<Proposal> generateProposals(const Frame& frame, const LabImage& lab,
                                        const SuperpixelMap& spm, int frameIdx,
                                        const ProposalOptions& opts, const std::string& videoId) {
  if (opts.maxPerFrame < 1) throw std::runtime_error("generateProposals: maxPerFrame must be >= 1");
  if (frameIdx < 0 || frameIdx >= spm.frameCount())
    throw std::runtime_error("generateProposals: bad frame index");
  const Imagei& labels = spm.labels[frameIdx];
  const SpStats st = frameStats(labels, lab);
  const long frameArea = static_cast<long>(labels.size());

  std::set<std::vector<int>> seen;
  std::vector<Candidate> candidates;
  const double taus[2] = {opts.colorTau, 2 * opts.colorTau};
  for (double tau : taus) {
    for (size_t seed = 0; seed < st.labels.size(); ++seed) {
      std::vector<int> region = growRegion(st, static_cast<int>(seed), tau);
      if (!seen.insert(region).second) continue;
      Candidate c;
      c.area = 0;
      for (int i : region) c.area += st.size[i];
      if (c.area < opts.minAreaFrac * frameArea || c.area > opts.maxAreaFrac * frameArea) continue;
      c.denseIdx = std::move(region);
      candidates.push_back(std::move(c));
    }
  }

  // objectness: interior-ness plus color contrast against the surround ring
  const int h = static_cast<int>(labels.rows());
  const int w = static_cast<int>(labels.cols());
  for (Candidate& c : candidates) {
    std::vector<char> member(st.labels.size(), 0);
    for (int i : c.denseIdx) member[i] = 1;
    Mask mask(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) mask(y, x) = member[st.indexOf.at(labels(y, x))] != 0;

    long perimeter = 0, borderPerimeter = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!mask(y, x)) continue;
        const bool onBorder = x == 0 || y == 0 || x == w - 1 || y == h - 1;
        const bool edgePixel = onBorder || !mask(y, x - 1) || !mask(y, x + 1) ||
                               !mask(y - 1, x) || !mask(y + 1, x);
        if (edgePixel) {
          ++perimeter;
          if (onBorder) ++borderPerimeter;
        }
      }
    const double contact = perimeter > 0 ? static_cast<double>(borderPerimeter) / perimeter : 0.0;

    const Mask ring = surroundRing(mask);
    double contrast = 0;
    if (ring.any()) {
      contrast = chiSquared(colorHistogram(frame, lab, mask), colorHistogram(frame, lab, ring));
    }
    c.objectness = 0.5 * (1.0 - contact) + 0.5 * contrast;
  }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.objectness != b.objectness) return a.objectness > b.objectness;
    if (a.area != b.area) return a.area < b.area;
    return a.denseIdx < b.denseIdx;
  });

  // greedy near-duplicate suppression on superpixel index sets
  std::vector<const Candidate*> kept;
  for (const Candidate& c : candidates) {
    bool dup = false;
    for (const Candidate* k : kept) {
      const long inter = intersectionArea(c.denseIdx, k->denseIdx, st.size);
      const long uni = c.area + k->area - inter;
      if (uni > 0 && static_cast<double>(inter) / uni > opts.dedupIou) {
        dup = true;
        break;
      }
    }
    if (!dup) kept.push_back(&c);
    if (static_cast<int>(kept.size()) >= opts.maxPerFrame) break;
  }

  std::vector<Proposal> out;
  out.reserve(kept.size());
  for (size_t r = 0; r < kept.size(); ++r) {
    const Candidate& c = *kept[r];
    std::vector<char> member(st.labels.size(), 0);
    for (int i : c.denseIdx) member[i] = 1;
    Proposal p;
    p.videoId = videoId;
    p.frame = frameIdx;
    p.mask.resize(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) p.mask(y, x) = member[st.indexOf.at(labels(y, x))] != 0;
    p.tcsLabels = labelsOfMask(spm, frameIdx, p.mask);
    p.objectness = c.objectness;
    p.motion = 0;
    p.combined = p.objectness;
    p.rank = static_cast<int>(r);
    p.origin = ProposalOrigin::Generated;
    out.push_back(std::move(p));
  }
  return out;
}

double motionChiSquared(const Mask& mask, const FlowField& flow) {
  if (maskEmpty(mask)) throw std::runtime_error("motionChiSquared: empty mask");
  const Mask ring = surroundRing(mask);
  if (!ring.any()) return 0.0;  // mask fills the frame
  return chiSquared(flowHistogram(flow, mask), flowHistogram(flow, ring));
}

double motionScoreFromChi(double chi2, double meanChi2) {
  if (meanChi2 <= 0) return 0.0;
  return 1.0 - std::exp(-chi2 / meanChi2);
}

double scoreProposals(std::vector<std::vector<Proposal>>& perFrame, const Video& video,
                      const std::vector<LabImage>& labs, const std::vector<FlowField>& flows) {
  if (perFrame.size() != video.frames.size() || flows.size() != video.frames.size())
    throw std::runtime_error("scoreProposals: per-frame lists must align with frames and flows");

  double chiSum = 0;
  long chiCount = 0;
  for (size_t f = 0; f < perFrame.size(); ++f) {
    for (Proposal& p : perFrame[f]) {
      p.flowChi2 = motionChiSquared(p.mask, flows[f]);
      chiSum += p.flowChi2;
      ++chiCount;
    }
  }
  const double meanChi2 = chiCount > 0 ? chiSum / chiCount : 0.0;

  for (size_t f = 0; f < perFrame.size(); ++f) {
    for (Proposal& p : perFrame[f]) {
      p.motion = motionScoreFromChi(p.flowChi2, meanChi2);
      p.combined = p.objectness + p.motion;
      p.feature = regionFeature(video.frames[f], labs[f], p.mask);
    }
    std::stable_sort(perFrame[f].begin(), perFrame[f].end(),
                     [](const Proposal& a, const Proposal& b) { return a.combined > b.combined; });
    for (size_t r = 0; r < perFrame[f].size(); ++r) perFrame[f][r].rank = static_cast<int>(r);
  }
  return meanChi2;
}

}  // namespace coseg
