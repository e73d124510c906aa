#include "coseg/tcs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace coseg {

namespace {

struct SlicCenter {
  float l, a, b, x, y;
};

// connected components over equal labels, 4-connectivity, raster seed order
struct Components {
  Imagei compId;                     // per pixel
  std::vector<int> compLabel;        // original label per component
  std::vector<int> compSize;
  std::vector<int> compFirstPixel;   // raster index of first pixel
};

Components connectedComponents(const Imagei& labels) {
  const int h = static_cast<int>(labels.rows());
  const int w = static_cast<int>(labels.cols());
  Components cc;
  cc.compId = Imagei::Constant(h, w, -1);
  std::vector<int> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (cc.compId(y, x) >= 0) continue;
      const int id = static_cast<int>(cc.compLabel.size());
      const int lbl = labels(y, x);
      cc.compLabel.push_back(lbl);
      cc.compSize.push_back(0);
      cc.compFirstPixel.push_back(y * w + x);
      stack.push_back(y * w + x);
      cc.compId(y, x) = id;
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        cc.compSize[id]++;
        const int px = p % w, py = p / w;
        const int nx[4] = {px - 1, px + 1, px, px};
        const int ny[4] = {py, py, py - 1, py + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
          if (cc.compId(ny[k], nx[k]) >= 0 || labels(ny[k], nx[k]) != lbl) continue;
          cc.compId(ny[k], nx[k]) = id;
          stack.push_back(ny[k] * w + nx[k]);
        }
      }
    }
  }
  return cc;
}

}  // namespace

Imagei slicSegment(const LabImage& lab, int targetCount, const TcsOptions& opts) {
  const int h = static_cast<int>(lab.l.rows());
  const int w = static_cast<int>(lab.l.cols());
  if (targetCount < 1) throw std::runtime_error("slicSegment: targetCount must be >= 1");

  const double s = std::sqrt(static_cast<double>(w) * h / targetCount);
  const int nx = std::max(1, static_cast<int>(std::lround(w / s)));
  const int ny = std::max(1, static_cast<int>(std::lround(h / s)));

  // gradient magnitude for seed perturbation
  Imagef grad(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - 1), x1 = std::min(w - 1, x + 1);
      const int y0 = std::max(0, y - 1), y1 = std::min(h - 1, y + 1);
      const float gx = lab.l(y, x1) - lab.l(y, x0);
      const float gy = lab.l(y1, x) - lab.l(y0, x);
      const float ax = lab.a(y, x1) - lab.a(y, x0);
      const float ay = lab.a(y1, x) - lab.a(y0, x);
      const float bx = lab.b(y, x1) - lab.b(y, x0);
      const float by = lab.b(y1, x) - lab.b(y0, x);
      grad(y, x) = gx * gx + gy * gy + ax * ax + ay * ay + bx * bx + by * by;
    }

  std::vector<SlicCenter> centers;
  centers.reserve(static_cast<size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      int cx = static_cast<int>((i + 0.5) * w / nx);
      int cy = static_cast<int>((j + 0.5) * h / ny);
      cx = std::clamp(cx, 0, w - 1);
      cy = std::clamp(cy, 0, h - 1);
      // move seed to the lowest-gradient spot in its 3x3 neighborhood
      int bx = cx, by = cy;
      float bg = grad(cy, cx);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = cx + dx, yy = cy + dy;
          if (xx < 0 || xx >= w || yy < 0 || yy >= h) continue;
          if (grad(yy, xx) < bg) {
            bg = grad(yy, xx);
            bx = xx;
            by = yy;
          }
        }
      centers.push_back({lab.l(by, bx), lab.a(by, bx), lab.b(by, bx), static_cast<float>(bx),
                         static_cast<float>(by)});
    }
  }

  const float invS2 = static_cast<float>((opts.compactness * opts.compactness) / (s * s));
  const int win = std::max(2, static_cast<int>(std::lround(s)));
  Imagei assign(h, w);
  Imagef best(h, w);
  for (int it = 0; it < opts.slicIters; ++it) {
    assign.setConstant(-1);
    best.setConstant(std::numeric_limits<float>::max());
    for (size_t c = 0; c < centers.size(); ++c) {
      const SlicCenter& ct = centers[c];
      const int x0 = std::max(0, static_cast<int>(ct.x) - win);
      const int x1 = std::min(w - 1, static_cast<int>(ct.x) + win);
      const int y0 = std::max(0, static_cast<int>(ct.y) - win);
      const int y1 = std::min(h - 1, static_cast<int>(ct.y) + win);
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const float dl = lab.l(y, x) - ct.l;
          const float da = lab.a(y, x) - ct.a;
          const float db = lab.b(y, x) - ct.b;
          const float dx = x - ct.x, dy = y - ct.y;
          const float d = dl * dl + da * da + db * db + invS2 * (dx * dx + dy * dy);
          if (d < best(y, x)) {
            best(y, x) = d;
            assign(y, x) = static_cast<int>(c);
          }
        }
    }
    // any pixel outside every search window: nearest center spatially
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (assign(y, x) < 0) {
          float bd = std::numeric_limits<float>::max();
          for (size_t c = 0; c < centers.size(); ++c) {
            const float dx = x - centers[c].x, dy = y - centers[c].y;
            const float d = dx * dx + dy * dy;
            if (d < bd) {
              bd = d;
              assign(y, x) = static_cast<int>(c);
            }
          }
        }
    // update centers
    std::vector<Eigen::Matrix<double, 5, 1>> acc(centers.size(),
                                                 Eigen::Matrix<double, 5, 1>::Zero());
    std::vector<int> cnt(centers.size(), 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int c = assign(y, x);
        acc[c] += (Eigen::Matrix<double, 5, 1>() << lab.l(y, x), lab.a(y, x), lab.b(y, x), x, y)
                      .finished();
        cnt[c]++;
      }
    for (size_t c = 0; c < centers.size(); ++c) {
      if (cnt[c] == 0) continue;
      const auto m = acc[c] / cnt[c];
      centers[c] = {static_cast<float>(m(0)), static_cast<float>(m(1)), static_cast<float>(m(2)),
                    static_cast<float>(m(3)), static_cast<float>(m(4))};
    }
  }

  // connectivity: the largest component keeps its label, stray fragments are
  // absorbed by the neighboring component they touch most
  Components cc = connectedComponents(assign);
  const int nComp = static_cast<int>(cc.compLabel.size());
  std::vector<char> primary(nComp, 0);
  {
    std::map<int, int> bestComp;  // label -> comp id with max size
    for (int c = 0; c < nComp; ++c) {
      auto it = bestComp.find(cc.compLabel[c]);
      if (it == bestComp.end() || cc.compSize[c] > cc.compSize[it->second]) {
        bestComp[cc.compLabel[c]] = c;
      }
    }
    for (auto& [lbl, c] : bestComp) primary[c] = 1;
  }
  std::vector<int> finalOf(nComp, -1);
  int nextFinal = 0;
  for (int c = 0; c < nComp; ++c)
    if (primary[c]) finalOf[c] = nextFinal++;

  // resolve stray components against already-resolved neighbors
  bool progress = true;
  while (progress) {
    progress = false;
    for (int c = 0; c < nComp; ++c) {
      if (finalOf[c] >= 0) continue;
      std::map<int, int> adjVotes;  // resolved final label -> boundary count
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          if (cc.compId(y, x) != c) continue;
          const int nx4[4] = {x - 1, x + 1, x, x};
          const int ny4[4] = {y, y, y - 1, y + 1};
          for (int k = 0; k < 4; ++k) {
            if (nx4[k] < 0 || nx4[k] >= w || ny4[k] < 0 || ny4[k] >= h) continue;
            const int oc = cc.compId(ny4[k], nx4[k]);
            if (oc != c && finalOf[oc] >= 0) adjVotes[finalOf[oc]]++;
          }
        }
      if (adjVotes.empty()) continue;
      int bestLbl = -1, bestVotes = -1;
      for (auto& [lbl, v] : adjVotes)
        if (v > bestVotes) {
          bestVotes = v;
          bestLbl = lbl;
        }
      finalOf[c] = bestLbl;
      progress = true;
    }
  }
  for (int c = 0; c < nComp; ++c)
    if (finalOf[c] < 0) finalOf[c] = 0;  // unreachable unless the image is one component

  Imagei out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(y, x) = finalOf[cc.compId(y, x)];
  return out;
}

namespace {

// mean Lab color per label present in one frame
std::map<int, Eigen::Vector3f> labelMeans(const Imagei& labels, const LabImage& lab) {
  std::map<int, Eigen::Vector3f> sums;
  std::map<int, int> counts;
  const int h = static_cast<int>(labels.rows());
  const int w = static_cast<int>(labels.cols());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int l = labels(y, x);
      auto [it, fresh] = sums.try_emplace(l, Eigen::Vector3f::Zero());
      it->second += Eigen::Vector3f(lab.l(y, x), lab.a(y, x), lab.b(y, x));
      counts[l]++;
    }
  for (auto& [l, s] : sums) s /= static_cast<float>(counts[l]);
  return sums;
}

}  // namespace

SuperpixelMap computeTcs(const Video& video, const std::vector<FlowField>& flows, int targetCount,
                         const TcsOptions& opts) {
  const int t = video.frameCount();
  if (static_cast<int>(flows.size()) != t - 1)
    throw std::runtime_error("computeTcs: flow list length must be frames - 1");
  if (targetCount < 16) throw std::runtime_error("computeTcs: targetCount must be >= 16");

  SuperpixelMap spm;
  spm.labels.reserve(t);

  std::vector<LabImage> labs;
  labs.reserve(t);
  for (const Frame& f : video.frames) labs.push_back(rgbToLab(f));

  spm.labels.push_back(slicSegment(labs[0], targetCount, opts));
  spm.labelCount = spm.labels[0].maxCoeff() + 1;
  std::map<int, Eigen::Vector3f> prevMeans = labelMeans(spm.labels[0], labs[0]);

  const int h = video.height(), w = video.width();
  for (int f = 1; f < t; ++f) {
    const Imagei temp = slicSegment(labs[f], targetCount, opts);
    const int tempCount = temp.maxCoeff() + 1;
    const Imagei& prev = spm.labels[f - 1];
    const FlowField& flow = flows[f - 1];

    // forward-warp previous labels and tally votes per temp superpixel
    std::vector<std::map<int, int>> votes(tempCount);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int qx = static_cast<int>(std::lround(x + flow.dx(y, x)));
        const int qy = static_cast<int>(std::lround(y + flow.dy(y, x)));
        if (qx < 0 || qx >= w || qy < 0 || qy >= h) continue;
        votes[temp(qy, qx)][prev(y, x)]++;
      }

    // greedy weighted matching over all vote pairs: a superpixel that loses
    // its best predecessor can still inherit its next-best overlap
    struct Claim {
      int tempId, prevLabel, count;
    };
    std::vector<Claim> claims;
    for (int c = 0; c < tempCount; ++c)
      for (auto& [lbl, cnt] : votes[c]) claims.push_back({c, lbl, cnt});
    std::sort(claims.begin(), claims.end(), [](const Claim& a, const Claim& b) {
      if (a.count != b.count) return a.count > b.count;
      if (a.tempId != b.tempId) return a.tempId < b.tempId;
      return a.prevLabel < b.prevLabel;
    });

    const std::map<int, Eigen::Vector3f> tempMeans = labelMeans(temp, labs[f]);
    std::vector<int> inherited(tempCount, -1);
    std::vector<char> taken(spm.labelCount, 0);
    for (const Claim& cl : claims) {
      if (inherited[cl.tempId] >= 0 || taken[cl.prevLabel]) continue;
      const Eigen::Vector3f d = tempMeans.at(cl.tempId) - prevMeans.at(cl.prevLabel);
      if (d.norm() > opts.colorGate) continue;
      inherited[cl.tempId] = cl.prevLabel;
      taken[cl.prevLabel] = 1;
    }
    for (int c = 0; c < tempCount; ++c)
      if (inherited[c] < 0) inherited[c] = spm.labelCount++;

    Imagei out(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out(y, x) = inherited[temp(y, x)];
    spm.labels.push_back(std::move(out));
    prevMeans = labelMeans(spm.labels[f], labs[f]);
  }
  return spm;
}

std::vector<int> labelsOfMask(const SuperpixelMap& spm, int frame, const Mask& mask) {
  if (frame < 0 || frame >= spm.frameCount()) throw std::runtime_error("labelsOfMask: bad frame");
  const Imagei& labels = spm.labels[frame];
  if (labels.rows() != mask.rows() || labels.cols() != mask.cols())
    throw std::runtime_error("labelsOfMask: mask dimension mismatch");
  std::map<int, std::pair<int, int>> counts;  // label -> (inside, total)
  for (int y = 0; y < labels.rows(); ++y)
    for (int x = 0; x < labels.cols(); ++x) {
      auto& c = counts[labels(y, x)];
      c.second++;
      if (mask(y, x)) c.first++;
    }
  std::vector<int> out;
  for (auto& [lbl, c] : counts)
    if (2 * c.first >= c.second && c.first > 0) out.push_back(lbl);
  return out;
}

Mask maskOfLabels(const SuperpixelMap& spm, int frame, const std::vector<int>& labels) {
  if (frame < 0 || frame >= spm.frameCount()) throw std::runtime_error("maskOfLabels: bad frame");
  const Imagei& img = spm.labels[frame];
  std::vector<char> wanted(spm.labelCount, 0);
  for (int l : labels)
    if (l >= 0 && l < spm.labelCount) wanted[l] = 1;
  Mask out(img.rows(), img.cols());
  for (int y = 0; y < img.rows(); ++y)
    for (int x = 0; x < img.cols(); ++x) out(y, x) = wanted[img(y, x)] != 0;
  return out;
}

}  // namespace coseg
