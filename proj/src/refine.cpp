#include "coseg/refine.hpp"

#include "coseg/kmeans.hpp"
#include "coseg/maxflow.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace coseg {

namespace {

constexpr double kCapScale = 1e6;
constexpr double kProbFloor = 1e-6;
constexpr double kModelEps = 1.0;
constexpr double kPriorTau = 3.0;  // px, decay of the stream-mask distance prior

Imagei maskDistance(const Mask& m);

// background pooling keeps a 2px guard band away from the mask so that mask
// boundary pixels cannot poison the background model
Eigen::MatrixXd pooledSamples(const std::vector<LabImage>& labs, const Stream& stream,
                              bool foreground, long cap) {
  constexpr int kBand = 2;
  std::vector<Eigen::Vector3d> pts;
  std::map<int, Imagei> dists;
  if (!foreground)
    for (const auto& [f, p] : stream.entries) dists.emplace(f, maskDistance(p.mask));
  long total = 0;
  for (const auto& [f, p] : stream.entries) {
    if (foreground) {
      total += maskArea(p.mask);
    } else {
      const Imagei& d = dists.at(f);
      total += (d.array() > kBand).count();
    }
  }
  const bool bandedEmpty = !foreground && total == 0;
  if (bandedEmpty) {  // no far-away pixels: fall back to the full complement
    for (const auto& [f, p] : stream.entries) total += p.mask.size() - maskArea(p.mask);
  }
  const long stride = std::max<long>(1, (total + cap - 1) / cap);
  long i = 0;
  for (const auto& [f, p] : stream.entries) {
    const LabImage& li = labs[f];
    for (int y = 0; y < p.mask.rows(); ++y)
      for (int x = 0; x < p.mask.cols(); ++x) {
        bool take;
        if (foreground) {
          take = p.mask(y, x);
        } else if (bandedEmpty) {
          take = !p.mask(y, x);
        } else {
          take = !p.mask(y, x) && dists.at(f)(y, x) > kBand;
        }
        if (!take) continue;
        if (i % stride == 0) pts.emplace_back(li.l(y, x), li.a(y, x), li.b(y, x));
        ++i;
      }
  }
  Eigen::MatrixXd m(static_cast<int>(pts.size()), 3);
  for (size_t j = 0; j < pts.size(); ++j) m.row(static_cast<int>(j)) = pts[j];
  return m;
}

double codebookDist(const Eigen::MatrixXd& centers, float l, float a, float b) {
  double best = std::numeric_limits<double>::max();
  for (int c = 0; c < centers.rows(); ++c) {
    const double dl = l - centers(c, 0), da = a - centers(c, 1), db = b - centers(c, 2);
    best = std::min(best, std::sqrt(dl * dl + da * da + db * db));
  }
  return best;
}

// integer 4-neighbor distance to the mask (0 inside)
Imagei maskDistance(const Mask& m) {
  const int h = static_cast<int>(m.rows());
  const int w = static_cast<int>(m.cols());
  Imagei dist = Imagei::Constant(h, w, std::numeric_limits<int>::max());
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (m(y, x)) {
        dist(y, x) = 0;
        queue.emplace_back(y, x);
      }
  while (!queue.empty()) {
    auto [y, x] = queue.front();
    queue.pop_front();
    const int nx[4] = {x - 1, x + 1, x, x};
    const int ny[4] = {y, y, y - 1, y + 1};
    for (int k = 0; k < 4; ++k) {
      if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
      if (dist(ny[k], nx[k]) > dist(y, x) + 1) {
        dist(ny[k], nx[k]) = dist(y, x) + 1;
        queue.emplace_back(ny[k], nx[k]);
      }
    }
  }
  return dist;
}

}  // namespace

VideoSegmentation refineStreams(const Video& video, const std::vector<FlowField>& flows,
                                const std::vector<Stream>& selected, const RefineOptions& opts) {
  const int t = video.frameCount();
  const int w = video.width(), h = video.height();
  if (static_cast<int>(flows.size()) < t - 1)
    throw std::runtime_error("refineStreams: need flow per consecutive frame pair");
  for (const Stream& s : selected)
    if (s.videoId != video.id)
      throw std::runtime_error("refineStreams: stream from wrong video " + s.videoId);

  std::vector<LabImage> labs;
  labs.reserve(t);
  for (const Frame& f : video.frames) labs.push_back(rgbToLab(f));

  // shared contrast scale over the whole video
  double sigma2 = 0;
  long pairs = 0;
  for (int f = 0; f < t; ++f) {
    const LabImage& li = labs[f];
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (x + 1 < w) {
          const double dl = li.l(y, x) - li.l(y, x + 1), da = li.a(y, x) - li.a(y, x + 1),
                       db = li.b(y, x) - li.b(y, x + 1);
          sigma2 += dl * dl + da * da + db * db;
          ++pairs;
        }
        if (y + 1 < h) {
          const double dl = li.l(y, x) - li.l(y + 1, x), da = li.a(y, x) - li.a(y + 1, x),
                       db = li.b(y, x) - li.b(y + 1, x);
          sigma2 += dl * dl + da * da + db * db;
          ++pairs;
        }
      }
  }
  sigma2 = std::max(1e-6, sigma2 / std::max<long>(1, pairs));

  VideoSegmentation seg;
  seg.videoId = video.id;
  seg.objectMasks.resize(selected.size());
  std::vector<std::vector<Imagef>> fgProb(selected.size());  // kept for overlap resolution

  for (size_t obj = 0; obj < selected.size(); ++obj) {
    const Stream& stream = selected[obj];
    const Eigen::MatrixXd fgPts = pooledSamples(labs, stream, true, 8000);
    const Eigen::MatrixXd bgPts = pooledSamples(labs, stream, false, 8000);
    if (fgPts.rows() == 0 || bgPts.rows() == 0)
      throw std::runtime_error("refineStreams: degenerate stream masks");
    const int kFg = std::min<int>(opts.colorClusters, static_cast<int>(fgPts.rows()));
    const int kBg = std::min<int>(opts.colorClusters, static_cast<int>(bgPts.rows()));
    const Eigen::MatrixXd fgC =
        kmeans(fgPts, kFg, opts.seed + 2 * static_cast<std::uint32_t>(obj)).centers;
    const Eigen::MatrixXd bgC =
        kmeans(bgPts, kBg, opts.seed + 2 * static_cast<std::uint32_t>(obj) + 1).centers;

    const long perFrame = static_cast<long>(w) * h;
    const long nodes = perFrame * t;
    BkMaxFlow g(static_cast<int>(nodes) + 2, static_cast<int>(nodes),
                static_cast<int>(nodes) + 1);
    auto nodeId = [&](int f, int y, int x) {
      return static_cast<int>(f * perFrame + y * static_cast<long>(w) + x);
    };

    std::vector<Imagef> prob(t);
    for (int f = 0; f < t; ++f) {
      prob[f].resize(h, w);
      const LabImage& li = labs[f];
      const auto entry = stream.entries.find(f);
      Imagei dist;
      if (entry != stream.entries.end()) dist = maskDistance(entry->second.mask);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double dFg = codebookDist(fgC, li.l(y, x), li.a(y, x), li.b(y, x));
          const double dBg = codebookDist(bgC, li.l(y, x), li.a(y, x), li.b(y, x));
          double p = (dBg + kModelEps) / (dFg + dBg + 2 * kModelEps);
          if (entry != stream.entries.end()) {
            const double prior = std::exp(-dist(y, x) / kPriorTau);
            p = (1.0 - opts.priorBlend) * p + opts.priorBlend * prior;
          }
          p = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
          prob[f](y, x) = static_cast<float>(p);
          const auto capFg = static_cast<std::int64_t>(std::llround(-std::log(p) * kCapScale));
          const auto capBg =
              static_cast<std::int64_t>(std::llround(-std::log(1.0 - p) * kCapScale));
          g.addArc(static_cast<int>(nodes), nodeId(f, y, x), capBg);
          g.addArc(nodeId(f, y, x), static_cast<int>(nodes) + 1, capFg);
        }
    }

    for (int f = 0; f < t; ++f) {
      const LabImage& li = labs[f];
      auto contrastCap = [&](float l0, float a0, float b0, float l1, float a1, float b1,
                             double weight) {
        const double dl = l0 - l1, da = a0 - a1, db = b0 - b1;
        const double wgt = weight * std::exp(-(dl * dl + da * da + db * db) / (2 * sigma2));
        return static_cast<std::int64_t>(std::llround(wgt * kCapScale));
      };
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          if (x + 1 < w) {
            const auto cap = contrastCap(li.l(y, x), li.a(y, x), li.b(y, x), li.l(y, x + 1),
                                         li.a(y, x + 1), li.b(y, x + 1), opts.smoothness);
            g.addArc(nodeId(f, y, x), nodeId(f, y, x + 1), cap, cap);
          }
          if (y + 1 < h) {
            const auto cap = contrastCap(li.l(y, x), li.a(y, x), li.b(y, x), li.l(y + 1, x),
                                         li.a(y + 1, x), li.b(y + 1, x), opts.smoothness);
            g.addArc(nodeId(f, y, x), nodeId(f, y + 1, x), cap, cap);
          }
          if (f + 1 < t) {
            const int x2 = static_cast<int>(std::lround(x + flows[f].dx(y, x)));
            const int y2 = static_cast<int>(std::lround(y + flows[f].dy(y, x)));
            if (x2 >= 0 && x2 < w && y2 >= 0 && y2 < h) {
              const auto cap =
                  contrastCap(li.l(y, x), li.a(y, x), li.b(y, x), labs[f + 1].l(y2, x2),
                              labs[f + 1].a(y2, x2), labs[f + 1].b(y2, x2), opts.temporalWeight);
              g.addArc(nodeId(f, y, x), nodeId(f + 1, y2, x2), cap, cap);
            }
          }
        }
    }

    g.solve();
    seg.objectMasks[obj].resize(t);
    for (int f = 0; f < t; ++f) {
      Mask m(h, w);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m(y, x) = g.sourceSide(nodeId(f, y, x));
      seg.objectMasks[obj][f] = std::move(m);
    }
    fgProb[obj] = std::move(prob);
  }

  // overlapping objects: the higher foreground likelihood wins, ties to the
  // lower object index
  for (int f = 0; f < t; ++f)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        int winner = -1;
        float bestP = -1;
        for (size_t obj = 0; obj < selected.size(); ++obj) {
          if (!seg.objectMasks[obj][f](y, x)) continue;
          if (fgProb[obj][f](y, x) > bestP) {
            bestP = fgProb[obj][f](y, x);
            winner = static_cast<int>(obj);
          }
        }
        if (winner >= 0)
          for (size_t obj = 0; obj < selected.size(); ++obj)
            if (static_cast<int>(obj) != winner) seg.objectMasks[obj][f](y, x) = false;
      }
  return seg;
}

}  // namespace coseg
