#include "coseg/graphcut.hpp"

#include "coseg/kmeans.hpp"
#include "coseg/maxflow.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace coseg {

namespace {

constexpr double kCapScale = 1e6;
constexpr double kProbFloor = 1e-6;
constexpr double kModelEps = 1.0;  // Lab units; keeps the ratio neutral when both models match

Eigen::MatrixXd sampleLab(const LabImage& lab, const Mask& sel, long cap) {
  std::vector<Eigen::Vector3d> pts;
  const long total = static_cast<long>(sel.count());
  const long stride = std::max<long>(1, (total + cap - 1) / cap);
  long i = 0;
  for (int y = 0; y < sel.rows(); ++y)
    for (int x = 0; x < sel.cols(); ++x)
      if (sel(y, x)) {
        if (i % stride == 0) pts.emplace_back(lab.l(y, x), lab.a(y, x), lab.b(y, x));
        ++i;
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

}  // namespace

Mask colorModelCut(const LabImage& lab, const Mask& seed, const GraphCutOptions& opts) {
  const int h = static_cast<int>(lab.l.rows());
  const int w = static_cast<int>(lab.l.cols());
  Mask out = Mask::Constant(h, w, false);
  if (!seed.any()) return out;

  int x0 = w, y0 = h, x1 = -1, y1 = -1;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (seed(y, x)) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
  const int padX = std::max(4, static_cast<int>(std::lround(0.25 * (x1 - x0 + 1))));
  const int padY = std::max(4, static_cast<int>(std::lround(0.25 * (y1 - y0 + 1))));
  x0 = std::max(0, x0 - padX);
  y0 = std::max(0, y0 - padY);
  x1 = std::min(w - 1, x1 + padX);
  y1 = std::min(h - 1, y1 + padY);
  const int rw = x1 - x0 + 1, rh = y1 - y0 + 1;

  // background samples keep a guard band away from the seed so that seed
  // boundary pixels cannot poison the background model
  Mask banded = seed;
  for (int pass = 0; pass < 2; ++pass) {
    Mask grown = banded;
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        if (banded(y, x)) continue;
        if ((x > 0 && banded(y, x - 1)) || (x + 1 < w && banded(y, x + 1)) ||
            (y > 0 && banded(y - 1, x)) || (y + 1 < h && banded(y + 1, x)))
          grown(y, x) = true;
      }
    banded = std::move(grown);
  }
  Mask ring = Mask::Constant(h, w, false);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) ring(y, x) = !banded(y, x);
  if (!ring.any()) {
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) ring(y, x) = !seed(y, x);
  }
  if (!ring.any()) return seed;  // seed fills the ROI, nothing to model against

  const Eigen::MatrixXd fgPts = sampleLab(lab, seed, 4000);
  const Eigen::MatrixXd bgPts = sampleLab(lab, ring, 4000);
  const int kFg = std::min<int>(opts.colorClusters, static_cast<int>(fgPts.rows()));
  const int kBg = std::min<int>(opts.colorClusters, static_cast<int>(bgPts.rows()));
  const Eigen::MatrixXd fgC = kmeans(fgPts, kFg, opts.seed).centers;
  const Eigen::MatrixXd bgC = kmeans(bgPts, kBg, opts.seed + 1).centers;

  // contrast scale from the ROI's neighbor color differences
  double sigma2 = 0;
  long nPairs = 0;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      if (x + 1 <= x1) {
        const double dl = lab.l(y, x) - lab.l(y, x + 1), da = lab.a(y, x) - lab.a(y, x + 1),
                     db = lab.b(y, x) - lab.b(y, x + 1);
        sigma2 += dl * dl + da * da + db * db;
        ++nPairs;
      }
      if (y + 1 <= y1) {
        const double dl = lab.l(y, x) - lab.l(y + 1, x), da = lab.a(y, x) - lab.a(y + 1, x),
                     db = lab.b(y, x) - lab.b(y + 1, x);
        sigma2 += dl * dl + da * da + db * db;
        ++nPairs;
      }
    }
  sigma2 = std::max(1e-6, sigma2 / std::max<long>(1, nPairs));

  // seed-distance prior keeps the cut anchored to the seed when the color
  // models cannot separate (e.g. seed boundary pixels on both sides)
  constexpr double kPriorTau = 3.0;
  Imagef seedDist(rh, rw);
  {
    std::vector<std::pair<int, int>> queue;
    Imagei d = Imagei::Constant(rh, rw, std::numeric_limits<int>::max());
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if (seed(y, x)) {
          d(y - y0, x - x0) = 0;
          queue.emplace_back(y - y0, x - x0);
        }
    for (size_t qi = 0; qi < queue.size(); ++qi) {
      const auto [cy, cx] = queue[qi];
      const int ny[4] = {cy - 1, cy + 1, cy, cy};
      const int nx[4] = {cx, cx, cx - 1, cx + 1};
      for (int k = 0; k < 4; ++k) {
        if (ny[k] < 0 || ny[k] >= rh || nx[k] < 0 || nx[k] >= rw) continue;
        if (d(ny[k], nx[k]) > d(cy, cx) + 1) {
          d(ny[k], nx[k]) = d(cy, cx) + 1;
          queue.emplace_back(ny[k], nx[k]);
        }
      }
    }
    for (int y = 0; y < rh; ++y)
      for (int x = 0; x < rw; ++x)
        seedDist(y, x) = d(y, x) == std::numeric_limits<int>::max()
                             ? 1e6f
                             : static_cast<float>(d(y, x));
  }

  auto nodeId = [&](int y, int x) { return (y - y0) * rw + (x - x0); };
  const int n = rw * rh;
  BkMaxFlow g(n + 2, n, n + 1);

  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dFg = codebookDist(fgC, lab.l(y, x), lab.a(y, x), lab.b(y, x));
      const double dBg = codebookDist(bgC, lab.l(y, x), lab.a(y, x), lab.b(y, x));
      double pFg = (dBg + kModelEps) / (dFg + dBg + 2 * kModelEps);
      const double prior = std::exp(-seedDist(y - y0, x - x0) / kPriorTau);
      pFg = (1.0 - opts.priorBlend) * pFg + opts.priorBlend * prior;
      pFg = std::clamp(pFg, kProbFloor, 1.0 - kProbFloor);
      const auto capFg = static_cast<std::int64_t>(std::llround(-std::log(pFg) * kCapScale));
      const auto capBg = static_cast<std::int64_t>(std::llround(-std::log(1.0 - pFg) * kCapScale));
      g.addArc(n, nodeId(y, x), capBg);      // cut when labeled background
      g.addArc(nodeId(y, x), n + 1, capFg);  // cut when labeled foreground
    }

  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      auto link = [&](int y2, int x2) {
        const double dl = lab.l(y, x) - lab.l(y2, x2), da = lab.a(y, x) - lab.a(y2, x2),
                     db = lab.b(y, x) - lab.b(y2, x2);
        const double d2 = dl * dl + da * da + db * db;
        const double wgt = opts.smoothness * std::exp(-d2 / (2 * sigma2));
        const auto cap = static_cast<std::int64_t>(std::llround(wgt * kCapScale));
        g.addArc(nodeId(y, x), nodeId(y2, x2), cap, cap);
      };
      if (x + 1 <= x1) link(y, x + 1);
      if (y + 1 <= y1) link(y + 1, x);
    }

  g.solve();
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) out(y, x) = g.sourceSide(nodeId(y, x));
  return out;
}

}  // namespace coseg
