#include "coseg/features.hpp"

#include "coseg/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace coseg {

double combinedChiSquared(double chiColor, double chiShape, double colorWeight) {
  if (colorWeight <= 0) throw std::runtime_error("colorWeight must be > 0");
  return (colorWeight * chiColor + chiShape) / (colorWeight + 1.0);
}

double featureDistance(const RegionFeature& f1, const RegionFeature& f2, double colorWeight) {
  return combinedChiSquared(chiSquared(f1.colorHist, f2.colorHist),
                            chiSquared(f1.shapeHist, f2.shapeHist), colorWeight);
}

namespace {

inline int binIndex(float v, float lo, float hi, int bins) {
  const int b = static_cast<int>((v - lo) / (hi - lo) * bins);
  return std::clamp(b, 0, bins - 1);
}

struct BBox {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
};

BBox maskBBox(const Mask& m) {
  BBox b{static_cast<int>(m.cols()), static_cast<int>(m.rows()), -1, -1};
  for (int y = 0; y < m.rows(); ++y)
    for (int x = 0; x < m.cols(); ++x)
      if (m(y, x)) {
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x);
        b.y1 = std::max(b.y1, y);
      }
  return b;
}

}  // namespace

Histogram colorHistogram(const Frame& frame, const LabImage& lab, const Mask& mask) {
  if (mask.rows() != frame.r.rows() || mask.cols() != frame.r.cols())
    throw std::runtime_error("colorHistogram: mask dimension mismatch");
  if (maskEmpty(mask)) throw std::runtime_error("colorHistogram: empty mask");
  Histogram h = Histogram::Zero(kColorBins);
  for (int y = 0; y < mask.rows(); ++y)
    for (int x = 0; x < mask.cols(); ++x) {
      if (!mask(y, x)) continue;
      h(binIndex(lab.l(y, x), 0.f, 100.f, 13)) += 1;
      h(13 + binIndex(lab.a(y, x), -110.f, 110.f, 13)) += 1;
      h(26 + binIndex(lab.b(y, x), -110.f, 110.f, 13)) += 1;
      h(39 + binIndex(frame.r(y, x), 0.f, 256.f, 26)) += 1;
      h(65 + binIndex(frame.g(y, x), 0.f, 256.f, 26)) += 1;
      h(91 + binIndex(frame.b(y, x), 0.f, 256.f, 26)) += 1;
    }
  return h / h.sum();
}

Histogram colorHistogram(const Frame& frame, const Mask& mask) {
  return colorHistogram(frame, rgbToLab(frame), mask);
}

Histogram shapeHistogram(const Frame& frame, const Mask& mask) {
  if (mask.rows() != frame.r.rows() || mask.cols() != frame.r.cols())
    throw std::runtime_error("shapeHistogram: mask dimension mismatch");
  if (maskEmpty(mask)) throw std::runtime_error("shapeHistogram: empty mask");

  const Imagef gray = grayscale(frame);
  const BBox bb = maskBBox(mask);
  const int h = static_cast<int>(gray.rows());
  const int w = static_cast<int>(gray.cols());

  Eigen::Matrix<double, 9, 9> cells;  // row = cell (3x3 flattened), col = orientation
  cells.setZero();
  constexpr double kPi = std::numbers::pi;
  for (int y = bb.y0; y <= bb.y1; ++y) {
    for (int x = bb.x0; x <= bb.x1; ++x) {
      if (!mask(y, x)) continue;
      const float gx = 0.5f * (gray(y, std::min(x + 1, w - 1)) - gray(y, std::max(x - 1, 0)));
      const float gy = 0.5f * (gray(std::min(y + 1, h - 1), x) - gray(std::max(y - 1, 0), x));
      const double mag = std::hypot(gx, gy);
      if (mag <= 0) continue;
      double theta = std::atan2(gy, gx);
      if (theta < 0) theta += kPi;
      if (theta >= kPi) theta -= kPi;
      const int ori = std::min(8, static_cast<int>(theta / kPi * 9));
      const int cx = std::min(2, (x - bb.x0) * 3 / bb.width());
      const int cy = std::min(2, (y - bb.y0) * 3 / bb.height());
      cells(cy * 3 + cx, ori) += mag;
    }
  }

  for (int c = 0; c < 9; ++c) {
    const double norm = cells.row(c).norm();
    if (norm > 0) cells.row(c) /= norm;
  }
  Histogram out(kShapeBins);
  for (int c = 0; c < 9; ++c)
    for (int o = 0; o < 9; ++o) out(c * 9 + o) = cells(c, o);
  const double total = out.sum();
  if (total <= 0) return Histogram::Constant(kShapeBins, 1.0 / kShapeBins);
  return out / total;
}

RegionFeature regionFeature(const Frame& frame, const LabImage& lab, const Mask& mask) {
  return {colorHistogram(frame, lab, mask), shapeHistogram(frame, mask)};
}

Histogram flowHistogram(const FlowField& flow, const Mask& mask) {
  if (mask.rows() != flow.dx.rows() || mask.cols() != flow.dx.cols())
    throw std::runtime_error("flowHistogram: mask dimension mismatch");
  if (maskEmpty(mask)) throw std::runtime_error("flowHistogram: empty mask");

  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  Histogram h = Histogram::Zero(kFlowBins);
  for (int y = 0; y < mask.rows(); ++y)
    for (int x = 0; x < mask.cols(); ++x) {
      if (!mask(y, x)) continue;
      const double dx = flow.dx(y, x), dy = flow.dy(y, x);
      const double mag = std::hypot(dx, dy);
      int range;
      if (mag <= 0.25) range = 0;
      else if (mag <= 1.0) range = 1;
      else if (mag <= 4.0) range = 2;
      else range = 3;
      int ori = 0;
      if (mag > 1e-6) {
        double theta = std::atan2(dy, dx);
        if (theta < 0) theta += kTwoPi;
        ori = std::min(7, static_cast<int>(theta / kTwoPi * 8));
      }
      h(range * 8 + ori) += 1;
    }
  return h / h.sum();
}

std::vector<SaliencyMap> coSaliency(const std::vector<Video>& videos, int clusterCount,
                                    std::uint32_t seed) {
  if (videos.empty()) throw std::runtime_error("coSaliency: need >= 1 video");
  if (clusterCount < 2) throw std::runtime_error("coSaliency: clusterCount must be >= 2");

  std::vector<std::vector<LabImage>> labs(videos.size());
  long totalPixels = 0;
  for (size_t v = 0; v < videos.size(); ++v) {
    for (const Frame& f : videos[v].frames) labs[v].push_back(rgbToLab(f));
    totalPixels += static_cast<long>(videos[v].frameCount()) * videos[v].width() *
                   videos[v].height();
  }

  // pooled Lab samples (strided cap keeps the fit tractable on larger sets)
  const long cap = 60000;
  const long stride = std::max<long>(1, (totalPixels + cap - 1) / cap);
  std::vector<Eigen::Vector3d> samples;
  long pixIdx = 0;
  for (size_t v = 0; v < videos.size(); ++v)
    for (const LabImage& li : labs[v])
      for (int y = 0; y < li.l.rows(); ++y)
        for (int x = 0; x < li.l.cols(); ++x, ++pixIdx)
          if (pixIdx % stride == 0) samples.emplace_back(li.l(y, x), li.a(y, x), li.b(y, x));

  Eigen::MatrixXd pts(static_cast<int>(samples.size()), 3);
  for (size_t i = 0; i < samples.size(); ++i) pts.row(static_cast<int>(i)) = samples[i];
  const KMeansResult km = kmeans(pts, clusterCount, seed);
  const int k = clusterCount;

  // per-cluster accumulators
  Eigen::VectorXd sizeAll = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd spatialSum = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd perVideoCount = Eigen::MatrixXd::Zero(k, static_cast<int>(videos.size()));

  auto nearestCluster = [&](float l, float a, float b) {
    int best = 0;
    double bestD = std::numeric_limits<double>::max();
    for (int c = 0; c < k; ++c) {
      const double dl = l - km.centers(c, 0), da = a - km.centers(c, 1),
                   db = b - km.centers(c, 2);
      const double d = dl * dl + da * da + db * db;
      if (d < bestD) {
        bestD = d;
        best = c;
      }
    }
    return best;
  };

  std::vector<std::vector<Imagei>> assignments(videos.size());
  for (size_t v = 0; v < videos.size(); ++v) {
    const int w = videos[v].width(), h = videos[v].height();
    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    const double maxDist = std::hypot(cx, cy);
    for (const LabImage& li : labs[v]) {
      Imagei asg(h, w);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const int c = nearestCluster(li.l(y, x), li.a(y, x), li.b(y, x));
          asg(y, x) = c;
          sizeAll(c) += 1;
          spatialSum(c) += std::hypot(x - cx, y - cy) / maxDist;
          perVideoCount(c, static_cast<int>(v)) += 1;
        }
      assignments[v].push_back(std::move(asg));
    }
  }

  Eigen::VectorXd saliency = Eigen::VectorXd::Zero(k);
  const double nAll = sizeAll.sum();
  for (int c = 0; c < k; ++c) {
    if (sizeAll(c) == 0) continue;
    double contrast = 0;
    for (int j = 0; j < k; ++j) {
      if (j == c || sizeAll(j) == 0) continue;
      contrast += sizeAll(j) / nAll * (km.centers.row(c) - km.centers.row(j)).norm();
    }
    const double spatial = 1.0 - spatialSum(c) / sizeAll(c);
    // repeatedness: relative frequency variance across videos, scale-free
    Eigen::VectorXd freq(static_cast<int>(videos.size()));
    for (size_t v = 0; v < videos.size(); ++v) {
      const double pixels = static_cast<double>(videos[v].frameCount()) * videos[v].width() *
                            videos[v].height();
      freq(static_cast<int>(v)) = perVideoCount(c, static_cast<int>(v)) / pixels;
    }
    const double mean = freq.mean();
    const double var = (freq.array() - mean).square().mean();
    const double repeated = 1.0 / (1.0 + var / (mean * mean + 1e-12));
    saliency(c) = contrast * spatial * repeated;
  }

  std::vector<SaliencyMap> out(videos.size());
  for (size_t v = 0; v < videos.size(); ++v) {
    double lo = std::numeric_limits<double>::max(), hi = std::numeric_limits<double>::lowest();
    for (const Imagei& asg : assignments[v])
      for (int y = 0; y < asg.rows(); ++y)
        for (int x = 0; x < asg.cols(); ++x) {
          lo = std::min(lo, saliency(asg(y, x)));
          hi = std::max(hi, saliency(asg(y, x)));
        }
    const bool flat = hi - lo < 1e-12;
    for (const Imagei& asg : assignments[v]) {
      Imagef m(asg.rows(), asg.cols());
      for (int y = 0; y < asg.rows(); ++y)
        for (int x = 0; x < asg.cols(); ++x)
          m(y, x) = flat ? 0.0f
                         : static_cast<float>((saliency(asg(y, x)) - lo) / (hi - lo));
      out[v].frames.push_back(std::move(m));
    }
  }
  return out;
}

double saliencyScore(const SaliencyMap& map, int frame, const Mask& mask) {
  if (frame < 0 || frame >= static_cast<int>(map.frames.size()))
    throw std::runtime_error("saliencyScore: bad frame");
  if (maskEmpty(mask)) throw std::runtime_error("saliencyScore: empty mask");
  const Imagef& m = map.frames[frame];
  double sum = 0;
  long n = 0;
  for (int y = 0; y < m.rows(); ++y)
    for (int x = 0; x < m.cols(); ++x)
      if (mask(y, x)) {
        sum += m(y, x);
        ++n;
      }
  return sum / n;
}

}  // namespace coseg
