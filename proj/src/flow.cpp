#include "coseg/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace coseg {

namespace {

Imagef downsample2(const Imagef& src) {
  const int h = static_cast<int>(src.rows()) / 2;
  const int w = static_cast<int>(src.cols()) / 2;
  Imagef out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out(y, x) =
          0.25f * (src(2 * y, 2 * x) + src(2 * y, 2 * x + 1) + src(2 * y + 1, 2 * x) +
                   src(2 * y + 1, 2 * x + 1));
  return out;
}

Imagef resizeBilinear(const Imagef& src, int h, int w) {
  Imagef out(h, w);
  const float sy = static_cast<float>(src.rows()) / h;
  const float sx = static_cast<float>(src.cols()) / w;
  for (int y = 0; y < h; ++y) {
    float fy = (y + 0.5f) * sy - 0.5f;
    fy = std::clamp(fy, 0.0f, static_cast<float>(src.rows() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min<int>(y0 + 1, static_cast<int>(src.rows()) - 1);
    const float ty = fy - y0;
    for (int x = 0; x < w; ++x) {
      float fx = (x + 0.5f) * sx - 0.5f;
      fx = std::clamp(fx, 0.0f, static_cast<float>(src.cols() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min<int>(x0 + 1, static_cast<int>(src.cols()) - 1);
      const float tx = fx - x0;
      const float a = src(y0, x0) * (1 - tx) + src(y0, x1) * tx;
      const float b = src(y1, x0) * (1 - tx) + src(y1, x1) * tx;
      out(y, x) = a * (1 - ty) + b * ty;
    }
  }
  return out;
}

float sampleBilinear(const Imagef& img, float x, float y) {
  x = std::clamp(x, 0.0f, static_cast<float>(img.cols() - 1));
  y = std::clamp(y, 0.0f, static_cast<float>(img.rows() - 1));
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min<int>(x0 + 1, static_cast<int>(img.cols()) - 1);
  const int y1 = std::min<int>(y0 + 1, static_cast<int>(img.rows()) - 1);
  const float tx = x - x0, ty = y - y0;
  const float a = img(y0, x0) * (1 - tx) + img(y0, x1) * tx;
  const float b = img(y1, x0) * (1 - tx) + img(y1, x1) * tx;
  return a * (1 - ty) + b * ty;
}

// weighted 8-neighbor average used by the Horn-Schunck update
Imagef hsAverage(const Imagef& f) {
  const int h = static_cast<int>(f.rows());
  const int w = static_cast<int>(f.cols());
  Imagef out(h, w);
  auto at = [&](int y, int x) {
    y = std::clamp(y, 0, h - 1);
    x = std::clamp(x, 0, w - 1);
    return f(y, x);
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out(y, x) = (at(y - 1, x) + at(y + 1, x) + at(y, x - 1) + at(y, x + 1)) / 6.0f +
                  (at(y - 1, x - 1) + at(y - 1, x + 1) + at(y + 1, x - 1) + at(y + 1, x + 1)) /
                      12.0f;
  return out;
}

Imagef median3(const Imagef& f) {
  const int h = static_cast<int>(f.rows());
  const int w = static_cast<int>(f.cols());
  Imagef out(h, w);
  float win[9];
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int n = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = std::clamp(y + dy, 0, h - 1);
          const int xx = std::clamp(x + dx, 0, w - 1);
          win[n++] = f(yy, xx);
        }
      std::nth_element(win, win + 4, win + 9);
      out(y, x) = win[4];
    }
  }
  return out;
}

// one incremental Horn-Schunck solve: refines (u, v) given images at this scale
void hsRefine(const Imagef& a, const Imagef& b, Imagef& u, Imagef& v, int iters, float alpha) {
  const int h = static_cast<int>(a.rows());
  const int w = static_cast<int>(a.cols());

  // warp b by current flow
  Imagef bw(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) bw(y, x) = sampleBilinear(b, x + u(y, x), y + v(y, x));

  Imagef ix(h, w), iy(h, w), it(h, w);
  auto at = [&](const Imagef& img, int y, int x) {
    y = std::clamp(y, 0, h - 1);
    x = std::clamp(x, 0, w - 1);
    return img(y, x);
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      ix(y, x) = 0.25f * (at(a, y, x + 1) - at(a, y, x - 1) + at(bw, y, x + 1) - at(bw, y, x - 1));
      iy(y, x) = 0.25f * (at(a, y + 1, x) - at(a, y - 1, x) + at(bw, y + 1, x) - at(bw, y - 1, x));
      it(y, x) = bw(y, x) - a(y, x);
    }
  }

  const float a2 = alpha * alpha;
  Imagef du = Imagef::Zero(h, w), dv = Imagef::Zero(h, w);
  for (int k = 0; k < iters; ++k) {
    const Imagef duBar = hsAverage(du);
    const Imagef dvBar = hsAverage(dv);
    const Imagef t = (ix * duBar + iy * dvBar + it) / (a2 + ix.square() + iy.square());
    du = duBar - ix * t;
    dv = dvBar - iy * t;
  }
  u += du;
  v += dv;
}

}  // namespace

FlowField computeFlow(const Frame& a, const Frame& b, const FlowOptions& opts) {
  if (!a.sameSize(b)) throw std::runtime_error("computeFlow: frame dimension mismatch");

  const Imagef ga = grayscale(a);
  const Imagef gb = grayscale(b);

  std::vector<Imagef> pa{ga}, pb{gb};
  for (int l = 1; l < opts.pyramidLevels; ++l) {
    if (pa.back().rows() < 8 || pa.back().cols() < 8) break;
    pa.push_back(downsample2(pa.back()));
    pb.push_back(downsample2(pb.back()));
  }

  Imagef u = Imagef::Zero(pa.back().rows(), pa.back().cols());
  Imagef v = Imagef::Zero(pa.back().rows(), pa.back().cols());
  for (int l = static_cast<int>(pa.size()) - 1; l >= 0; --l) {
    if (u.rows() != pa[l].rows() || u.cols() != pa[l].cols()) {
      u = resizeBilinear(u, static_cast<int>(pa[l].rows()), static_cast<int>(pa[l].cols())) * 2.0f;
      v = resizeBilinear(v, static_cast<int>(pa[l].rows()), static_cast<int>(pa[l].cols())) * 2.0f;
    }
    hsRefine(pa[l], pb[l], u, v, opts.itersPerLevel, opts.smoothness);
    u = median3(u);
    v = median3(v);
  }
  return {std::move(u), std::move(v)};
}

std::vector<FlowField> computeVideoFlows(const Video& v, const FlowOptions& opts) {
  if (v.frameCount() < 2) throw std::runtime_error("computeVideoFlows: need >= 2 frames");
  std::vector<FlowField> flows;
  flows.reserve(v.frames.size());
  for (size_t t = 0; t + 1 < v.frames.size(); ++t) {
    flows.push_back(computeFlow(v.frames[t], v.frames[t + 1], opts));
  }
  const size_t last = v.frames.size() - 1;
  flows.push_back(computeFlow(v.frames[last], v.frames[last - 1], opts).negated());
  return flows;
}

}  // namespace coseg
