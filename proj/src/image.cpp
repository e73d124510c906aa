#include "coseg/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

namespace fs = std::filesystem;

namespace coseg {

void validateFrame(const Frame& f) {
  if (f.r.rows() != f.g.rows() || f.r.rows() != f.b.rows() || f.r.cols() != f.g.cols() ||
      f.r.cols() != f.b.cols()) {
    throw std::runtime_error("frame channel planes disagree in size");
  }
  if (f.width() < 8 || f.height() < 8) {
    throw std::runtime_error("frame smaller than 8x8");
  }
}

namespace {

inline float srgbLinear(float c) {
  return c <= 0.04045f ? c / 12.92f : std::pow((c + 0.055f) / 1.055f, 2.4f);
}

inline float labF(float t) {
  constexpr float kCube = 0.008856452f;  // (6/29)^3
  constexpr float kSlope = 7.787037f;    // 1/(3*(6/29)^2)
  return t > kCube ? std::cbrt(t) : kSlope * t + 4.0f / 29.0f;
}

}  // namespace

void rgbToLab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8, float& labL, float& labA,
              float& labB) {
  const float r = srgbLinear(r8 / 255.0f);
  const float g = srgbLinear(g8 / 255.0f);
  const float b = srgbLinear(b8 / 255.0f);
  // sRGB -> XYZ, D65
  const float x = 0.4124564f * r + 0.3575761f * g + 0.1804375f * b;
  const float y = 0.2126729f * r + 0.7151522f * g + 0.0721750f * b;
  const float z = 0.0193339f * r + 0.1191920f * g + 0.9503041f * b;
  const float fx = labF(x / 0.95047f);
  const float fy = labF(y);
  const float fz = labF(z / 1.08883f);
  labL = 116.0f * fy - 16.0f;
  labA = 500.0f * (fx - fy);
  labB = 200.0f * (fy - fz);
}

LabImage rgbToLab(const Frame& f) {
  LabImage out;
  const int h = f.height(), w = f.width();
  out.l.resize(h, w);
  out.a.resize(h, w);
  out.b.resize(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      rgbToLab(f.r(y, x), f.g(y, x), f.b(y, x), out.l(y, x), out.a(y, x), out.b(y, x));
    }
  }
  return out;
}

Imagef grayscale(const Frame& f) {
  return 0.299f * f.r.cast<float>() + 0.587f * f.g.cast<float>() + 0.114f * f.b.cast<float>();
}

// --- netpbm I/O ---

namespace {

int pnmReadToken(std::istream& in) {
  // skips whitespace and '#' comments, reads one non-negative integer
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c)) throw std::runtime_error("malformed PNM header");
  int v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    c = in.get();
  }
  return v;
}

void pnmReadHeader(std::istream& in, const char* magic, int& w, int& h, int& maxval) {
  char m0 = static_cast<char>(in.get());
  char m1 = static_cast<char>(in.get());
  if (m0 != magic[0] || m1 != magic[1]) throw std::runtime_error("unexpected PNM magic");
  w = pnmReadToken(in);
  h = pnmReadToken(in);
  maxval = pnmReadToken(in);
  if (w <= 0 || h <= 0) throw std::runtime_error("non-positive PNM dimensions");
}

std::ifstream openBinary(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  return in;
}

std::ofstream createBinary(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot create " + file.string());
  return out;
}

}  // namespace

Frame readPpm(const fs::path& file) {
  auto in = openBinary(file);
  int w, h, maxval;
  pnmReadHeader(in, "P6", w, h, maxval);
  if (maxval != 255) throw std::runtime_error("PPM maxval must be 255: " + file.string());
  std::vector<std::uint8_t> buf(static_cast<size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw std::runtime_error("truncated PPM: " + file.string());
  }
  Frame f;
  f.r.resize(h, w);
  f.g.resize(h, w);
  f.b.resize(h, w);
  size_t i = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      f.r(y, x) = buf[i++];
      f.g(y, x) = buf[i++];
      f.b(y, x) = buf[i++];
    }
  }
  return f;
}

void writePpm(const fs::path& file, const Frame& f) {
  auto out = createBinary(file);
  out << "P6\n" << f.width() << " " << f.height() << "\n255\n";
  std::vector<std::uint8_t> buf(static_cast<size_t>(f.width()) * f.height() * 3);
  size_t i = 0;
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      buf[i++] = f.r(y, x);
      buf[i++] = f.g(y, x);
      buf[i++] = f.b(y, x);
    }
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

Imageu8 readPgm(const fs::path& file) {
  auto in = openBinary(file);
  int w, h, maxval;
  pnmReadHeader(in, "P5", w, h, maxval);
  if (maxval != 255) throw std::runtime_error("PGM maxval must be 255: " + file.string());
  Imageu8 img(h, w);
  in.read(reinterpret_cast<char*>(img.data()), static_cast<std::streamsize>(img.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.size())) {
    throw std::runtime_error("truncated PGM: " + file.string());
  }
  return img;
}

void writePgm(const fs::path& file, const Imageu8& img) {
  auto out = createBinary(file);
  out << "P5\n" << img.cols() << " " << img.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
}

Imageu16 readPgm16(const fs::path& file) {
  auto in = openBinary(file);
  int w, h, maxval;
  pnmReadHeader(in, "P5", w, h, maxval);
  if (maxval != 65535) throw std::runtime_error("16-bit PGM expected: " + file.string());
  Imageu16 img(h, w);
  std::vector<std::uint8_t> buf(static_cast<size_t>(w) * h * 2);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw std::runtime_error("truncated PGM: " + file.string());
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = 2 * (static_cast<size_t>(y) * w + x);
      img(y, x) = static_cast<std::uint16_t>((buf[i] << 8) | buf[i + 1]);  // big-endian
    }
  }
  return img;
}

void writePgm16(const fs::path& file, const Imageu16& img) {
  auto out = createBinary(file);
  out << "P5\n" << img.cols() << " " << img.rows() << "\n65535\n";
  std::vector<std::uint8_t> buf(static_cast<size_t>(img.size()) * 2);
  size_t i = 0;
  for (int y = 0; y < img.rows(); ++y) {
    for (int x = 0; x < img.cols(); ++x) {
      buf[i++] = static_cast<std::uint8_t>(img(y, x) >> 8);
      buf[i++] = static_cast<std::uint8_t>(img(y, x) & 0xff);
    }
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

Video loadVideo(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("missing directory: " + dir.string());
  std::vector<std::pair<long, fs::path>> indexed;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path p = entry.path();
    if (p.extension() != ".ppm") continue;
    const std::string stem = p.stem().string();
    if (stem.empty() || !std::all_of(stem.begin(), stem.end(),
                                     [](unsigned char c) { return std::isdigit(c); })) {
      continue;
    }
    indexed.emplace_back(std::stol(stem), p);
  }
  std::sort(indexed.begin(), indexed.end());
  if (indexed.size() < 2) {
    throw std::runtime_error("fewer than 2 frames in " + dir.string());
  }
  Video v;
  v.id = dir.filename().string();
  for (const auto& [idx, path] : indexed) {
    Frame f = readPpm(path);
    validateFrame(f);
    if (!v.frames.empty() && !f.sameSize(v.frames.front())) {
      throw std::runtime_error("frame dimension mismatch at " + path.string());
    }
    v.frames.push_back(std::move(f));
  }
  return v;
}

Imagef valueNoise(int width, int height, int cellSize, std::uint32_t seed) {
  if (cellSize < 1) cellSize = 1;
  const int gx = width / cellSize + 2;
  const int gy = height / cellSize + 2;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> uni(0.0f, 255.0f);
  Imagef lattice(gy, gx);
  for (int y = 0; y < gy; ++y)
    for (int x = 0; x < gx; ++x) lattice(y, x) = uni(rng);

  Imagef out(height, width);
  for (int y = 0; y < height; ++y) {
    const float fy = static_cast<float>(y) / cellSize;
    const int y0 = static_cast<int>(fy);
    const float ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const float fx = static_cast<float>(x) / cellSize;
      const int x0 = static_cast<int>(fx);
      const float tx = fx - x0;
      const float a = lattice(y0, x0) * (1 - tx) + lattice(y0, x0 + 1) * tx;
      const float b = lattice(y0 + 1, x0) * (1 - tx) + lattice(y0 + 1, x0 + 1) * tx;
      out(y, x) = a * (1 - ty) + b * ty;
    }
  }
  return out;
}

}  // namespace coseg
