#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace coseg {

/// Dense row-major image plane. Rows index y, columns index x.
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Imagef = Image<float>;
using Imageu8 = Image<std::uint8_t>;
using Imageu16 = Image<std::uint16_t>;
using Imagei = Image<int>;

/// Per-pixel boolean region membership.
using Mask = Image<bool>;

inline long maskArea(const Mask& m) { return static_cast<long>(m.count()); }
inline bool maskEmpty(const Mask& m) { return !m.any(); }

/// One RGB frame, 8 bits per channel, stored planar.
struct Frame {
  Imageu8 r, g, b;

  int width() const { return static_cast<int>(r.cols()); }
  int height() const { return static_cast<int>(r.rows()); }

  bool sameSize(const Frame& o) const {
    return width() == o.width() && height() == o.height();
  }
};

/// Validates Frame invariants (plane agreement, minimum size). Throws on violation.
void validateFrame(const Frame& f);

struct Video {
  std::string id;
  std::vector<Frame> frames;

  int frameCount() const { return static_cast<int>(frames.size()); }
  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
};

/// CIELAB planes of a frame (D65 white point). L in [0,100], a/b roughly [-110,110].
struct LabImage {
  Imagef l, a, b;
};

LabImage rgbToLab(const Frame& f);
void rgbToLab(std::uint8_t r, std::uint8_t g, std::uint8_t b, float& labL, float& labA,
              float& labB);

/// Rec.601 luma in [0,255].
Imagef grayscale(const Frame& f);

// --- PPM / PGM I/O (binary P6 / P5) ---

Frame readPpm(const std::filesystem::path& file);
void writePpm(const std::filesystem::path& file, const Frame& f);

Imageu8 readPgm(const std::filesystem::path& file);
void writePgm(const std::filesystem::path& file, const Imageu8& img);

Imageu16 readPgm16(const std::filesystem::path& file);
void writePgm16(const std::filesystem::path& file, const Imageu16& img);

inline void writeMaskPgm(const std::filesystem::path& file, const Mask& m) {
  writePgm(file, m.cast<std::uint8_t>() * std::uint8_t(255));
}

/// Loads `<index>.ppm` frames (zero-padded increasing indices) from a directory.
/// Throws on missing directory, unreadable image, dimension mismatch, or < 2 frames.
Video loadVideo(const std::filesystem::path& dir);

/// Deterministic seeded value noise in [0,255], bilinear lattice interpolation.
Imagef valueNoise(int width, int height, int cellSize, std::uint32_t seed);

}  // namespace coseg
