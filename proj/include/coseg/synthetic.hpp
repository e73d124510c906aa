#pragma once

#include "coseg/image.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace coseg {

enum class ObjectShape { Rect, Ellipse };

struct SyntheticObject {
  ObjectShape shape = ObjectShape::Rect;
  std::array<std::uint8_t, 3> color{200, 50, 40};
  int sizeX = 16, sizeY = 16;
  // one trajectory per video: center(frame f) = start + f * vel
  std::vector<std::array<double, 2>> start;
  std::vector<std::array<double, 2>> vel;
  int occludeFrom = 0, occludeTo = -1;  // inclusive; empty interval when from > to

  bool occludedAt(int frame) const { return frame >= occludeFrom && frame <= occludeTo; }
};

struct SyntheticSpec {
  std::string name = "synthetic";
  int videoCount = 2;
  int framesPerVideo = 10;
  int width = 64, height = 48;
  bool texturedBackground = false;
  std::array<std::uint8_t, 3> bgColor{128, 128, 128};
  std::uint32_t seed = 7;
  std::vector<SyntheticObject> objects;
};

struct SyntheticSet {
  std::vector<Video> videos;
  // gt[video][frame][object]; empty mask while the object is occluded
  std::vector<std::vector<std::vector<Mask>>> gt;
};

/// Renders the spec's objects over the background and emits per-object
/// ground-truth masks.  The same object index maps to the same ground-truth
/// label in every video.  Throws if an object leaves the frame bounds or if
/// two identically colored objects overlap.
SyntheticSet generateSyntheticSet(const SyntheticSpec& spec);

/// Parses the flat key=value synthetic spec format (see fixtures/*.spec).
SyntheticSpec parseSyntheticSpec(const std::string& text);
SyntheticSpec loadSyntheticSpec(const std::filesystem::path& file);

/// Bundled fixture specs: "two-videos-one-square", "occlusion", "two-objects".
const std::vector<std::string>& bundledFixtureNames();
SyntheticSpec bundledFixtureSpec(const std::string& name);

/// Writes frames, ground truth, a manifest, and a desk-scale config into outDir.
void writeFixture(const SyntheticSpec& spec, const std::filesystem::path& outDir);

}  // namespace coseg
