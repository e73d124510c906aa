#include "coseg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace coseg {

namespace {

struct Placement {
  int x0, y0;  // top-left pixel
  bool visible;
};

Placement placementAt(const SyntheticObject& obj, int video, int frame) {
  Placement p{};
  p.visible = !obj.occludedAt(frame);
  const double cx = obj.start[video][0] + frame * obj.vel[video][0];
  const double cy = obj.start[video][1] + frame * obj.vel[video][1];
  p.x0 = static_cast<int>(std::lround(cx - obj.sizeX / 2.0));
  p.y0 = static_cast<int>(std::lround(cy - obj.sizeY / 2.0));
  return p;
}

Mask renderObjectMask(const SyntheticObject& obj, const Placement& p, int w, int h) {
  Mask m = Mask::Constant(h, w, false);
  if (!p.visible) return m;
  if (obj.shape == ObjectShape::Rect) {
    for (int y = p.y0; y < p.y0 + obj.sizeY; ++y)
      for (int x = p.x0; x < p.x0 + obj.sizeX; ++x) m(y, x) = true;
  } else {
    const double cx = p.x0 + (obj.sizeX - 1) / 2.0;
    const double cy = p.y0 + (obj.sizeY - 1) / 2.0;
    const double rx = obj.sizeX / 2.0, ry = obj.sizeY / 2.0;
    for (int y = p.y0; y < p.y0 + obj.sizeY; ++y)
      for (int x = p.x0; x < p.x0 + obj.sizeX; ++x) {
        const double nx = (x - cx) / rx, ny = (y - cy) / ry;
        if (nx * nx + ny * ny <= 1.0) m(y, x) = true;
      }
  }
  return m;
}

}  // namespace

SyntheticSet generateSyntheticSet(const SyntheticSpec& spec) {
  if (spec.videoCount < 1 || spec.framesPerVideo < 2)
    throw std::runtime_error("synthetic spec needs >= 1 video and >= 2 frames");
  if (spec.width < 8 || spec.height < 8) throw std::runtime_error("synthetic frame too small");
  for (const auto& obj : spec.objects) {
    if (static_cast<int>(obj.start.size()) != spec.videoCount ||
        static_cast<int>(obj.vel.size()) != spec.videoCount)
      throw std::runtime_error("object trajectory count does not match video count");
  }

  SyntheticSet set;
  for (int v = 0; v < spec.videoCount; ++v) {
    Video video;
    video.id = "v" + std::to_string(v);

    Imagef texture;
    if (spec.texturedBackground)
      texture = valueNoise(spec.width, spec.height, 6, spec.seed + 101 * v);

    std::vector<std::vector<Mask>> videoGt;
    for (int f = 0; f < spec.framesPerVideo; ++f) {
      Frame frame;
      frame.r = Imageu8::Constant(spec.height, spec.width, spec.bgColor[0]);
      frame.g = Imageu8::Constant(spec.height, spec.width, spec.bgColor[1]);
      frame.b = Imageu8::Constant(spec.height, spec.width, spec.bgColor[2]);
      if (spec.texturedBackground) {
        for (int y = 0; y < spec.height; ++y)
          for (int x = 0; x < spec.width; ++x) {
            const float n = texture(y, x);
            frame.r(y, x) = static_cast<std::uint8_t>(
                std::clamp(0.5f * spec.bgColor[0] + 0.5f * n, 0.0f, 255.0f));
            frame.g(y, x) = static_cast<std::uint8_t>(
                std::clamp(0.5f * spec.bgColor[1] + 0.5f * n, 0.0f, 255.0f));
            frame.b(y, x) = static_cast<std::uint8_t>(
                std::clamp(0.5f * spec.bgColor[2] + 0.5f * n, 0.0f, 255.0f));
          }
      }

      std::vector<Mask> objectMasks;
      for (size_t k = 0; k < spec.objects.size(); ++k) {
        const auto& obj = spec.objects[k];
        const Placement p = placementAt(obj, v, f);
        if (p.visible) {
          if (p.x0 < 0 || p.y0 < 0 || p.x0 + obj.sizeX > spec.width ||
              p.y0 + obj.sizeY > spec.height) {
            throw std::runtime_error("object " + std::to_string(k) + " out of frame bounds at v" +
                                     std::to_string(v) + " frame " + std::to_string(f));
          }
        }
        objectMasks.push_back(renderObjectMask(obj, p, spec.width, spec.height));
      }

      for (size_t k = 0; k < spec.objects.size(); ++k) {
        for (size_t j = k + 1; j < spec.objects.size(); ++j) {
          if (spec.objects[k].color == spec.objects[j].color &&
              (objectMasks[k] && objectMasks[j]).any()) {
            throw std::runtime_error("overlapping objects with identical colors (objects " +
                                     std::to_string(k) + ", " + std::to_string(j) + ")");
          }
        }
      }

      // paint in object order; later objects occlude earlier ones
      for (size_t k = 0; k < spec.objects.size(); ++k) {
        const auto& obj = spec.objects[k];
        for (int y = 0; y < spec.height; ++y)
          for (int x = 0; x < spec.width; ++x)
            if (objectMasks[k](y, x)) {
              frame.r(y, x) = obj.color[0];
              frame.g(y, x) = obj.color[1];
              frame.b(y, x) = obj.color[2];
            }
      }
      // ground truth keeps only the visible (top-most) pixels, so masks stay disjoint
      for (size_t k = 0; k < spec.objects.size(); ++k)
        for (size_t j = k + 1; j < spec.objects.size(); ++j)
          objectMasks[k] = objectMasks[k] && !objectMasks[j];

      videoGt.push_back(std::move(objectMasks));
      video.frames.push_back(std::move(frame));
    }
    set.videos.push_back(std::move(video));
    set.gt.push_back(std::move(videoGt));
  }
  return set;
}

// --- spec parsing ---

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<double> parseNumberList(const std::string& v, size_t n, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(trim(item)));
  if (out.size() != n) throw std::runtime_error("expected " + std::to_string(n) + " values for " + key);
  return out;
}

}  // namespace

SyntheticSpec parseSyntheticSpec(const std::string& text) {
  SyntheticSpec spec;
  spec.objects.clear();
  std::map<int, SyntheticObject> objects;
  std::map<int, std::map<int, std::array<double, 2>>> starts, vels;

  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("bad spec line: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));

    if (key == "name") spec.name = val;
    else if (key == "videos") spec.videoCount = std::stoi(val);
    else if (key == "frames") spec.framesPerVideo = std::stoi(val);
    else if (key == "width") spec.width = std::stoi(val);
    else if (key == "height") spec.height = std::stoi(val);
    else if (key == "seed") spec.seed = static_cast<std::uint32_t>(std::stoul(val));
    else if (key == "background") {
      if (val == "flat") spec.texturedBackground = false;
      else if (val == "textured") spec.texturedBackground = true;
      else throw std::runtime_error("background must be flat or textured");
    } else if (key == "bg.color") {
      auto c = parseNumberList(val, 3, key);
      for (int i = 0; i < 3; ++i) spec.bgColor[i] = static_cast<std::uint8_t>(c[i]);
    } else if (key.rfind("object.", 0) == 0) {
      std::stringstream ks(key.substr(7));
      int objIdx;
      char dot;
      ks >> objIdx >> dot;
      std::string rest;
      std::getline(ks, rest);
      auto& obj = objects[objIdx];
      if (rest == "shape") {
        if (val == "rect") obj.shape = ObjectShape::Rect;
        else if (val == "ellipse") obj.shape = ObjectShape::Ellipse;
        else throw std::runtime_error("shape must be rect or ellipse");
      } else if (rest == "color") {
        auto c = parseNumberList(val, 3, key);
        for (int i = 0; i < 3; ++i) obj.color[i] = static_cast<std::uint8_t>(c[i]);
      } else if (rest == "size") {
        auto s = parseNumberList(val, 2, key);
        obj.sizeX = static_cast<int>(s[0]);
        obj.sizeY = static_cast<int>(s[1]);
      } else if (rest == "occlude") {
        auto o = parseNumberList(val, 2, key);
        obj.occludeFrom = static_cast<int>(o[0]);
        obj.occludeTo = static_cast<int>(o[1]);
      } else if (rest.rfind("video.", 0) == 0) {
        std::stringstream vs(rest.substr(6));
        int vidIdx;
        char dot2;
        vs >> vidIdx >> dot2;
        std::string field;
        std::getline(vs, field);
        auto p = parseNumberList(val, 2, key);
        if (field == "start") starts[objIdx][vidIdx] = {p[0], p[1]};
        else if (field == "vel") vels[objIdx][vidIdx] = {p[0], p[1]};
        else throw std::runtime_error("unknown trajectory field: " + key);
      } else {
        throw std::runtime_error("unknown object field: " + key);
      }
    } else {
      throw std::runtime_error("unknown spec key: " + key);
    }
  }

  for (auto& [idx, obj] : objects) {
    obj.start.resize(spec.videoCount, {0, 0});
    obj.vel.resize(spec.videoCount, {0, 0});
    for (int v = 0; v < spec.videoCount; ++v) {
      auto its = starts[idx].find(v);
      if (its == starts[idx].end())
        throw std::runtime_error("object." + std::to_string(idx) + " missing start for video " +
                                 std::to_string(v));
      obj.start[v] = {(*its).second[0], (*its).second[1]};
      auto itv = vels[idx].find(v);
      if (itv != vels[idx].end()) obj.vel[v] = {(*itv).second[0], (*itv).second[1]};
    }
    spec.objects.push_back(obj);
  }
  return spec;
}

SyntheticSpec loadSyntheticSpec(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open spec: " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parseSyntheticSpec(buf.str());
}

// --- bundled fixtures ---

namespace {

const char* kTwoVideosOneSquare = R"(
name=two-videos-one-square
videos=2
frames=10
width=64
height=48
background=flat
bg.color=120,120,120
seed=11
object.0.shape=rect
object.0.color=205,45,40
object.0.size=16,16
object.0.video.0.start=12,24
object.0.video.0.vel=4,0
object.0.video.1.start=16,20
object.0.video.1.vel=3.5,0.5
)";

const char* kOcclusion = R"(
name=occlusion
videos=2
frames=10
width=64
height=48
background=flat
bg.color=120,120,120
seed=13
object.0.shape=rect
object.0.color=205,45,40
object.0.size=16,16
object.0.video.0.start=12,24
object.0.video.0.vel=4,0
object.0.video.1.start=14,22
object.0.video.1.vel=3.8,0.3
object.0.occlude=4,6
)";

const char* kTwoObjects = R"(
name=two-objects
videos=2
frames=10
width=64
height=48
background=flat
bg.color=120,120,120
seed=17
object.0.shape=rect
object.0.color=205,45,40
object.0.size=12,12
object.0.video.0.start=12,14
object.0.video.0.vel=4,0.6
object.0.video.1.start=14,16
object.0.video.1.vel=3.6,0.5
object.1.shape=ellipse
object.1.color=50,180,70
object.1.size=14,10
object.1.video.0.start=44,34
object.1.video.0.vel=-3,-0.4
object.1.video.1.start=46,32
object.1.video.1.vel=-3.2,-0.2
)";

const char* kDeskConfig = R"(# desk-scale overrides for the bundled synthetic fixtures
tcsCount=160
xInit=10
xGrow=5
maxProposalsPerFrame=60
saliencyClusters=8
)";

}  // namespace

const std::vector<std::string>& bundledFixtureNames() {
  static const std::vector<std::string> names{"two-videos-one-square", "occlusion", "two-objects"};
  return names;
}

SyntheticSpec bundledFixtureSpec(const std::string& name) {
  if (name == "two-videos-one-square") return parseSyntheticSpec(kTwoVideosOneSquare);
  if (name == "occlusion") return parseSyntheticSpec(kOcclusion);
  if (name == "two-objects") return parseSyntheticSpec(kTwoObjects);
  throw std::runtime_error("unknown bundled fixture: " + name);
}

void writeFixture(const SyntheticSpec& spec, const fs::path& outDir) {
  const SyntheticSet set = generateSyntheticSet(spec);
  fs::create_directories(outDir);

  std::ostringstream manifest;
  manifest << "name=" << spec.name << "\n";
  manifest << "objects=" << spec.objects.size() << "\n";

  for (int v = 0; v < spec.videoCount; ++v) {
    const std::string vdir = "v" + std::to_string(v);
    for (int f = 0; f < spec.framesPerVideo; ++f) {
      char idx[16];
      std::snprintf(idx, sizeof(idx), "%03d", f);
      writePpm(outDir / vdir / "frames" / (std::string(idx) + ".ppm"), set.videos[v].frames[f]);

      Imageu8 gt = Imageu8::Zero(spec.height, spec.width);
      for (size_t k = 0; k < spec.objects.size(); ++k) {
        const Mask& m = set.gt[v][f][k];
        for (int y = 0; y < spec.height; ++y)
          for (int x = 0; x < spec.width; ++x)
            if (m(y, x)) gt(y, x) = static_cast<std::uint8_t>(k + 1);
      }
      writePgm(outDir / vdir / "gt" / (std::string(idx) + "_gt.pgm"), gt);
    }
    manifest << "video." << v << ".frames=" << vdir << "/frames\n";
    manifest << "video." << v << ".gt=" << vdir << "/gt\n";
  }

  std::ofstream mf(outDir / "manifest.txt");
  mf << manifest.str();
  std::ofstream cf(outDir / "config.txt");
  cf << kDeskConfig;
}

}  // namespace coseg
