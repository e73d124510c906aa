#include "coseg/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace coseg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

VideoSetManifest loadManifest(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open manifest: " + file.string());
  const fs::path base = file.has_parent_path() ? file.parent_path() : fs::path(".");

  VideoSetManifest m;
  std::map<int, VideoSource> videos;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("bad manifest line: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "name") {
      m.name = val;
    } else if (key == "objects") {
      m.objectCount = std::stoi(val);
    } else if (key.rfind("video.", 0) == 0) {
      const auto dot = key.find('.', 6);
      if (dot == std::string::npos) throw std::runtime_error("bad manifest key: " + key);
      const int idx = std::stoi(key.substr(6, dot - 6));
      const std::string field = key.substr(dot + 1);
      if (field == "frames") {
        videos[idx].framesDir = base / val;
      } else if (field == "gt") {
        videos[idx].gtDir = base / val;
      } else if (field == "id") {
        videos[idx].id = val;
      } else {
        throw std::runtime_error("unknown manifest key: " + key);
      }
    } else {
      throw std::runtime_error("unknown manifest key: " + key);
    }
  }
  if (m.objectCount < 1) throw std::runtime_error("manifest: objects must be >= 1");
  for (auto& [idx, v] : videos) {
    if (v.framesDir.empty())
      throw std::runtime_error("manifest: video." + std::to_string(idx) + ".frames missing");
    if (!fs::is_directory(v.framesDir))
      throw std::runtime_error("manifest: missing frames directory " + v.framesDir.string());
    if (v.gtDir && !fs::is_directory(*v.gtDir))
      throw std::runtime_error("manifest: missing gt directory " + v.gtDir->string());
    if (v.id.empty()) v.id = "v" + std::to_string(idx);
    m.videos.push_back(v);
  }
  if (m.videos.empty()) throw std::runtime_error("manifest lists no videos: " + file.string());
  return m;
}

GroundTruthFrames loadGroundTruth(const fs::path& gtDir, int objectCount) {
  GroundTruthFrames gt;
  if (!fs::is_directory(gtDir)) throw std::runtime_error("missing gt directory " + gtDir.string());
  for (const auto& entry : fs::directory_iterator(gtDir)) {
    if (!entry.is_regular_file()) continue;
    const std::string stem = entry.path().stem().string();
    if (entry.path().extension() != ".pgm") continue;
    const auto pos = stem.rfind("_gt");
    if (pos == std::string::npos || pos + 3 != stem.size()) continue;
    const std::string idxStr = stem.substr(0, pos);
    if (idxStr.empty() || !std::all_of(idxStr.begin(), idxStr.end(),
                                       [](unsigned char c) { return std::isdigit(c); }))
      continue;
    const int frame = std::stoi(idxStr);
    const Imageu8 img = readPgm(entry.path());
    std::vector<Mask> masks;
    for (int k = 1; k <= objectCount; ++k)
      masks.push_back(img.unaryExpr([k](std::uint8_t v) { return v == k; }).eval());
    gt[frame] = std::move(masks);
  }
  return gt;
}

double trackIoU(const std::vector<Mask>& resultPerFrame, const GroundTruthFrames& gt,
                int gtLabel) {
  double sum = 0;
  int counted = 0;
  for (const auto& [frame, masks] : gt) {
    if (frame < 0 || frame >= static_cast<int>(resultPerFrame.size())) continue;
    const Mask& g = masks.at(gtLabel);
    const Mask& r = resultPerFrame[frame];
    const long inter = (r && g).count();
    const long uni = (r || g).count();
    if (uni == 0) continue;  // both empty: not evaluated
    sum += static_cast<double>(inter) / uni;
    ++counted;
  }
  return counted > 0 ? sum / counted : 0.0;
}

std::vector<int> matchObjects(const std::vector<std::vector<Mask>>& objectMasks,
                              const GroundTruthFrames& gt) {
  const int slots = static_cast<int>(objectMasks.size());
  if (gt.empty()) throw std::runtime_error("matchObjects: no ground-truth frames");
  const int labels = static_cast<int>(gt.begin()->second.size());

  Eigen::MatrixXd iou(slots, labels);
  for (int s = 0; s < slots; ++s)
    for (int l = 0; l < labels; ++l) iou(s, l) = trackIoU(objectMasks[s], gt, l);

  // subset DP over labels: slots in order pick an unused label or stay
  // unmatched; matched beats unmatched on ties, lower labels first
  const int full = 1 << labels;
  std::vector<std::vector<double>> dp(slots + 1, std::vector<double>(full, 0));
  std::vector<std::vector<int>> choice(slots, std::vector<int>(full, -1));
  for (int s = slots - 1; s >= 0; --s) {
    for (int mask = 0; mask < full; ++mask) {
      double best = -1;
      int bestChoice = -2;
      for (int l = 0; l < labels; ++l) {
        if (mask & (1 << l)) continue;
        const double v = iou(s, l) + dp[s + 1][mask | (1 << l)];
        if (v > best) {
          best = v;
          bestChoice = l;
        }
      }
      const double skip = dp[s + 1][mask];
      if (skip > best) {
        best = skip;
        bestChoice = -1;
      }
      dp[s][mask] = best;
      choice[s][mask] = bestChoice;
    }
  }
  std::vector<int> out(slots, -1);
  int mask = 0;
  for (int s = 0; s < slots; ++s) {
    const int c = choice[s][mask];
    out[s] = c;
    if (c >= 0) mask |= 1 << c;
  }
  return out;
}

EvalReport evaluateIoU(const SegmentationResult& result, const std::vector<GroundTruthFrames>& gt,
                       const VideoSetManifest& manifest) {
  if (result.videos.size() != gt.size())
    throw std::runtime_error("evaluateIoU: result/gt video count mismatch");
  bool anyGt = false;
  for (const auto& g : gt) anyGt = anyGt || !g.empty();
  if (!anyGt) throw std::runtime_error("evaluateIoU: no ground-truth frames at all");

  EvalReport report;
  report.setName = manifest.name;
  double total = 0;
  int count = 0;
  for (size_t v = 0; v < result.videos.size(); ++v) {
    const VideoSegmentation& seg = result.videos[v];
    VideoEval ve;
    ve.id = seg.videoId;
    if (gt[v].empty()) throw std::runtime_error("evaluateIoU: no ground truth for " + seg.videoId);
    ve.slotToLabel = matchObjects(seg.objectMasks, gt[v]);
    double videoSum = 0;
    for (size_t s = 0; s < seg.objectMasks.size(); ++s) {
      const int label = ve.slotToLabel[s];
      const double iou = label >= 0 ? trackIoU(seg.objectMasks[s], gt[v], label) : 0.0;
      ve.perObjectIoU.push_back(iou);
      videoSum += iou;
      total += iou;
      ++count;
    }
    ve.meanIoU = seg.objectMasks.empty() ? 0 : videoSum / seg.objectMasks.size();
    report.videos.push_back(std::move(ve));
  }
  report.meanIoU = count > 0 ? total / count : 0;
  return report;
}

void renderOverlay(const Video& video, const VideoSegmentation& seg, const fs::path& outDir) {
  static const std::uint8_t palette[6][3] = {{255, 60, 60}, {60, 220, 60},  {80, 80, 255},
                                             {240, 220, 60}, {220, 60, 220}, {60, 220, 220}};
  fs::create_directories(outDir);
  for (int f = 0; f < video.frameCount(); ++f) {
    Frame out = video.frames[f];
    for (size_t obj = 0; obj < seg.objectMasks.size(); ++obj) {
      const auto& color = palette[obj % 6];
      const Mask& m = seg.objectMasks[obj][f];
      for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x)
          if (m(y, x)) {
            out.r(y, x) = static_cast<std::uint8_t>(std::lround(0.6 * out.r(y, x) + 0.4 * color[0]));
            out.g(y, x) = static_cast<std::uint8_t>(std::lround(0.6 * out.g(y, x) + 0.4 * color[1]));
            out.b(y, x) = static_cast<std::uint8_t>(std::lround(0.6 * out.b(y, x) + 0.4 * color[2]));
          }
    }
    char idx[16];
    std::snprintf(idx, sizeof(idx), "%03d", f);
    writePpm(outDir / (std::string(idx) + ".ppm"), out);
  }
}

std::string reportToJson(const EvalReport& report) {
  json j;
  j["set"] = report.setName;
  j["metric"] = "iou";
  j["aggregation"] = report.aggregation;
  j["meanIoU"] = report.meanIoU;
  j["videos"] = json::array();
  for (const VideoEval& v : report.videos) {
    json jv;
    jv["video"] = v.id;
    jv["slotToLabel"] = v.slotToLabel;
    jv["perObjectIoU"] = v.perObjectIoU;
    jv["meanIoU"] = v.meanIoU;
    j["videos"].push_back(jv);
  }
  json cfg;
  for (const auto& [k, val] : report.configEcho) cfg[k] = val;
  j["config"] = cfg;
  j["timing"] = {{"wallSeconds", report.wallSeconds}};
  return j.dump(2) + "\n";
}

EvalReport reportFromJson(const std::string& text) {
  const json j = json::parse(text);
  EvalReport r;
  r.setName = j.at("set").get<std::string>();
  r.aggregation = j.at("aggregation").get<std::string>();
  r.meanIoU = j.at("meanIoU").get<double>();
  for (const json& jv : j.at("videos")) {
    VideoEval v;
    v.id = jv.at("video").get<std::string>();
    v.slotToLabel = jv.at("slotToLabel").get<std::vector<int>>();
    v.perObjectIoU = jv.at("perObjectIoU").get<std::vector<double>>();
    v.meanIoU = jv.at("meanIoU").get<double>();
    r.videos.push_back(std::move(v));
  }
  for (const auto& [k, val] : j.at("config").items())
    r.configEcho.emplace_back(k, val.get<std::string>());
  r.wallSeconds = j.at("timing").at("wallSeconds").get<double>();
  return r;
}

std::string reportTable(const EvalReport& report) {
  std::ostringstream out;
  out << "set: " << report.setName << "  (metric: iou, " << report.aggregation << ")\n";
  out << std::left << std::setw(12) << "video" << std::setw(8) << "object" << std::setw(8)
      << "gt" << "iou\n";
  out << std::fixed << std::setprecision(4);
  for (const VideoEval& v : report.videos) {
    for (size_t s = 0; s < v.perObjectIoU.size(); ++s) {
      out << std::left << std::setw(12) << v.id << std::setw(8) << s << std::setw(8)
          << (v.slotToLabel[s] >= 0 ? std::to_string(v.slotToLabel[s] + 1) : "-")
          << v.perObjectIoU[s] << "\n";
    }
  }
  out << "mean IoU: " << report.meanIoU << "\n";
  return out.str();
}

}  // namespace coseg
