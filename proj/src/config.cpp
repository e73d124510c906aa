#include "coseg/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace coseg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmtDouble(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct KeyHandler {
  const char* name;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
KeyHandler intKey(const char* name, T PipelineConfig::* field) {
  return {name,
          [field](PipelineConfig& c, const std::string& v) {
            c.*field = static_cast<T>(std::stol(v));
          },
          [field](const PipelineConfig& c) { return std::to_string(c.*field); }};
}

KeyHandler doubleKey(const char* name, double PipelineConfig::* field) {
  return {name,
          [field](PipelineConfig& c, const std::string& v) { c.*field = std::stod(v); },
          [field](const PipelineConfig& c) { return fmtDouble(c.*field); }};
}

const std::vector<KeyHandler>& handlers() {
  static const std::vector<KeyHandler> h = {
      intKey("seed", &PipelineConfig::seed),
      intKey("threads", &PipelineConfig::threads),
      intKey("flowLevels", &PipelineConfig::flowLevels),
      intKey("flowIters", &PipelineConfig::flowIters),
      doubleKey("flowAlpha", &PipelineConfig::flowAlpha),
      intKey("tcsCount", &PipelineConfig::tcsCount),
      doubleKey("tcsCompactness", &PipelineConfig::tcsCompactness),
      doubleKey("tcsColorGate", &PipelineConfig::tcsColorGate),
      intKey("slicIters", &PipelineConfig::slicIters),
      intKey("maxProposalsPerFrame", &PipelineConfig::maxProposalsPerFrame),
      doubleKey("proposalColorTau", &PipelineConfig::proposalColorTau),
      doubleKey("proposalDedupIou", &PipelineConfig::proposalDedupIou),
      doubleKey("gamma", &PipelineConfig::gamma),
      intKey("xInit", &PipelineConfig::xInit),
      intKey("xGrow", &PipelineConfig::xGrow),
      intKey("yLarge", &PipelineConfig::yLarge),
      intKey("ySmall", &PipelineConfig::ySmall),
      intKey("yCutoff", &PipelineConfig::yCutoff),
      doubleKey("colorWeight", &PipelineConfig::colorWeight),
      intKey("saliencyClusters", &PipelineConfig::saliencyClusters),
      doubleKey("alpha1", &PipelineConfig::alpha1),
      doubleKey("alpha2", &PipelineConfig::alpha2),
      intKey("trwsIters", &PipelineConfig::trwsIters),
      doubleKey("trwsTol", &PipelineConfig::trwsTol),
      intKey("pairBudget", &PipelineConfig::pairBudget),
      doubleKey("epsilonProb", &PipelineConfig::epsilonProb),
      doubleKey("eBig", &PipelineConfig::eBig),
      intKey("warpColorClusters", &PipelineConfig::warpColorClusters),
      doubleKey("warpSmoothness", &PipelineConfig::warpSmoothness),
      doubleKey("warpPriorBlend", &PipelineConfig::warpPriorBlend),
      doubleKey("refineSmoothness", &PipelineConfig::refineSmoothness),
      doubleKey("refineTemporal", &PipelineConfig::refineTemporal),
      doubleKey("refinePriorBlend", &PipelineConfig::refinePriorBlend),
      intKey("refineColorClusters", &PipelineConfig::refineColorClusters),
  };
  return h;
}

}  // namespace

PipelineConfig parseConfig(const std::string& text) {
  PipelineConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(ss, line)) {
    ++lineNo;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineNo) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    bool found = false;
    for (const KeyHandler& h : handlers()) {
      if (key == h.name) {
        h.set(cfg, val);
        found = true;
        break;
      }
    }
    if (!found) throw std::runtime_error("unknown config key: " + key);
  }
  return cfg;
}

PipelineConfig loadConfig(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open config: " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parseConfig(buf.str());
}

std::vector<std::pair<std::string, std::string>> configEcho(const PipelineConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const KeyHandler& h : handlers()) out.emplace_back(h.name, h.get(cfg));
  return out;
}

}  // namespace coseg
