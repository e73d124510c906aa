#include "coseg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstring>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace fs = std::filesystem;

namespace coseg {

void parallelFor(int count, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, std::max(1, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex errorMutex;
  auto worker = [&]() {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(errorMutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
  for (std::thread& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

int mergeClusterCount(int incompleteStreams, const PipelineConfig& cfg) {
  const int base = incompleteStreams > cfg.yCutoff ? cfg.yLarge : cfg.ySmall;
  return std::max(1, std::min(base, incompleteStreams / 2));
}

namespace {

std::string frameName(int idx, const char* ext) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d%s", idx, ext);
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

[[noreturn]] void stageError(const std::string& stage, const std::string& videoId,
                             const std::string& what) {
  throw std::runtime_error("stage " + stage + (videoId.empty() ? "" : ", video " + videoId) +
                           ": " + what);
}

template <typename Fn>
auto withStage(const std::string& stage, const std::string& videoId, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    stageError(stage, videoId, e.what());
  }
}

// --- stage dumps ---

void writeFlowDump(const fs::path& dir, const std::vector<FlowField>& flows) {
  fs::create_directories(dir);
  for (size_t i = 0; i < flows.size(); ++i) {
    std::ofstream out(dir / frameName(static_cast<int>(i), ".flo"), std::ios::binary);
    const FlowField& f = flows[i];
    out << "COSEGF1\n" << f.width() << " " << f.height() << "\n";
    for (int y = 0; y < f.height(); ++y)
      for (int x = 0; x < f.width(); ++x) {
        const float v[2] = {f.dx(y, x), f.dy(y, x)};
        out.write(reinterpret_cast<const char*>(v), sizeof(v));
      }
  }
}

std::vector<FlowField> readFlowDump(const fs::path& dir, int frameCount) {
  std::vector<FlowField> flows;
  for (int i = 0; i < frameCount; ++i) {
    const fs::path file = dir / frameName(i, ".flo");
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("missing flow dump " + file.string());
    std::string magic;
    int w, h;
    in >> magic >> w >> h;
    if (magic != "COSEGF1") throw std::runtime_error("bad flow dump " + file.string());
    in.get();  // newline
    FlowField f;
    f.dx.resize(h, w);
    f.dy.resize(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        float v[2];
        in.read(reinterpret_cast<char*>(v), sizeof(v));
        f.dx(y, x) = v[0];
        f.dy(y, x) = v[1];
      }
    if (!in) throw std::runtime_error("truncated flow dump " + file.string());
    flows.push_back(std::move(f));
  }
  return flows;
}

void writeTcsDump(const fs::path& dir, const SuperpixelMap& spm) {
  fs::create_directories(dir);
  if (spm.labelCount > 65535)
    throw std::runtime_error("tcs dump: more than 65535 labels");
  for (size_t i = 0; i < spm.labels.size(); ++i) {
    writePgm16(dir / frameName(static_cast<int>(i), ".pgm"),
               spm.labels[i].cast<std::uint16_t>());
  }
}

SuperpixelMap readTcsDump(const fs::path& dir, int frameCount) {
  SuperpixelMap spm;
  for (int i = 0; i < frameCount; ++i) {
    const fs::path file = dir / frameName(i, ".pgm");
    if (!fs::exists(file)) throw std::runtime_error("missing tcs dump " + file.string());
    spm.labels.push_back(readPgm16(file).cast<int>());
    spm.labelCount = std::max(spm.labelCount, spm.labels.back().maxCoeff() + 1);
  }
  return spm;
}

void writeProposalsDump(const fs::path& dir, const std::vector<std::vector<Proposal>>& perFrame,
                        double meanChi2) {
  fs::create_directories(dir);
  std::ofstream csv(dir / "index.csv");
  csv << "frame,rank,objectness,motion,combined,origin\n";
  for (size_t f = 0; f < perFrame.size(); ++f) {
    for (const Proposal& p : perFrame[f]) {
      csv << f << "," << p.rank << "," << fmt(p.objectness) << "," << fmt(p.motion) << ","
          << fmt(p.combined) << ","
          << (p.origin == ProposalOrigin::Generated ? "generated" : "predicted") << "\n";
      writeMaskPgm(dir / ("f" + std::to_string(f) + "_r" + std::to_string(p.rank) + ".pgm"),
                   p.mask);
    }
  }
  std::ofstream meta(dir / "meta.txt");
  meta << "meanFlowChi2=" << fmt(meanChi2) << "\n";
}

std::pair<std::vector<std::vector<Proposal>>, double> readProposalsDump(
    const fs::path& dir, const Video& video, const std::vector<LabImage>& labs,
    const SuperpixelMap& spm) {
  const fs::path csvPath = dir / "index.csv";
  std::ifstream csv(csvPath);
  if (!csv) throw std::runtime_error("missing proposals dump " + csvPath.string());
  std::vector<std::vector<Proposal>> perFrame(video.frameCount());
  std::string line;
  std::getline(csv, line);  // header
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    Proposal p;
    p.videoId = video.id;
    std::getline(ss, field, ',');
    p.frame = std::stoi(field);
    std::getline(ss, field, ',');
    p.rank = std::stoi(field);
    std::getline(ss, field, ',');
    p.objectness = std::stod(field);
    std::getline(ss, field, ',');
    p.motion = std::stod(field);
    std::getline(ss, field, ',');
    p.combined = std::stod(field);
    std::getline(ss, field, ',');
    p.origin = field == "predicted" ? ProposalOrigin::Predicted : ProposalOrigin::Generated;
    const fs::path maskFile =
        dir / ("f" + std::to_string(p.frame) + "_r" + std::to_string(p.rank) + ".pgm");
    p.mask = readPgm(maskFile).unaryExpr([](std::uint8_t v) { return v > 0; }).eval();
    p.tcsLabels = labelsOfMask(spm, p.frame, p.mask);
    p.feature = regionFeature(video.frames[p.frame], labs[p.frame], p.mask);
    perFrame[p.frame].push_back(std::move(p));
  }
  double meanChi2 = 0;
  std::ifstream meta(dir / "meta.txt");
  if (meta) {
    std::string metaLine;
    while (std::getline(meta, metaLine)) {
      if (metaLine.rfind("meanFlowChi2=", 0) == 0) meanChi2 = std::stod(metaLine.substr(13));
    }
  }
  return {std::move(perFrame), meanChi2};
}

void writeStreamsCsv(const fs::path& file, const StreamSet& set) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream csv(file);
  csv << "stream,frame,rank,origin\n";
  for (size_t s = 0; s < set.streams.size(); ++s)
    for (const auto& [f, p] : set.streams[s].entries)
      csv << s << "," << f << "," << p.rank << ","
          << (p.origin == ProposalOrigin::Generated ? "generated" : "predicted") << "\n";
}

StreamSet readStreamsCsv(const fs::path& file, const std::vector<std::vector<Proposal>>& expanded,
                         const std::string& videoId, int frameCount) {
  std::ifstream csv(file);
  if (!csv) throw std::runtime_error("missing streams dump " + file.string());
  std::map<int, Stream> streams;
  std::string line;
  std::getline(csv, line);
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    const int sIdx = std::stoi(field);
    std::getline(ss, field, ',');
    const int frame = std::stoi(field);
    std::getline(ss, field, ',');
    const int rank = std::stoi(field);
    const Proposal* found = nullptr;
    for (const Proposal& p : expanded[frame])
      if (p.rank == rank) {
        found = &p;
        break;
      }
    if (!found)
      throw std::runtime_error("streams dump references missing proposal f" +
                               std::to_string(frame) + " r" + std::to_string(rank));
    auto& s = streams[sIdx];
    s.videoId = videoId;
    s.entries.emplace(frame, *found);
  }
  StreamSet set;
  set.videoId = videoId;
  for (auto& [idx, s] : streams) {
    s.refreshDerived(frameCount);
    set.streams.push_back(std::move(s));
  }
  return set;
}

void writeStreamMasks(const fs::path& dir, const StreamSet& set) {
  fs::create_directories(dir);
  for (size_t s = 0; s < set.streams.size(); ++s)
    for (const auto& [f, p] : set.streams[s].entries)
      writeMaskPgm(dir / ("s" + std::to_string(s) + "_f" + std::to_string(f) + ".pgm"), p.mask);
}

void writeSaliencyDump(const fs::path& dir, const SaliencyMap& map) {
  fs::create_directories(dir);
  for (size_t f = 0; f < map.frames.size(); ++f) {
    Imageu8 img(map.frames[f].rows(), map.frames[f].cols());
    for (int y = 0; y < img.rows(); ++y)
      for (int x = 0; x < img.cols(); ++x)
        img(y, x) = static_cast<std::uint8_t>(std::lround(map.frames[f](y, x) * 255.0f));
    writePgm(dir / frameName(static_cast<int>(f), ".pgm"), img);
  }
}

void writeLabeling(const fs::path& file, const TrwsResult& res) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file);
  out << "energy " << fmt(res.labeling.energy) << "\n";
  out << "lowerBound " << fmt(res.lowerBound) << "\n";
  out << "states";
  for (int s : res.labeling.states) out << " " << s;
  out << "\n";
}

std::vector<int> readLabeling(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("missing labeling dump " + file.string());
  std::string word;
  std::vector<int> states;
  while (in >> word) {
    if (word == "energy" || word == "lowerBound") {
      double ignored;
      in >> ignored;
    } else if (word == "states") {
      int s;
      while (in >> s) states.push_back(s);
    }
  }
  return states;
}

void writeFinalMasks(const fs::path& outDir, const SegmentationResult& result) {
  for (const VideoSegmentation& seg : result.videos) {
    for (size_t obj = 0; obj < seg.objectMasks.size(); ++obj) {
      const fs::path dir = outDir / "masks" / seg.videoId / std::to_string(obj + 1);
      fs::create_directories(dir);
      for (size_t f = 0; f < seg.objectMasks[obj].size(); ++f)
        writeMaskPgm(dir / frameName(static_cast<int>(f), ".pgm"), seg.objectMasks[obj][f]);
    }
  }
}

SegmentationResult readFinalMasks(const fs::path& outDir, const VideoSetManifest& manifest,
                                  const std::vector<int>& frameCounts) {
  SegmentationResult result;
  for (size_t v = 0; v < manifest.videos.size(); ++v) {
    VideoSegmentation seg;
    seg.videoId = manifest.videos[v].id;
    seg.objectMasks.resize(manifest.objectCount);
    for (int obj = 0; obj < manifest.objectCount; ++obj) {
      const fs::path dir = outDir / "masks" / seg.videoId / std::to_string(obj + 1);
      for (int f = 0; f < frameCounts[v]; ++f) {
        const fs::path file = dir / frameName(f, ".pgm");
        if (!fs::exists(file)) throw std::runtime_error("missing mask dump " + file.string());
        seg.objectMasks[obj].push_back(
            readPgm(file).unaryExpr([](std::uint8_t px) { return px > 0; }).eval());
      }
    }
    result.videos.push_back(std::move(seg));
  }
  return result;
}

// --- per-video front half of the pipeline ---

struct VideoWork {
  Video video;
  std::vector<LabImage> labs;
  std::vector<FlowField> flows;
  SuperpixelMap tcs;
  std::vector<std::vector<Proposal>> scored;    // snapshot before expansion
  std::vector<std::vector<Proposal>> expanded;
  double meanChi2 = 0;
  StreamSet preMerge;
  StreamSet merged;
};

GraphCutOptions warpOptions(const PipelineConfig& cfg) {
  return {cfg.warpColorClusters, cfg.warpSmoothness, cfg.warpPriorBlend, cfg.seed};
}

ProposalOptions proposalOptions(const PipelineConfig& cfg) {
  ProposalOptions po;
  po.maxPerFrame = cfg.maxProposalsPerFrame;
  po.colorTau = cfg.proposalColorTau;
  po.dedupIou = cfg.proposalDedupIou;
  return po;
}

void computeFrontHalf(VideoWork& w, const PipelineConfig& cfg) {
  const std::string& id = w.video.id;
  withStage("flow", id, [&] {
    w.flows = computeVideoFlows(w.video, {cfg.flowLevels, cfg.flowIters,
                                          static_cast<float>(cfg.flowAlpha)});
  });
  for (const Frame& f : w.video.frames) w.labs.push_back(rgbToLab(f));
  withStage("tcs", id, [&] {
    const std::vector<FlowField> consecutive(w.flows.begin(), w.flows.end() - 1);
    w.tcs = computeTcs(w.video, consecutive, cfg.tcsCount,
                       {cfg.tcsCompactness, cfg.slicIters, cfg.tcsColorGate});
  });
  withStage("proposals", id, [&] {
    w.scored.resize(w.video.frameCount());
    for (int f = 0; f < w.video.frameCount(); ++f)
      w.scored[f] = generateProposals(w.video.frames[f], w.labs[f], w.tcs, f,
                                      proposalOptions(cfg), id);
    w.meanChi2 = scoreProposals(w.scored, w.video, w.labs, w.flows);
  });
  withStage("expand", id, [&] {
    w.expanded = w.scored;
    expandProposals(w.expanded, w.tcs, w.video, w.labs, w.flows, cfg.gamma, w.meanChi2,
                    warpOptions(cfg), proposalOptions(cfg));
  });
  withStage("streams", id, [&] {
    w.preMerge = buildStreams(w.expanded, w.tcs, w.video, w.labs, cfg.xInit, cfg.xGrow, cfg.gamma,
                              warpOptions(cfg));
    int incomplete = 0;
    for (const Stream& s : w.preMerge.streams)
      if (!s.complete && s.entries.size() >= 2) ++incomplete;
    w.merged = mergeStreams(w.preMerge, mergeClusterCount(incomplete, cfg), cfg.seed,
                            w.video.frameCount());
    if (w.merged.streams.empty())
      throw std::runtime_error("no streams survive merging (no object-like regions found)");
  });
}

RefineOptions refineOptions(const PipelineConfig& cfg) {
  return {cfg.refineSmoothness, cfg.refineTemporal, cfg.refinePriorBlend, cfg.refineColorClusters,
          cfg.seed};
}

}  // namespace

PipelineArtifacts runPipeline(const VideoSetManifest& manifest, const PipelineConfig& cfg,
                              const fs::path& outDir, bool dumpStages) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(outDir);

  const int nVideos = static_cast<int>(manifest.videos.size());
  std::vector<VideoWork> work(nVideos);
  for (int v = 0; v < nVideos; ++v) {
    work[v].video = withStage("load", manifest.videos[v].id,
                              [&] { return loadVideo(manifest.videos[v].framesDir); });
    work[v].video.id = manifest.videos[v].id;
  }
  parallelFor(nVideos, cfg.threads, [&](int v) { computeFrontHalf(work[v], cfg); });

  PipelineArtifacts art;
  std::vector<Video> videosOnly;
  for (VideoWork& w : work) videosOnly.push_back(w.video);
  art.saliency = withStage("saliency", "", [&] {
    return coSaliency(videosOnly, cfg.saliencyClusters, cfg.seed);
  });

  std::vector<StreamSet> mergedSets;
  for (VideoWork& w : work) mergedSets.push_back(w.merged);
  CrfBuildParams params;
  params.slotCounts.assign(nVideos, manifest.objectCount);
  params.alpha1 = cfg.alpha1;
  params.alpha2 = cfg.alpha2;
  params.colorWeight = cfg.colorWeight;
  params.epsilonProb = cfg.epsilonProb;
  params.eBig = cfg.eBig;
  params.pairBudget = cfg.pairBudget;
  art.model = withStage("crf", "", [&] { return buildCrf(mergedSets, art.saliency, params); });
  art.inference = withStage("crf", "", [&] {
    return solveTrws(art.model, cfg.trwsIters, cfg.trwsTol);
  });

  art.selected.resize(nVideos);
  for (int i = 0; i < art.model.nodeCount(); ++i) {
    const CrfNode& node = art.model.nodes[i];
    art.selected[node.video].push_back(
        mergedSets[node.video].streams[art.inference.labeling.states[i]]);
  }

  art.segmentation.videos.resize(nVideos);
  parallelFor(nVideos, cfg.threads, [&](int v) {
    art.segmentation.videos[v] = withStage("refine", work[v].video.id, [&] {
      return refineStreams(work[v].video, work[v].flows, art.selected[v], refineOptions(cfg));
    });
  });

  writeFinalMasks(outDir, art.segmentation);
  for (int v = 0; v < nVideos; ++v)
    renderOverlay(work[v].video, art.segmentation.videos[v], outDir / "overlay" / work[v].video.id);

  if (dumpStages) {
    const fs::path stages = outDir / "stages";
    for (int v = 0; v < nVideos; ++v) {
      const std::string& id = work[v].video.id;
      writeFlowDump(stages / "flow" / id, work[v].flows);
      writeTcsDump(stages / "tcs" / id, work[v].tcs);
      writeProposalsDump(stages / "proposals" / id, work[v].scored, work[v].meanChi2);
      writeProposalsDump(stages / "expanded" / id, work[v].expanded, work[v].meanChi2);
      writeStreamsCsv(stages / "streams" / id / "premerge.csv", work[v].preMerge);
      writeStreamsCsv(stages / "streams" / id / "merged.csv", work[v].merged);
      writeStreamMasks(stages / "streams" / id, work[v].merged);
      writeSaliencyDump(stages / "saliency" / id, art.saliency[v]);
    }
    saveCrfModel(stages / "crf" / "model.txt", art.model);
    writeLabeling(stages / "crf" / "labeling.txt", art.inference);
  }

  bool allGt = true;
  for (const VideoSource& v : manifest.videos) allGt = allGt && v.gtDir.has_value();
  if (allGt) {
    std::vector<GroundTruthFrames> gt;
    for (const VideoSource& v : manifest.videos)
      gt.push_back(withStage("eval", v.id,
                             [&] { return loadGroundTruth(*v.gtDir, manifest.objectCount); }));
    EvalReport report =
        withStage("eval", "", [&] { return evaluateIoU(art.segmentation, gt, manifest); });
    report.configEcho = configEcho(cfg);
    report.wallSeconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream(outDir / "report.json") << reportToJson(report);
    std::cout << reportTable(report);
    art.report = std::move(report);
  }

  for (int v = 0; v < nVideos; ++v) {
    art.videos.push_back(std::move(work[v].video));
    art.flows.push_back(std::move(work[v].flows));
    art.tcs.push_back(std::move(work[v].tcs));
    art.scored.push_back(std::move(work[v].scored));
    art.expanded.push_back(std::move(work[v].expanded));
    art.meanFlowChi2.push_back(work[v].meanChi2);
    art.preMergeStreams.push_back(std::move(work[v].preMerge));
    art.streams.push_back(std::move(work[v].merged));
  }
  return art;
}

void runStage(const std::string& stage, const VideoSetManifest& manifest,
              const PipelineConfig& cfg, const fs::path& outDir) {
  static const std::vector<std::string> known{"flow",    "tcs", "proposals", "expand",
                                              "streams", "crf", "refine",    "eval"};
  if (std::find(known.begin(), known.end(), stage) == known.end())
    throw std::runtime_error("unknown stage: " + stage +
                             " (expected flow|tcs|proposals|expand|streams|crf|refine|eval)");
  const fs::path stages = outDir / "stages";

  // crf on an existing model dump needs no other inputs
  if (stage == "crf" && fs::exists(stages / "crf" / "model.txt")) {
    const CrfModel model = loadCrfModel(stages / "crf" / "model.txt");
    const TrwsResult res = solveTrws(model, cfg.trwsIters, cfg.trwsTol);
    writeLabeling(stages / "crf" / "labeling.txt", res);
    std::cout << "labeling:";
    for (int s : res.labeling.states) std::cout << " " << s;
    std::cout << "\nenergy: " << fmt(res.labeling.energy)
              << "\nlowerBound: " << fmt(res.lowerBound) << "\n";
    return;
  }

  const int nVideos = static_cast<int>(manifest.videos.size());
  std::vector<Video> videos(nVideos);
  std::vector<std::vector<LabImage>> labs(nVideos);
  for (int v = 0; v < nVideos; ++v) {
    videos[v] = loadVideo(manifest.videos[v].framesDir);
    videos[v].id = manifest.videos[v].id;
    for (const Frame& f : videos[v].frames) labs[v].push_back(rgbToLab(f));
  }

  auto loadFlows = [&](int v) {
    return readFlowDump(stages / "flow" / videos[v].id, videos[v].frameCount());
  };
  auto loadTcs = [&](int v) {
    return readTcsDump(stages / "tcs" / videos[v].id, videos[v].frameCount());
  };

  if (stage == "flow") {
    parallelFor(nVideos, cfg.threads, [&](int v) {
      const auto flows = withStage("flow", videos[v].id, [&] {
        return computeVideoFlows(videos[v], {cfg.flowLevels, cfg.flowIters,
                                             static_cast<float>(cfg.flowAlpha)});
      });
      writeFlowDump(stages / "flow" / videos[v].id, flows);
    });
  } else if (stage == "tcs") {
    parallelFor(nVideos, cfg.threads, [&](int v) {
      const auto flows = loadFlows(v);
      const std::vector<FlowField> consecutive(flows.begin(), flows.end() - 1);
      const SuperpixelMap spm = withStage("tcs", videos[v].id, [&] {
        return computeTcs(videos[v], consecutive, cfg.tcsCount,
                          {cfg.tcsCompactness, cfg.slicIters, cfg.tcsColorGate});
      });
      writeTcsDump(stages / "tcs" / videos[v].id, spm);
    });
  } else if (stage == "proposals") {
    parallelFor(nVideos, cfg.threads, [&](int v) {
      const auto flows = loadFlows(v);
      const SuperpixelMap spm = loadTcs(v);
      std::vector<std::vector<Proposal>> perFrame(videos[v].frameCount());
      withStage("proposals", videos[v].id, [&] {
        for (int f = 0; f < videos[v].frameCount(); ++f)
          perFrame[f] = generateProposals(videos[v].frames[f], labs[v][f], spm, f,
                                          proposalOptions(cfg), videos[v].id);
        return 0;
      });
      const double meanChi2 = scoreProposals(perFrame, videos[v], labs[v], flows);
      writeProposalsDump(stages / "proposals" / videos[v].id, perFrame, meanChi2);
    });
  } else if (stage == "expand") {
    parallelFor(nVideos, cfg.threads, [&](int v) {
      const auto flows = loadFlows(v);
      const SuperpixelMap spm = loadTcs(v);
      auto [perFrame, meanChi2] =
          readProposalsDump(stages / "proposals" / videos[v].id, videos[v], labs[v], spm);
      withStage("expand", videos[v].id, [&] {
        expandProposals(perFrame, spm, videos[v], labs[v], flows, cfg.gamma, meanChi2,
                        warpOptions(cfg), proposalOptions(cfg));
        return 0;
      });
      writeProposalsDump(stages / "expanded" / videos[v].id, perFrame, meanChi2);
    });
  } else if (stage == "streams") {
    parallelFor(nVideos, cfg.threads, [&](int v) {
      const SuperpixelMap spm = loadTcs(v);
      auto [perFrame, meanChi2] =
          readProposalsDump(stages / "expanded" / videos[v].id, videos[v], labs[v], spm);
      const StreamSet pre = withStage("streams", videos[v].id, [&] {
        return buildStreams(perFrame, spm, videos[v], labs[v], cfg.xInit, cfg.xGrow, cfg.gamma,
                            warpOptions(cfg));
      });
      int incomplete = 0;
      for (const Stream& s : pre.streams)
        if (!s.complete && s.entries.size() >= 2) ++incomplete;
      const StreamSet merged = mergeStreams(pre, mergeClusterCount(incomplete, cfg), cfg.seed,
                                            videos[v].frameCount());
      writeStreamsCsv(stages / "streams" / videos[v].id / "premerge.csv", pre);
      writeStreamsCsv(stages / "streams" / videos[v].id / "merged.csv", merged);
      writeStreamMasks(stages / "streams" / videos[v].id, merged);
    });
  } else if (stage == "crf") {
    std::vector<StreamSet> sets;
    for (int v = 0; v < nVideos; ++v) {
      const SuperpixelMap spm = loadTcs(v);
      auto [perFrame, meanChi2] =
          readProposalsDump(stages / "expanded" / videos[v].id, videos[v], labs[v], spm);
      sets.push_back(readStreamsCsv(stages / "streams" / videos[v].id / "merged.csv", perFrame,
                                    videos[v].id, videos[v].frameCount()));
    }
    const auto saliency = coSaliency(videos, cfg.saliencyClusters, cfg.seed);
    CrfBuildParams params;
    params.slotCounts.assign(nVideos, manifest.objectCount);
    params.alpha1 = cfg.alpha1;
    params.alpha2 = cfg.alpha2;
    params.colorWeight = cfg.colorWeight;
    params.epsilonProb = cfg.epsilonProb;
    params.eBig = cfg.eBig;
    params.pairBudget = cfg.pairBudget;
    const CrfModel model = buildCrf(sets, saliency, params);
    saveCrfModel(stages / "crf" / "model.txt", model);
    const TrwsResult res = solveTrws(model, cfg.trwsIters, cfg.trwsTol);
    writeLabeling(stages / "crf" / "labeling.txt", res);
    std::cout << "labeling:";
    for (int s : res.labeling.states) std::cout << " " << s;
    std::cout << "\nenergy: " << fmt(res.labeling.energy)
              << "\nlowerBound: " << fmt(res.lowerBound) << "\n";
  } else if (stage == "refine") {
    const CrfModel model = loadCrfModel(stages / "crf" / "model.txt");
    const std::vector<int> states = readLabeling(stages / "crf" / "labeling.txt");
    if (states.size() != model.nodes.size())
      throw std::runtime_error("labeling does not match model");
    SegmentationResult result;
    result.videos.resize(nVideos);
    parallelFor(nVideos, cfg.threads, [&](int v) {
      const auto flows = loadFlows(v);
      const SuperpixelMap spm = loadTcs(v);
      auto [perFrame, meanChi2] =
          readProposalsDump(stages / "expanded" / videos[v].id, videos[v], labs[v], spm);
      const StreamSet merged = readStreamsCsv(stages / "streams" / videos[v].id / "merged.csv",
                                              perFrame, videos[v].id, videos[v].frameCount());
      std::vector<Stream> selected;
      for (int i = 0; i < model.nodeCount(); ++i)
        if (model.nodes[i].video == v) selected.push_back(merged.streams.at(states[i]));
      result.videos[v] = withStage("refine", videos[v].id, [&] {
        return refineStreams(videos[v], flows, selected, refineOptions(cfg));
      });
    });
    writeFinalMasks(outDir, result);
    for (int v = 0; v < nVideos; ++v)
      renderOverlay(videos[v], result.videos[v], outDir / "overlay" / videos[v].id);
  } else if (stage == "eval") {
    std::vector<int> frameCounts;
    for (const Video& v : videos) frameCounts.push_back(v.frameCount());
    const SegmentationResult result = readFinalMasks(outDir, manifest, frameCounts);
    std::vector<GroundTruthFrames> gt;
    for (const VideoSource& v : manifest.videos) {
      if (!v.gtDir) throw std::runtime_error("eval: manifest has no gt for " + v.id);
      gt.push_back(loadGroundTruth(*v.gtDir, manifest.objectCount));
    }
    EvalReport report = evaluateIoU(result, gt, manifest);
    report.configEcho = configEcho(cfg);
    std::ofstream(outDir / "report.json") << reportToJson(report);
    std::cout << reportTable(report);
  }
}

}  // namespace coseg
