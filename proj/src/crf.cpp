#include "coseg/crf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace coseg {

namespace {

std::vector<const Proposal*> strideSample(const Stream& s, int k) {
  std::vector<const Proposal*> all;
  all.reserve(s.entries.size());
  for (const auto& [f, p] : s.entries) all.push_back(&p);
  const int n = static_cast<int>(all.size());
  if (k >= n) return all;
  std::vector<const Proposal*> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) {
    const int idx = k == 1 ? 0 : static_cast<int>(std::llround(i * double(n - 1) / (k - 1)));
    out.push_back(all[idx]);
  }
  return out;
}

}  // namespace

double rawStreamDistance(const Stream& s1, const Stream& s2, double colorWeight, int pairBudget) {
  if (s1.entries.empty() || s2.entries.empty())
    throw std::runtime_error("streamDistance: empty stream");
  const long n1 = static_cast<long>(s1.entries.size());
  const long n2 = static_cast<long>(s2.entries.size());
  std::vector<const Proposal*> a, b;
  if (n1 * n2 > pairBudget) {
    const int k1 = static_cast<int>(
        std::min(n1, std::max<long>(1, static_cast<long>(std::sqrt(double(pairBudget))))));
    const int k2 = static_cast<int>(std::min(n2, std::max<long>(1, pairBudget / k1)));
    a = strideSample(s1, k1);
    b = strideSample(s2, k2);
  } else {
    a = strideSample(s1, static_cast<int>(n1));
    b = strideSample(s2, static_cast<int>(n2));
  }
  double sum = 0;
  for (const Proposal* p1 : a)
    for (const Proposal* p2 : b) sum += featureDistance(p1->feature, p2->feature, colorWeight);
  return sum / (static_cast<double>(a.size()) * b.size());
}

double streamDistance(const Stream& s1, const Stream& s2, double colorWeight, double mm,
                      int pairBudget) {
  if (mm <= 0) throw std::runtime_error("streamDistance: Mm must be > 0");
  return rawStreamDistance(s1, s2, colorWeight, pairBudget) / mm;
}

CrfModel buildCrf(const std::vector<StreamSet>& streamSets,
                  const std::vector<SaliencyMap>& saliency, const CrfBuildParams& params) {
  const int nVideos = static_cast<int>(streamSets.size());
  if (nVideos == 0) throw std::runtime_error("buildCrf: no videos");
  if (static_cast<int>(params.slotCounts.size()) != nVideos)
    throw std::runtime_error("buildCrf: slotCounts must match video count");
  if (static_cast<int>(saliency.size()) != nVideos)
    throw std::runtime_error("buildCrf: saliency maps must match video count");
  for (const StreamSet& s : streamSets)
    if (s.streams.empty()) throw std::runtime_error("buildCrf: empty stream set for " + s.videoId);
  for (int c : params.slotCounts)
    if (c < 1) throw std::runtime_error("buildCrf: slot counts must be >= 1");

  // raw pairwise distances; their mean over all compared pairs is Mm
  std::vector<Eigen::MatrixXd> rawWithin(nVideos);
  std::vector<std::vector<Eigen::MatrixXd>> rawAcross(nVideos,
                                                      std::vector<Eigen::MatrixXd>(nVideos));
  double rawSum = 0;
  long rawCount = 0;
  for (int v = 0; v < nVideos; ++v) {
    const auto& st = streamSets[v].streams;
    const int m = static_cast<int>(st.size());
    rawWithin[v].resize(m, m);
    for (int i = 0; i < m; ++i) {
      rawWithin[v](i, i) = rawStreamDistance(st[i], st[i], params.colorWeight, params.pairBudget);
      for (int j = i + 1; j < m; ++j) {
        const double d = rawStreamDistance(st[i], st[j], params.colorWeight, params.pairBudget);
        rawWithin[v](i, j) = rawWithin[v](j, i) = d;
        rawSum += d;
        ++rawCount;
      }
    }
  }
  for (int v = 0; v < nVideos; ++v)
    for (int u = v + 1; u < nVideos; ++u) {
      const auto& sv = streamSets[v].streams;
      const auto& su = streamSets[u].streams;
      Eigen::MatrixXd raw(sv.size(), su.size());
      for (size_t i = 0; i < sv.size(); ++i)
        for (size_t j = 0; j < su.size(); ++j) {
          raw(static_cast<int>(i), static_cast<int>(j)) =
              rawStreamDistance(sv[i], su[j], params.colorWeight, params.pairBudget);
          rawSum += raw(static_cast<int>(i), static_cast<int>(j));
          ++rawCount;
        }
      rawAcross[v][u] = std::move(raw);
    }
  const double mm = rawCount > 0 ? std::max(rawSum / rawCount, 1e-12) : 1.0;

  // unary: -log(clamp(max(Abar, S))), Abar rescaled by the set-wide maximum
  double maxCombined = 0;
  for (const StreamSet& s : streamSets)
    for (const Stream& st : s.streams) maxCombined = std::max(maxCombined, st.meanCombined);

  CrfModel model;
  model.alpha1 = params.alpha1;
  model.alpha2 = params.alpha2;
  std::vector<std::vector<int>> nodeOf(nVideos);
  for (int v = 0; v < nVideos; ++v) {
    const auto& st = streamSets[v].streams;
    Eigen::VectorXd unary(st.size());
    for (size_t i = 0; i < st.size(); ++i) {
      const double abar = maxCombined > 0 ? st[i].meanCombined / maxCombined : 0.0;
      double salSum = 0;
      for (const auto& [f, p] : st[i].entries) salSum += saliencyScore(saliency[v], f, p.mask);
      const double sal = salSum / static_cast<double>(st[i].entries.size());
      const double arg = std::clamp(std::max(abar, sal), params.epsilonProb, 1.0);
      unary(static_cast<int>(i)) = -std::log(arg);
    }
    for (int k = 0; k < params.slotCounts[v]; ++k) {
      nodeOf[v].push_back(model.nodeCount());
      model.nodes.push_back({v, k});
      model.stateCounts.push_back(static_cast<int>(st.size()));
      model.unary.push_back(unary);
    }
  }

  // intra edges: slot pairs within a video
  for (int v = 0; v < nVideos; ++v) {
    const int m = static_cast<int>(streamSets[v].streams.size());
    Eigen::MatrixXd table(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const double df = std::max(rawWithin[v](i, j) / mm, params.epsilonProb);
        table(i, j) = -std::log(df) + (i == j ? params.eBig : 0.0);
      }
    for (int k = 0; k < params.slotCounts[v]; ++k)
      for (int h = k + 1; h < params.slotCounts[v]; ++h)
        model.edges.push_back({nodeOf[v][k], nodeOf[v][h], EdgeKind::Intra, table});
  }

  // inter edges: every slot pair across every video pair
  for (int v = 0; v < nVideos; ++v)
    for (int u = v + 1; u < nVideos; ++u) {
      const Eigen::MatrixXd table = rawAcross[v][u] / mm;
      for (int k = 0; k < params.slotCounts[v]; ++k)
        for (int l = 0; l < params.slotCounts[u]; ++l)
          model.edges.push_back({nodeOf[v][k], nodeOf[u][l], EdgeKind::Inter, table});
    }
  return model;
}

double evaluateEnergy(const CrfModel& model, const std::vector<int>& assignment) {
  if (assignment.size() != model.nodes.size())
    throw std::runtime_error("evaluateEnergy: assignment size mismatch");
  double e = 0;
  for (size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] < 0 || assignment[i] >= model.stateCounts[i])
      throw std::runtime_error("evaluateEnergy: state index out of range");
    e += model.unary[i](assignment[i]);
  }
  for (const CrfEdge& edge : model.edges) {
    const double w = edge.kind == EdgeKind::Intra ? model.alpha1 : model.alpha2;
    e += w * edge.table(assignment[edge.a], assignment[edge.b]);
  }
  return e;
}

Labeling solveBruteForce(const CrfModel& model) {
  double total = 1;
  for (int c : model.stateCounts) total *= c;
  if (total > 1e7) throw std::runtime_error("solveBruteForce: state space too large");
  const int n = model.nodeCount();
  std::vector<int> cur(n, 0);
  Labeling best;
  best.states = cur;
  best.energy = evaluateEnergy(model, cur);
  while (true) {
    // odometer increment, lexicographic order
    int pos = n - 1;
    while (pos >= 0) {
      if (++cur[pos] < model.stateCounts[pos]) break;
      cur[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
    const double e = evaluateEnergy(model, cur);
    if (e < best.energy) {
      best.energy = e;
      best.states = cur;
    }
  }
  return best;
}

// --- TRW-S ---

namespace {

struct TrwsEdge {
  int a, b;                 // a < b
  Eigen::MatrixXd w;        // alpha-weighted table
  Eigen::VectorXd msgToA;   // normalized message into a
  Eigen::VectorXd msgToB;
};

struct TrwsGraph {
  std::vector<TrwsEdge> edges;
  std::vector<std::vector<int>> incident;  // per node: edge ids
  std::vector<Eigen::VectorXd> cumCost;
  std::vector<double> gammaInv;  // nChains per node
};

}  // namespace

TrwsResult solveTrws(const CrfModel& model, int maxIters, double tol) {
  if (maxIters < 1) throw std::runtime_error("solveTrws: maxIters must be >= 1");
  const int n = model.nodeCount();

  TrwsGraph g;
  g.incident.resize(n);
  for (const CrfEdge& e : model.edges) {
    TrwsEdge te;
    te.a = std::min(e.a, e.b);
    te.b = std::max(e.a, e.b);
    if (te.a == te.b) throw std::runtime_error("solveTrws: self edge");
    const double w = e.kind == EdgeKind::Intra ? model.alpha1 : model.alpha2;
    if (e.a < e.b) {
      te.w = w * e.table;
    } else {
      te.w = w * e.table.transpose();
    }
    te.msgToA = Eigen::VectorXd::Zero(model.stateCounts[te.a]);
    te.msgToB = Eigen::VectorXd::Zero(model.stateCounts[te.b]);
    const int id = static_cast<int>(g.edges.size());
    g.edges.push_back(std::move(te));
    g.incident[g.edges.back().a].push_back(id);
    g.incident[g.edges.back().b].push_back(id);
  }
  g.cumCost.resize(n);
  g.gammaInv.resize(n);
  for (int i = 0; i < n; ++i) {
    int fwd = 0, bwd = 0;
    for (int id : g.incident[i]) (g.edges[id].a == i ? fwd : bwd)++;
    g.gammaInv[i] = std::max(1, std::max(fwd, bwd));
    g.cumCost[i] = model.unary[i] / g.gammaInv[i];
  }

  // recompute the message into node i along edge id; returns the
  // normalization offset
  auto passMessage = [&](int id, int i) {
    TrwsEdge& e = g.edges[id];
    if (i == e.a) {
      const Eigen::VectorXd other = g.cumCost[e.b] - e.msgToB;
      e.msgToA = (e.w.rowwise() + other.transpose()).rowwise().minCoeff();
      const double off = e.msgToA.minCoeff();
      e.msgToA.array() -= off;
      return off;
    }
    const Eigen::VectorXd other = g.cumCost[e.a] - e.msgToA;
    e.msgToB = (e.w.colwise() + other).colwise().minCoeff().transpose();
    const double off = e.msgToB.minCoeff();
    e.msgToB.array() -= off;
    return off;
  };

  std::vector<int> aggArgmin(n, 0);  // per-node argmin of the pass aggregate
  auto halfPass = [&](bool forward) {
    double bound = 0;
    for (int step = 0; step < n; ++step) {
      const int i = forward ? step : n - 1 - step;
      Eigen::VectorXd agg = model.unary[i];
      for (int id : g.incident[i]) {
        const TrwsEdge& e = g.edges[id];
        const bool otherLater = (e.a == i) ? (e.b > i) : (e.a > i);
        const bool recompute = forward ? !otherLater : otherLater;
        if (recompute) bound += passMessage(id, i);
        agg += (e.a == i) ? g.edges[id].msgToA : g.edges[id].msgToB;
      }
      int arg = 0;
      const double off = agg.minCoeff(&arg);
      aggArgmin[i] = arg;
      bound += off;
      g.cumCost[i] = (agg.array() - off).matrix() / g.gammaInv[i];
    }
    return bound;
  };

  // conditional decode: nodes in pass order, conditioning on already-decoded
  // neighbors and taking messages from the not-yet-decoded side
  auto decode = [&](bool forward) {
    std::vector<int> states(n, 0);
    std::vector<char> fixed(n, 0);
    for (int step = 0; step < n; ++step) {
      const int i = forward ? step : n - 1 - step;
      Eigen::VectorXd score = model.unary[i];
      for (int id : g.incident[i]) {
        const TrwsEdge& e = g.edges[id];
        const int other = e.a == i ? e.b : e.a;
        if (fixed[other]) {
          if (e.a == i) score += e.w.col(states[other]);
          else score += e.w.row(states[other]).transpose();
        } else {
          score += e.a == i ? e.msgToA : e.msgToB;
        }
      }
      int arg = 0;
      score.minCoeff(&arg);
      states[i] = arg;
      fixed[i] = 1;
    }
    return states;
  };

  TrwsResult result;
  result.labeling.states.assign(n, 0);
  result.labeling.energy = std::numeric_limits<double>::max();
  auto consider = [&](const std::vector<int>& states) {
    const double energy = evaluateEnergy(model, states);
    if (energy < result.labeling.energy) {
      result.labeling.states = states;
      result.labeling.energy = energy;
    }
  };
  double prevBound = -std::numeric_limits<double>::max();
  for (int iter = 0; iter < maxIters; ++iter) {
    halfPass(true);
    consider(aggArgmin);
    consider(decode(false));
    const double bound = halfPass(false);
    result.lowerBoundTrace.push_back(bound);
    result.lowerBound = bound;
    result.iterations = iter + 1;
    consider(aggArgmin);
    consider(decode(true));
    if (iter > 0 && bound - prevBound < tol) break;
    prevBound = bound;
  }
  return result;
}

// --- plain-text model I/O ---

void saveCrfModel(const std::filesystem::path& file, const CrfModel& model) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot create " + file.string());
  out.precision(17);
  out << "coseg-crf 1\n";
  out << "nodes " << model.nodeCount() << "\n";
  out << "states";
  for (int c : model.stateCounts) out << " " << c;
  out << "\n";
  out << "alphas " << model.alpha1 << " " << model.alpha2 << "\n";
  for (int i = 0; i < model.nodeCount(); ++i) {
    out << "node " << i << " " << model.nodes[i].video << " " << model.nodes[i].slot << "\n";
    out << "unary " << i << "\n";
    for (int s = 0; s < model.stateCounts[i]; ++s)
      out << model.unary[i](s) << (s + 1 == model.stateCounts[i] ? "\n" : " ");
  }
  for (const CrfEdge& e : model.edges) {
    out << "edge " << e.a << " " << e.b << " "
        << (e.kind == EdgeKind::Intra ? "intra" : "inter") << "\n";
    for (int r = 0; r < e.table.rows(); ++r) {
      for (int c = 0; c < e.table.cols(); ++c)
        out << e.table(r, c) << (c + 1 == e.table.cols() ? "\n" : " ");
    }
  }
  out << "end\n";
}

CrfModel loadCrfModel(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  const auto malformed = [&]() {
    return std::runtime_error("malformed coseg-crf model: " + file.string());
  };
  std::string word;
  int version;
  if (!(in >> word >> version) || word != "coseg-crf" || version != 1)
    throw std::runtime_error("not a coseg-crf model: " + file.string());
  CrfModel model;
  int n = 0;
  bool ended = false;
  while (in >> word) {
    if (word == "nodes") {
      if (!(in >> n) || n < 1 || n > 1000000) throw malformed();
      model.nodes.resize(n);
      model.stateCounts.assign(n, 0);
      model.unary.resize(n);
    } else if (word == "states") {
      for (int i = 0; i < n; ++i)
        if (!(in >> model.stateCounts[i]) || model.stateCounts[i] < 1 ||
            model.stateCounts[i] > 1000000)
          throw malformed();
      if (n == 0) throw malformed();
    } else if (word == "alphas") {
      if (!(in >> model.alpha1 >> model.alpha2)) throw malformed();
    } else if (word == "node") {
      int i;
      if (!(in >> i) || i < 0 || i >= n) throw malformed();
      if (!(in >> model.nodes[i].video >> model.nodes[i].slot)) throw malformed();
    } else if (word == "unary") {
      int i;
      if (!(in >> i) || i < 0 || i >= n || model.stateCounts[i] < 1) throw malformed();
      model.unary[i].resize(model.stateCounts[i]);
      for (int s = 0; s < model.stateCounts[i]; ++s)
        if (!(in >> model.unary[i](s))) throw malformed();
    } else if (word == "edge") {
      CrfEdge e;
      std::string kind;
      if (!(in >> e.a >> e.b >> kind)) throw malformed();
      if (e.a < 0 || e.a >= n || e.b < 0 || e.b >= n || e.a == e.b) throw malformed();
      if (model.stateCounts[e.a] < 1 || model.stateCounts[e.b] < 1) throw malformed();
      if (kind != "intra" && kind != "inter") throw malformed();
      e.kind = kind == "intra" ? EdgeKind::Intra : EdgeKind::Inter;
      e.table.resize(model.stateCounts[e.a], model.stateCounts[e.b]);
      for (int r = 0; r < e.table.rows(); ++r)
        for (int c = 0; c < e.table.cols(); ++c)
          if (!(in >> e.table(r, c))) throw malformed();
      model.edges.push_back(std::move(e));
    } else if (word == "end") {
      ended = true;
      break;
    } else {
      throw std::runtime_error("unexpected token in model file: " + word);
    }
  }
  if (!ended) throw std::runtime_error("truncated model file: " + file.string());
  for (int i = 0; i < n; ++i)
    if (model.unary[i].size() != model.stateCounts[i]) throw malformed();
  return model;
}

}  // namespace coseg
