#include "coseg/maxflow.hpp"

#include <cmath>
#include <stdexcept>

namespace coseg {

namespace {
constexpr double kCapScale = 1e6;
constexpr signed char kFree = 0, kSrc = 1, kSnk = 2;
}  // namespace

BkMaxFlow::BkMaxFlow(int nodeCount, int source, int sink)
    : n_(nodeCount), source_(source), sink_(sink) {
  if (nodeCount < 2 || source < 0 || sink < 0 || source >= nodeCount || sink >= nodeCount ||
      source == sink) {
    throw std::runtime_error("maxflow: invalid source/sink");
  }
  out_.resize(n_);
  parentArc_.assign(n_, -1);
  tree_.assign(n_, kFree);
  inActive_.assign(n_, 0);
}

int BkMaxFlow::addArc(int u, int v, std::int64_t cap, std::int64_t revCap) {
  if (u < 0 || v < 0 || u >= n_ || v >= n_) throw std::runtime_error("maxflow: bad arc endpoint");
  if (cap < 0 || revCap < 0) throw std::runtime_error("maxflow: negative capacity");
  if (u == v) {  // self loops carry no flow
    tail_.push_back(u);
    head_.push_back(v);
    cap_.push_back(0);
    res_.push_back(0);
    tail_.push_back(v);
    head_.push_back(u);
    cap_.push_back(0);
    res_.push_back(0);
    return static_cast<int>(tail_.size()) - 2;
  }
  const int id = static_cast<int>(tail_.size());
  tail_.push_back(u);
  head_.push_back(v);
  cap_.push_back(cap);
  res_.push_back(cap);
  out_[u].push_back(id);
  tail_.push_back(v);
  head_.push_back(u);
  cap_.push_back(revCap);
  res_.push_back(revCap);
  out_[v].push_back(id + 1);
  return id;
}

// walks tree parents to check the node is still connected to its root
bool BkMaxFlow::rootedWalk(int node) const {
  while (true) {
    if (node == source_ || node == sink_) return true;
    const int pa = parentArc_[node];
    if (pa < 0) return false;
    node = tree_[node] == kSrc ? tail_[pa] : head_[pa];
  }
}

int BkMaxFlow::growActive(int p) {
  for (int a : out_[p]) {
    const int q = head_[a];
    if (tree_[p] == kSrc) {
      if (res_[a] <= 0) continue;
      if (tree_[q] == kFree) {
        tree_[q] = kSrc;
        parentArc_[q] = a;
        if (!inActive_[q]) {
          inActive_[q] = 1;
          active_.push_back(q);
        }
      } else if (tree_[q] == kSnk) {
        return a;  // S->T connection
      }
    } else {  // p in sink tree: grow along residual arcs q->p
      const int ra = a ^ 1;
      if (res_[ra] <= 0) continue;
      if (tree_[q] == kFree) {
        tree_[q] = kSnk;
        parentArc_[q] = ra;  // T-tree parent pointers are arcs toward the sink
        if (!inActive_[q]) {
          inActive_[q] = 1;
          active_.push_back(q);
        }
      } else if (tree_[q] == kSrc) {
        return ra;  // arc q->p with q in S, p in T
      }
    }
  }
  return -1;
}

std::int64_t BkMaxFlow::augment(int e) {
  // bottleneck over S path, the connecting arc, and T path
  std::int64_t bottleneck = res_[e];
  for (int v = tail_[e]; v != source_; v = tail_[parentArc_[v]]) {
    bottleneck = std::min(bottleneck, res_[parentArc_[v]]);
  }
  for (int v = head_[e]; v != sink_; v = head_[parentArc_[v]]) {
    bottleneck = std::min(bottleneck, res_[parentArc_[v]]);
  }

  res_[e] -= bottleneck;
  res_[e ^ 1] += bottleneck;
  for (int v = tail_[e]; v != source_; ) {
    const int pa = parentArc_[v];
    res_[pa] -= bottleneck;
    res_[pa ^ 1] += bottleneck;
    const int next = tail_[pa];
    if (res_[pa] == 0) {
      parentArc_[v] = -1;
      orphans_.push_back(v);
    }
    v = next;
  }
  for (int v = head_[e]; v != sink_; ) {
    const int pa = parentArc_[v];
    res_[pa] -= bottleneck;
    res_[pa ^ 1] += bottleneck;
    const int next = head_[pa];
    if (res_[pa] == 0) {
      parentArc_[v] = -1;
      orphans_.push_back(v);
    }
    v = next;
  }
  return bottleneck;
}

void BkMaxFlow::adoptOrphans() {
  for (size_t oi = 0; oi < orphans_.size(); ++oi) {
    const int q = orphans_[oi];
    if (tree_[q] == kFree) continue;
    int newParent = -1;
    for (int a : out_[q]) {
      const int u = head_[a];
      if (tree_[u] != tree_[q]) continue;
      if (tree_[q] == kSrc) {
        if (res_[a ^ 1] <= 0) continue;  // need residual u->q
      } else {
        if (res_[a] <= 0) continue;  // need residual q->u
      }
      if (!rootedWalk(u)) continue;
      newParent = tree_[q] == kSrc ? (a ^ 1) : a;
      break;
    }
    if (newParent >= 0) {
      parentArc_[q] = newParent;
      continue;
    }
    // no parent: q leaves the tree, children become orphans, potential
    // parents are reactivated
    for (int a : out_[q]) {
      const int u = head_[a];
      if (tree_[u] != tree_[q]) continue;
      const bool uChildOfQ =
          parentArc_[u] >= 0 && (tree_[q] == kSrc ? tail_[parentArc_[u]] == q
                                                  : head_[parentArc_[u]] == q);
      if (uChildOfQ) {
        parentArc_[u] = -1;
        orphans_.push_back(u);
      }
      const bool couldFeed = tree_[q] == kSrc ? res_[a ^ 1] > 0 : res_[a] > 0;
      if (couldFeed && !inActive_[u]) {
        inActive_[u] = 1;
        active_.push_back(u);
      }
    }
    tree_[q] = kFree;
  }
  orphans_.clear();
}

std::int64_t BkMaxFlow::solve() {
  tree_[source_] = kSrc;
  tree_[sink_] = kSnk;
  active_.push_back(source_);
  inActive_[source_] = 1;
  active_.push_back(sink_);
  inActive_[sink_] = 1;

  std::int64_t flow = 0;
  while (activeHead_ < active_.size()) {
    const int p = active_[activeHead_];
    if (tree_[p] == kFree) {
      ++activeHead_;
      inActive_[p] = 0;
      continue;
    }
    const int e = growActive(p);
    if (e < 0) {
      ++activeHead_;
      inActive_[p] = 0;
      continue;
    }
    flow += augment(e);
    adoptOrphans();
  }

  // min cut: residual reachability from the source
  cut_.assign(n_, 0);
  std::vector<int> stack{source_};
  cut_[source_] = 1;
  while (!stack.empty()) {
    const int p = stack.back();
    stack.pop_back();
    for (int a : out_[p]) {
      if (res_[a] > 0 && !cut_[head_[a]]) {
        cut_[head_[a]] = 1;
        stack.push_back(head_[a]);
      }
    }
  }
  solved_ = true;
  return flow;
}

bool BkMaxFlow::sourceSide(int node) const { return cut_[node] != 0; }

MaxFlowResult maxFlow(const FlowNetwork& net) {
  if (net.nodeCount < 2) throw std::runtime_error("maxFlow: need >= 2 nodes");
  BkMaxFlow g(net.nodeCount, net.source, net.sink);
  std::vector<int> ids;
  ids.reserve(net.arcs.size());
  for (const NetArc& a : net.arcs) {
    if (!(a.capacity >= 0) || !std::isfinite(a.capacity))
      throw std::runtime_error("maxFlow: capacities must be finite and non-negative");
    ids.push_back(g.addArc(a.from, a.to, std::llround(a.capacity * kCapScale)));
  }
  MaxFlowResult r;
  r.flowValue = static_cast<double>(g.solve()) / kCapScale;
  r.sourceSide.resize(net.nodeCount);
  for (int i = 0; i < net.nodeCount; ++i) r.sourceSide[i] = g.sourceSide(i) ? 1 : 0;
  r.arcFlow.reserve(net.arcs.size());
  for (int id : ids) {
    r.arcFlow.push_back(static_cast<double>(g.arcCapacity(id) - g.arcResidual(id)) / kCapScale);
  }
  return r;
}

}  // namespace coseg
