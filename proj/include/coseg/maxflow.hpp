#pragma once

#include <cstdint>
#include <vector>

namespace coseg {

struct NetArc {
  int from = 0, to = 0;
  double capacity = 0;  // >= 0, finite
};

struct FlowNetwork {
  int nodeCount = 0;
  int source = -1, sink = -1;
  std::vector<NetArc> arcs;
};

struct MaxFlowResult {
  double flowValue = 0;
  std::vector<char> sourceSide;  // min cut: nodes reachable from source in the residual graph
  std::vector<double> arcFlow;   // net flow per input arc (negative if its reverse pair pushed)
};

/// Max-flow / min-cut on scaled-integer capacities (scale 1e6), solved with
/// Boykov-Kolmogorov style search-tree reuse.  Deterministic.
MaxFlowResult maxFlow(const FlowNetwork& net);

/// Integer-capacity core, reused directly by the segmentation graphs.
class BkMaxFlow {
 public:
  explicit BkMaxFlow(int nodeCount, int source, int sink);

  /// Adds the residual arc pair (u->v, v->u); returns the forward arc id.
  int addArc(int u, int v, std::int64_t cap, std::int64_t revCap = 0);

  std::int64_t solve();

  /// Valid after solve(): true if the node is on the source side of the cut.
  bool sourceSide(int node) const;

  std::int64_t arcCapacity(int arcId) const { return cap_[arcId]; }
  std::int64_t arcResidual(int arcId) const { return res_[arcId]; }

 private:
  int growActive(int p);
  std::int64_t augment(int connectingArc);
  void adoptOrphans();
  bool rootedWalk(int node) const;

  int n_, source_, sink_;
  std::vector<std::vector<int>> out_;  // per node: incident arc ids where node is the tail
  std::vector<int> head_, tail_;
  std::vector<std::int64_t> cap_, res_;
  std::vector<int> parentArc_;  // tree edge: S-tree parent->node, T-tree node->parent
  std::vector<signed char> tree_;  // 0 free, 1 source tree, 2 sink tree
  std::vector<int> active_;
  size_t activeHead_ = 0;
  std::vector<char> inActive_;
  std::vector<int> orphans_;
  std::vector<char> cut_;
  bool solved_ = false;
};

}  // namespace coseg
