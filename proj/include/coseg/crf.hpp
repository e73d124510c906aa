#pragma once

#include "coseg/features.hpp"
#include "coseg/streams.hpp"

#include <filesystem>
#include <vector>

namespace coseg {

enum class EdgeKind { Intra, Inter };

struct CrfNode {
  int video = 0;
  int slot = 0;
};

struct CrfEdge {
  int a = 0, b = 0;  // node indices, a < b
  EdgeKind kind = EdgeKind::Intra;
  Eigen::MatrixXd table;  // states(a) x states(b)
};

/// Multi-video multi-object stream-selection model.  Nodes are (video, slot)
/// pairs, the states of a node are that video's candidate streams, intra edges
/// connect slots of the same video and inter edges connect slots across
/// videos.  The energy is sum(unary) + alpha1*sum(intra) + alpha2*sum(inter).
struct CrfModel {
  std::vector<CrfNode> nodes;
  std::vector<int> stateCounts;
  std::vector<Eigen::VectorXd> unary;
  std::vector<CrfEdge> edges;
  double alpha1 = 0.5, alpha2 = 1.0;

  int nodeCount() const { return static_cast<int>(nodes.size()); }
};

struct Labeling {
  std::vector<int> states;
  double energy = 0;
};

/// Mean feature distance over all entry pairs of the two streams, divided by
/// the model-wide mean Mm.  Pair counts above the budget use a deterministic
/// stratified subsample.
double streamDistance(const Stream& s1, const Stream& s2, double colorWeight, double mm,
                      int pairBudget = 400);

/// The unnormalized mean feature distance (the quantity Mm averages over).
double rawStreamDistance(const Stream& s1, const Stream& s2, double colorWeight,
                         int pairBudget = 400);

struct CrfBuildParams {
  std::vector<int> slotCounts;  // objects per video
  double alpha1 = 0.5, alpha2 = 1.0;
  double colorWeight = 2.0;
  double epsilonProb = 1e-6;  // clamp for -log arguments
  double eBig = 1e4;          // same-stream penalty on intra diagonals
  int pairBudget = 400;
};

CrfModel buildCrf(const std::vector<StreamSet>& streamSets,
                  const std::vector<SaliencyMap>& saliency, const CrfBuildParams& params);

double evaluateEnergy(const CrfModel& model, const std::vector<int>& assignment);

/// Exhaustive global minimum; ties go to the lexicographically smallest
/// assignment.  Throws if the state space exceeds 1e7 assignments.
Labeling solveBruteForce(const CrfModel& model);

struct TrwsResult {
  Labeling labeling;
  double lowerBound = 0;
  std::vector<double> lowerBoundTrace;  // one entry per iteration, non-decreasing
  int iterations = 0;
};

/// Sequential tree-reweighted message passing with a monotone lower bound.
/// Stops after maxIters or when the bound improves by less than tol.
TrwsResult solveTrws(const CrfModel& model, int maxIters = 500, double tol = 1e-6);

/// Plain-text model dump/load (node meta, unary blocks, edge tables) for
/// cross-implementation solver comparison.
void saveCrfModel(const std::filesystem::path& file, const CrfModel& model);
CrfModel loadCrfModel(const std::filesystem::path& file);

}  // namespace coseg
