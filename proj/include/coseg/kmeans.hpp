#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace coseg {

struct KMeansResult {
  Eigen::MatrixXd centers;     // k x dim
  Eigen::VectorXi assignment;  // n, values in [0, k)
  Eigen::VectorXi counts;      // k
};

/// Seeded k-means++ init followed by Lloyd iterations. Points are rows.
/// Deterministic for a fixed seed; ties resolve to the lowest index.
/// Degenerate inputs (k > distinct points) are permitted: surplus clusters
/// simply end up empty or duplicated.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint32_t seed, int iters = 15);

/// Uniform double in [0,1) from raw mt19937_64 output; pinned mapping so
/// results do not depend on the standard library's distribution internals.
double rngUniform(std::uint64_t raw);

}  // namespace coseg
