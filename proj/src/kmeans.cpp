#include "coseg/kmeans.hpp"

#include <limits>
#include <random>
#include <stdexcept>

namespace coseg {

double rngUniform(std::uint64_t raw) {
  return static_cast<double>(raw >> 11) * (1.0 / 9007199254740992.0);  // 53-bit mantissa
}

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint32_t seed, int iters) {
  const int n = static_cast<int>(points.rows());
  const int dim = static_cast<int>(points.cols());
  if (n < 1) throw std::runtime_error("kmeans: no points");
  if (k < 1) throw std::runtime_error("kmeans: k must be >= 1");

  std::mt19937_64 rng(seed);
  Eigen::MatrixXd centers(k, dim);
  Eigen::VectorXd minDist = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::max());

  // k-means++ seeding
  centers.row(0) = points.row(static_cast<int>(rng() % n));
  for (int c = 1; c < k; ++c) {
    for (int i = 0; i < n; ++i) {
      const double d = (points.row(i) - centers.row(c - 1)).squaredNorm();
      if (d < minDist(i)) minDist(i) = d;
    }
    const double total = minDist.sum();
    if (total <= 0.0) {
      centers.row(c) = points.row(c % n);  // all points already covered
      continue;
    }
    double target = rngUniform(rng()) * total;
    int pick = n - 1;
    for (int i = 0; i < n; ++i) {
      target -= minDist(i);
      if (target <= 0.0) {
        pick = i;
        break;
      }
    }
    centers.row(c) = points.row(pick);
  }

  Eigen::VectorXi assignment = Eigen::VectorXi::Constant(n, -1);
  Eigen::VectorXi counts(k);
  for (int it = 0; it < iters; ++it) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bestD = (points.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (points.row(i) - centers.row(c)).squaredNorm();
        if (d < bestD) {
          bestD = d;
          best = c;
        }
      }
      if (assignment(i) != best) {
        assignment(i) = best;
        changed = true;
      }
    }
    counts.setZero();
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, dim);
    for (int i = 0; i < n; ++i) {
      sums.row(assignment(i)) += points.row(i);
      counts(assignment(i)) += 1;
    }
    for (int c = 0; c < k; ++c) {
      if (counts(c) > 0) {
        centers.row(c) = sums.row(c) / counts(c);
      } else {
        // reseed an empty cluster at the point farthest from its center
        int far = 0;
        double farD = -1.0;
        for (int i = 0; i < n; ++i) {
          const double d = (points.row(i) - centers.row(assignment(i))).squaredNorm();
          if (d > farD) {
            farD = d;
            far = i;
          }
        }
        centers.row(c) = points.row(far);
      }
    }
    if (!changed && it > 0) break;
  }

  // final assignment against the final centers
  counts.setZero();
  for (int i = 0; i < n; ++i) {
    int best = 0;
    double bestD = (points.row(i) - centers.row(0)).squaredNorm();
    for (int c = 1; c < k; ++c) {
      const double d = (points.row(i) - centers.row(c)).squaredNorm();
      if (d < bestD) {
        bestD = d;
        best = c;
      }
    }
    assignment(i) = best;
    counts(best) += 1;
  }
  return {std::move(centers), std::move(assignment), std::move(counts)};
}

}  // namespace coseg
