// Lloyd's algorithm with k-means++ seeding. Fully deterministic for a given
// seed: sampling uses the project Rng, assignment ties break to the lowest
// centroid index, and empty clusters are re-seeded at the point farthest
// from their stale centroid.
#pragma once

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmu/rng.hpp"

namespace kmu {

struct KmeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;  // k x f
  double inertia = 0.0;
  int iterations = 0;
  std::vector<double> inertia_history;  // one entry per Lloyd iteration
};

inline KmeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                           int max_iter = 300) {
  const int n = static_cast<int>(points.rows());
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (n < k)
    throw std::invalid_argument("kmeans: " + std::to_string(n) + " points for k = " +
                                std::to_string(k));
  if (!points.allFinite()) throw std::invalid_argument("kmeans: non-finite feature values");
  const int f = static_cast<int>(points.cols());

  Rng rng(seed);
  Eigen::MatrixXd centroids(k, f);
  std::vector<char> chosen(n, 0);

  // k-means++: first centroid uniform, then D^2 sampling via a cumulative
  // walk over min squared distances.
  {
    const int first = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n)));
    centroids.row(0) = points.row(first);
    chosen[first] = 1;
    Eigen::VectorXd dist2(n);
    for (int i = 0; i < n; ++i)
      dist2[i] = (points.row(i) - centroids.row(0)).squaredNorm();

    for (int c = 1; c < k; ++c) {
      const double total = dist2.sum();
      int pick = -1;
      if (total > 0.0) {
        const double u = rng.uniform01() * total;
        double cum = 0.0;
        for (int i = 0; i < n; ++i) {
          cum += dist2[i];
          if (cum > u) {
            pick = i;
            break;
          }
        }
        if (pick < 0) {  // numeric edge: u landed at the very end
          for (int i = n - 1; i >= 0; --i)
            if (dist2[i] > 0.0) {
              pick = i;
              break;
            }
        }
      }
      if (pick < 0) {  // all remaining distances zero: take lowest unchosen
        for (int i = 0; i < n; ++i)
          if (!chosen[i]) {
            pick = i;
            break;
          }
      }
      centroids.row(c) = points.row(pick);
      chosen[pick] = 1;
      for (int i = 0; i < n; ++i) {
        const double d = (points.row(i) - centroids.row(c)).squaredNorm();
        if (d < dist2[i]) dist2[i] = d;
      }
    }
  }

  KmeansResult res;
  res.labels.assign(n, -1);

  double prev_inertia = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iter; ++iter) {
    // Assignment.
    int changes = 0;
    double inertia = 0.0;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (points.row(i) - centroids.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (points.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (res.labels[i] != best) {
        res.labels[i] = best;
        ++changes;
      }
      inertia += best_d;
    }
    res.inertia_history.push_back(inertia);
    res.iterations = iter + 1;
    if (inertia > prev_inertia * (1.0 + 1e-12) + 1e-12)
      throw std::logic_error("kmeans: inertia increased between iterations");
    prev_inertia = inertia;

    // Means, with empty-cluster repair.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, f);
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(res.labels[i]) += points.row(i);
      ++counts[res.labels[i]];
    }
    int repairs = 0;
    std::vector<char> used_for_repair(n, 0);
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centroids.row(c) = sums.row(c) / counts[c];
        continue;
      }
      // Re-seed at the point farthest from the stale centroid.
      int far = -1;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        if (used_for_repair[i]) continue;
        const double d = (points.row(i) - centroids.row(c)).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      centroids.row(c) = points.row(far);
      used_for_repair[far] = 1;
      ++repairs;
    }

    if (changes == 0 && repairs == 0) break;
  }

  // Final inertia with the converged centroids.
  res.inertia = 0.0;
  for (int i = 0; i < n; ++i)
    res.inertia += (points.row(i) - centroids.row(res.labels[i])).squaredNorm();
  res.centroids = std::move(centroids);
  return res;
}

}  // namespace kmu
