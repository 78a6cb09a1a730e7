// Non-negative least squares, Lawson-Hanson style active-set iteration.
// Inner least-squares solves use Householder QR rather than normal
// equations; K/S values span several orders of magnitude and squaring the
// condition number is avoidable.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace kmu {

struct NnlsOptions {
  // KKT tolerance, relative to the infinity norm of C^T d.
  double tol_rel = 1e-8;
  // Outer iteration cap is max_outer_factor * m.
  int max_outer_factor = 3;
};

// Minimizes ||C y - d||^2 subject to y >= 0. On return, positive components
// have zero gradient (within tolerance) and zero components have
// non-negative gradient, i.e. the KKT conditions hold.
inline Eigen::VectorXd nnls(const Eigen::MatrixXd& c, const Eigen::VectorXd& d,
                            const NnlsOptions& opt = {}) {
  const int m = static_cast<int>(c.cols());
  if (c.rows() < 1 || m < 1) throw std::invalid_argument("nnls: empty system");
  if (c.rows() != d.size())
    throw std::invalid_argument("nnls: C has " + std::to_string(c.rows()) +
                                " rows but d has " + std::to_string(d.size()));
  for (int j = 0; j < m; ++j)
    if (c.col(j).norm() == 0.0)
      throw std::runtime_error("nnls: endmember " + std::to_string(j) +
                               " has an all-zero column");

  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  std::vector<char> passive(m, 0);
  const double tol = opt.tol_rel * (c.transpose() * d).lpNorm<Eigen::Infinity>();

  const int max_outer = opt.max_outer_factor * m;
  int outer = 0;

  auto solve_passive = [&](Eigen::VectorXd& z) {
    int np = 0;
    for (int j = 0; j < m; ++j) np += passive[j];
    Eigen::MatrixXd cp(c.rows(), np);
    std::vector<int> cols;
    cols.reserve(np);
    for (int j = 0; j < m; ++j)
      if (passive[j]) {
        cp.col(static_cast<int>(cols.size())) = c.col(j);
        cols.push_back(j);
      }
    const Eigen::VectorXd zp = cp.colPivHouseholderQr().solve(d);
    z.setZero(m);
    for (std::size_t i = 0; i < cols.size(); ++i) z[cols[i]] = zp[static_cast<int>(i)];
    return cols;
  };

  for (;;) {
    const Eigen::VectorXd w = c.transpose() * (d - c * y);

    int enter = -1;
    double w_max = tol;
    for (int j = 0; j < m; ++j)
      if (!passive[j] && w[j] > w_max) {
        w_max = w[j];
        enter = j;
      }
    if (enter < 0) break;  // KKT satisfied

    if (++outer > max_outer) {
      const double resid = (c * y - d).norm();
      throw std::runtime_error(
          "nnls: outer iteration cap " + std::to_string(max_outer) +
          " exceeded; residual norm " + std::to_string(resid) +
          ", max inactive gradient " + std::to_string(w_max));
    }
    passive[enter] = 1;

    // Inner loop: solve on the passive set, stepping back along the segment
    // from y to z whenever a passive variable would go negative.
    int inner_guard = 10 * m + 10;
    for (;;) {
      if (--inner_guard < 0)
        throw std::runtime_error("nnls: inner loop failed to make progress");
      Eigen::VectorXd z;
      solve_passive(z);

      bool feasible = true;
      for (int j = 0; j < m; ++j)
        if (passive[j] && z[j] <= 0.0) feasible = false;
      if (feasible) {
        y = z;
        break;
      }

      // Largest feasible step toward z; variables whose ratio binds the
      // step leave the passive set at exactly zero.
      double alpha = 1.0;
      std::vector<double> ratio(m, 2.0);
      for (int j = 0; j < m; ++j) {
        if (!passive[j] || z[j] > 0.0) continue;
        const double denom = y[j] - z[j];
        ratio[j] = denom > 0.0 ? y[j] / denom : 0.0;
        alpha = std::min(alpha, ratio[j]);
      }
      y += alpha * (z - y);
      for (int j = 0; j < m; ++j) {
        if (passive[j] && ratio[j] <= alpha * (1.0 + 1e-12)) {
          y[j] = 0.0;
          passive[j] = 0;
        }
      }
    }
  }

  return y.cwiseMax(0.0);
}

}  // namespace kmu
