// Mahalanobis distance classifier: per-class (or pooled) sample mean and
// covariance with diagonal regularization, escalated until the matrix
// factors. High-band covariance from a small training patch is typically
// rank-deficient, so the regularization path is load-bearing.
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmu/parallel.hpp"

namespace kmu {

struct MdcOptions {
  bool pooled = false;
  // Exact regularization to use instead of the automatic
  // 1e-6 * trace/bands with x10 escalation. Zero disables regularization.
  std::optional<double> eps_override;
};

struct MdcModel {
  Eigen::MatrixXd means;  // k x bands
  std::vector<Eigen::LLT<Eigen::MatrixXd>> factors;  // one per class, or one if pooled
  std::vector<double> eps;
  bool pooled = false;

  int class_count() const { return static_cast<int>(means.rows()); }
  const Eigen::LLT<Eigen::MatrixXd>& factor(int cls) const {
    return pooled ? factors[0] : factors[cls];
  }
};

namespace detail {

inline Eigen::LLT<Eigen::MatrixXd> regularize_and_factor(const Eigen::MatrixXd& cov,
                                                         const MdcOptions& opt,
                                                         double& eps_out) {
  const int bands = static_cast<int>(cov.rows());
  double eps;
  if (opt.eps_override) {
    eps = *opt.eps_override;
    Eigen::LLT<Eigen::MatrixXd> llt(cov + eps * Eigen::MatrixXd::Identity(bands, bands));
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("mdc_train: covariance not factorizable with eps " +
                               std::to_string(eps));
    eps_out = eps;
    return llt;
  }
  eps = 1e-6 * cov.trace() / bands;
  if (eps <= 0.0) eps = 1e-12;
  for (int attempt = 0; attempt < 60; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov + eps * Eigen::MatrixXd::Identity(bands, bands));
    if (llt.info() == Eigen::Success) {
      eps_out = eps;
      return llt;
    }
    eps *= 10.0;
  }
  throw std::runtime_error("mdc_train: covariance regularization failed to converge");
}

}  // namespace detail

inline MdcModel mdc_train(const Eigen::MatrixXd& spectra, const std::vector<int>& labels,
                          const MdcOptions& opt = {}) {
  const int n = static_cast<int>(spectra.rows());
  const int bands = static_cast<int>(spectra.cols());
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("mdc_train: label count does not match sample count");
  int k = 0;
  for (int l : labels) {
    if (l < 0) throw std::invalid_argument("mdc_train: negative label");
    k = std::max(k, l + 1);
  }
  if (k < 2) throw std::invalid_argument("mdc_train: need at least 2 classes, got " +
                                         std::to_string(k));

  std::vector<int> counts(k, 0);
  for (int l : labels) ++counts[l];
  for (int c = 0; c < k; ++c)
    if (counts[c] < 2)
      throw std::invalid_argument("mdc_train: class " + std::to_string(c) + " has " +
                                  std::to_string(counts[c]) +
                                  " samples; at least 2 are required");

  MdcModel model;
  model.pooled = opt.pooled;
  model.means.resize(k, bands);
  std::vector<Eigen::MatrixXd> covs(k);
  for (int c = 0; c < k; ++c) {
    Eigen::MatrixXd x(counts[c], bands);
    int at = 0;
    for (int i = 0; i < n; ++i)
      if (labels[i] == c) x.row(at++) = spectra.row(i);
    const Eigen::RowVectorXd mean = x.colwise().mean();
    model.means.row(c) = mean;
    const Eigen::MatrixXd centered = x.rowwise() - mean;
    covs[c] = centered.transpose() * centered / (counts[c] - 1);
  }

  if (opt.pooled) {
    Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(bands, bands);
    for (int c = 0; c < k; ++c) pooled += (counts[c] - 1) * covs[c];
    pooled /= static_cast<double>(n - k);
    double eps = 0.0;
    model.factors.push_back(detail::regularize_and_factor(pooled, opt, eps));
    model.eps.push_back(eps);
  } else {
    for (int c = 0; c < k; ++c) {
      double eps = 0.0;
      model.factors.push_back(detail::regularize_and_factor(covs[c], opt, eps));
      model.eps.push_back(eps);
    }
  }
  return model;
}

inline double mdc_distance2(const MdcModel& model, int cls, const Eigen::VectorXd& x) {
  const Eigen::VectorXd diff = x - model.means.row(cls).transpose();
  return diff.dot(model.factor(cls).solve(diff));
}

// Argmin of the covariance-weighted distance; ties go to the lowest class id.
inline int mdc_classify(const MdcModel& model, const Eigen::VectorXd& x) {
  int best = 0;
  double best_d = mdc_distance2(model, 0, x);
  for (int c = 1; c < model.class_count(); ++c) {
    const double d = mdc_distance2(model, c, x);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

inline std::vector<int> mdc_classify_all(const MdcModel& model, const Eigen::MatrixXd& spectra,
                                         unsigned threads = 1) {
  std::vector<int> out(spectra.rows());
  parallel_for(static_cast<std::size_t>(spectra.rows()), threads, [&](std::size_t i) {
    out[i] = mdc_classify(model, spectra.row(static_cast<Eigen::Index>(i)).transpose());
  });
  return out;
}

}  // namespace kmu
