// MaxD endmember extraction and Gram-matrix volume-function dimensionality
// estimation, operating on reflectance spectra.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmu/cube.hpp"
#include "kmu/model.hpp"

namespace kmu {

// G[i][j] = <v_i, v_j>. Symmetric positive semidefinite; det(G) is the
// squared volume of the parallelotope spanned by the vectors.
inline Eigen::MatrixXd gram_matrix(const std::vector<Eigen::VectorXd>& vectors) {
  if (vectors.empty()) throw std::invalid_argument("gram_matrix: empty vector list");
  const Eigen::Index len = vectors[0].size();
  for (const auto& v : vectors)
    if (v.size() != len)
      throw std::invalid_argument("gram_matrix: vectors have mismatched lengths (" +
                                  std::to_string(len) + " vs " + std::to_string(v.size()) +
                                  ")");
  const int n = static_cast<int>(vectors.size());
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double ip = vectors[i].dot(vectors[j]);
      g(i, j) = ip;
      g(j, i) = ip;
    }
  return g;
}

inline constexpr double kDefaultVolumeTau = 1e-3;

// values[k] = sqrt(det(Gram(first k unit-normalized endmember spectra))),
// computed from one unpivoted QR so the sequence is non-increasing by
// construction. The dimensionality estimate is the largest k whose
// normalized volume stays at or above tau.
inline VolumeFunction volume_function(const EndmemberSet& endmembers,
                                      double tau = kDefaultVolumeTau) {
  const int m = endmembers.count();
  if (m < 1) throw std::invalid_argument("volume_function: need at least one endmember");
  const int bands = static_cast<int>(endmembers.spectra.cols());

  Eigen::MatrixXd a(bands, m);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd v = endmembers.spectra.row(i).transpose();
    const double n = v.norm();
    a.col(i) = n > 0.0 ? Eigen::VectorXd(v / n) : v;
  }

  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(std::min(bands, m));

  VolumeFunction vf;
  vf.tau = tau;
  vf.values.resize(m);
  double prod = 1.0;
  for (int k = 0; k < m; ++k) {
    prod *= k < bands ? std::abs(r(k, k)) : 0.0;
    vf.values[k] = prod;
  }
  vf.estimated_dimensionality = 0;
  for (int k = 0; k < m; ++k)
    if (vf.values[k] >= tau) vf.estimated_dimensionality = k + 1;
  return vf;
}

// MaxD: the first endmember is the masked pixel of maximum norm; each
// subsequent one maximizes distance from the collapsed image of the prior
// selections under projection orthogonal to their differences. Ties break
// to the lowest linear pixel index.
inline EndmemberSet maxd(const SpectralCube& cube, const PixelMask& mask, int m_max) {
  require_mask_matches(mask, cube.width, cube.height, "maxd");
  if (m_max < 2) throw std::invalid_argument("maxd: m_max must be >= 2");
  const auto coords = masked_pixel_coords(mask);
  const std::size_t n = coords.size();
  if (n < static_cast<std::size_t>(m_max))
    throw std::runtime_error("maxd: mask selects " + std::to_string(n) +
                             " pixels, fewer than m_max = " + std::to_string(m_max));

  const int bands = cube.bands;
  Eigen::MatrixXd x(n, bands);
  for (std::size_t i = 0; i < n; ++i)
    x.row(i) = cube.pixel(coords[i].first, coords[i].second).transpose();

  EndmemberSet out;
  out.spectra.resize(m_max, bands);
  out.sources.reserve(m_max);

  // First pick: maximum Euclidean norm.
  std::size_t best = 0;
  double best_val = x.row(0).squaredNorm();
  for (std::size_t i = 1; i < n; ++i) {
    const double v = x.row(i).squaredNorm();
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  out.spectra.row(0) = x.row(best);
  out.sources.push_back(coords[best]);
  const Eigen::VectorXd anchor = x.row(best).transpose();
  const double scale = std::sqrt(best_val);

  // Orthonormal basis of the span of endmember differences; distances are
  // measured in its orthogonal complement, where prior picks coincide.
  Eigen::MatrixXd q(bands, m_max - 1);
  int q_cols = 0;

  for (int sel = 1; sel < m_max; ++sel) {
    best = 0;
    best_val = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::VectorXd v = x.row(i).transpose() - anchor;
      double d2 = v.squaredNorm();
      if (q_cols > 0) d2 -= (q.leftCols(q_cols).transpose() * v).squaredNorm();
      if (d2 > best_val) {
        best_val = d2;
        best = i;
      }
    }
    const double tol = 1e-12 * (scale > 0.0 ? scale : 1.0);
    if (!(best_val > tol * tol))
      throw std::runtime_error(
          "maxd: projection degenerated after " + std::to_string(sel) +
          " endmember(s); the remaining masked pixels are identical under the "
          "current projection, so no further distinct endmember exists");

    out.spectra.row(sel) = x.row(best);
    out.sources.push_back(coords[best]);

    // Extend the difference basis with the new pick (re-orthogonalized once).
    Eigen::VectorXd w = x.row(best).transpose() - anchor;
    for (int pass = 0; pass < 2; ++pass)
      if (q_cols > 0) w -= q.leftCols(q_cols) * (q.leftCols(q_cols).transpose() * w);
    const double wn = w.norm();
    if (wn > 0.0) {
      q.col(q_cols) = w / wn;
      ++q_cols;
    }
  }
  return out;
}

}  // namespace kmu
