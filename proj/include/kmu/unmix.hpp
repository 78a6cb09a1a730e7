// Per-pixel NNLS unmixing of K/S pixels against K/S endmembers. With paper
// subtraction enabled (the default) both the endmember columns and the
// right-hand side have the bare-paper K/S removed, so the model solved is
//
//   ks(mix) - ks(paper) = sum_i c_i [ ks(endmember_i) - ks(paper) ],  c >= 0.
#pragma once

#include <Eigen/Dense>
#include <iostream>
#include <stdexcept>
#include <string>

#include "kmu/cube.hpp"
#include "kmu/km.hpp"
#include "kmu/model.hpp"
#include "kmu/nnls.hpp"
#include "kmu/parallel.hpp"

namespace kmu {

struct UnmixOptions {
  bool subtract_paper = true;
  unsigned threads = 1;
  NnlsOptions nnls;
};

// A K/S this large in every band means reflectance below ~2% everywhere.
inline constexpr double kDarkEndmemberKs = 24.0;

// endmembers_ks is m x bands, raw K/S of the endmember pixels. Abundance
// rows follow the linear pixel order of the mask; no sum-to-one constraint
// is imposed.
inline AbundanceMatrix unmix_cube(const KsCube& ks, const Eigen::MatrixXd& endmembers_ks,
                                  const PaperSpectrum& paper, const PixelMask& mask,
                                  const UnmixOptions& opt = {}) {
  require_mask_matches(mask, ks.width, ks.height, "unmix_cube");
  const int m = static_cast<int>(endmembers_ks.rows());
  const int bands = static_cast<int>(endmembers_ks.cols());
  if (m < 1) throw std::invalid_argument("unmix_cube: need at least one endmember");
  if (bands != ks.bands)
    throw std::invalid_argument("unmix_cube: endmember bands " + std::to_string(bands) +
                                " do not match cube bands " + std::to_string(ks.bands));
  if (opt.subtract_paper && paper.ks.size() != bands)
    throw std::invalid_argument("unmix_cube: paper spectrum bands " +
                                std::to_string(paper.ks.size()) +
                                " do not match cube bands " + std::to_string(bands));

  const auto coords = masked_pixel_coords(mask);
  if (coords.empty()) throw std::invalid_argument("unmix_cube: mask selects no pixels");

  // Endmember matrix, one column per endmember.
  Eigen::MatrixXd c(bands, m);
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd col = endmembers_ks.row(j).transpose();
    if (opt.subtract_paper) col = subtract_paper(col, paper);
    if (col.norm() == 0.0)
      throw std::runtime_error(
          "unmix_cube: endmember " + std::to_string(j) +
          " has an all-zero K/S column" +
          (opt.subtract_paper ? " after paper subtraction" : ""));
    if (col.minCoeff() > kDarkEndmemberKs)
      std::cerr << "unmix_cube: warning: endmember " << j << " has K/S above "
                << kDarkEndmemberKs
                << " in every band (dark across the spectrum); retained\n";
    c.col(j) = col;
  }

  AbundanceMatrix out;
  out.pixels = coords;
  out.values.resize(static_cast<Eigen::Index>(coords.size()), m);

  parallel_for(coords.size(), opt.threads, [&](std::size_t i) {
    const auto [row, col] = coords[i];
    Eigen::VectorXd d = ks.pixel(row, col);
    if (opt.subtract_paper) d = subtract_paper(d, paper);
    try {
      out.values.row(static_cast<Eigen::Index>(i)) = nnls(c, d, opt.nnls).transpose();
    } catch (const std::exception& e) {
      throw std::runtime_error("unmix_cube: pixel (" + std::to_string(row) + "," +
                               std::to_string(col) + "): " + e.what());
    }
  });
  return out;
}

}  // namespace kmu
