// Shared result types: endmember sets, abundance matrices, class maps and
// the Gram-volume function.
#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace kmu {

struct EndmemberSet {
  Eigen::MatrixXd spectra;                   // m x bands, reflectance
  std::vector<std::pair<int, int>> sources;  // (row, col) of each endmember pixel

  int count() const { return static_cast<int>(spectra.rows()); }
};

struct AbundanceMatrix {
  Eigen::MatrixXd values;                   // n_pixels x m, all >= 0
  std::vector<std::pair<int, int>> pixels;  // row index -> (row, col)

  int endmember_count() const { return static_cast<int>(values.cols()); }
  int pixel_count() const { return static_cast<int>(values.rows()); }
};

struct ClassMap {
  int width = 0;
  int height = 0;
  std::vector<int> labels;      // per pixel; -1 = not in mask
  std::vector<double> rmse;     // per pixel; 0 where unmasked
  Eigen::MatrixXd class_means;  // k x bands

  int k() const { return static_cast<int>(class_means.rows()); }
  int label_at(int row, int col) const {
    return labels[static_cast<std::size_t>(row) * width + col];
  }
  double rmse_at(int row, int col) const {
    return rmse[static_cast<std::size_t>(row) * width + col];
  }
};

struct VolumeFunction {
  std::vector<double> values;  // values[k-1] = normalized volume of first k endmembers
  double tau = 0.0;            // threshold used for the dimensionality estimate
  int estimated_dimensionality = 0;

  double value(int k) const { return values[static_cast<std::size_t>(k) - 1]; }
  int max_k() const { return static_cast<int>(values.size()); }
};

}  // namespace kmu
