// Final classification stage: abundance rows are augmented with all
// pairwise absolute abundance differences, clustered with K-means, and the
// resulting classes scored with a per-pixel RMSE against the class mean
// spectrum.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmu/cube.hpp"
#include "kmu/km.hpp"
#include "kmu/kmeans.hpp"
#include "kmu/model.hpp"

namespace kmu {

// All |a_i - a_j| for i < j in lexicographic (i, j) order.
inline Eigen::VectorXd difference_features(const Eigen::VectorXd& a) {
  const int m = static_cast<int>(a.size());
  Eigen::VectorXd out(m * (m - 1) / 2);
  int at = 0;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) out[at++] = std::abs(a[i] - a[j]);
  return out;
}

// Per row: abundances followed by their pairwise absolute differences.
inline Eigen::MatrixXd augment_abundances(const AbundanceMatrix& abundances) {
  const int n = abundances.pixel_count();
  const int m = abundances.endmember_count();
  const int pairs = m * (m - 1) / 2;
  Eigen::MatrixXd out(n, m + pairs);
  for (int i = 0; i < n; ++i) {
    out.row(i).head(m) = abundances.values.row(i);
    out.row(i).tail(pairs) = difference_features(abundances.values.row(i).transpose());
  }
  return out;
}

inline std::vector<int> classify_pixels(const Eigen::MatrixXd& features, int k,
                                        std::uint64_t seed) {
  return kmeans(features, k, seed).labels;
}

// Renumber labels by descending class population (ties to the lower
// original id), so label 0 is always the largest class.
inline std::vector<int> relabel_by_population(const std::vector<int>& labels, int k) {
  std::vector<std::size_t> counts(k, 0);
  for (int l : labels) {
    if (l < 0 || l >= k) throw std::invalid_argument("relabel_by_population: label out of range");
    ++counts[l];
  }
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return counts[a] > counts[b]; });
  std::vector<int> remap(k);
  for (int rank = 0; rank < k; ++rank) remap[order[rank]] = rank;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = remap[labels[i]];
  return out;
}

enum class RmseSpace { reflectance, ks };

// Class means and per-pixel RMSE against them. labels follow the linear
// pixel order of the mask. Means are computed as first-sample-shifted
// averages, so a spectrally homogeneous class yields exactly zero RMSE.
inline ClassMap class_rmse(const SpectralCube& cube, const PixelMask& mask,
                           const std::vector<int>& labels,
                           RmseSpace space = RmseSpace::reflectance) {
  require_mask_matches(mask, cube.width, cube.height, "class_rmse");
  const auto coords = masked_pixel_coords(mask);
  if (labels.size() != coords.size())
    throw std::invalid_argument("class_rmse: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(coords.size()) +
                                " masked pixels");
  int k = 0;
  for (int l : labels) {
    if (l < 0) throw std::invalid_argument("class_rmse: negative label");
    k = std::max(k, l + 1);
  }
  if (k == 0) throw std::invalid_argument("class_rmse: no labels");

  const int bands = cube.bands;
  auto spectrum_of = [&](std::size_t i) {
    Eigen::VectorXd s = cube.pixel(coords[i].first, coords[i].second);
    if (space == RmseSpace::ks) s = reflectance_to_ks(s);
    return s;
  };

  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  for (int c = 0; c < k; ++c)
    if (members[c].empty())
      throw std::runtime_error("class_rmse: class " + std::to_string(c) +
                               " has no pixels; its class mean is undefined");

  ClassMap map;
  map.width = cube.width;
  map.height = cube.height;
  map.labels.assign(cube.pixel_count(), -1);
  map.rmse.assign(cube.pixel_count(), 0.0);
  map.class_means.resize(k, bands);

  for (int c = 0; c < k; ++c) {
    const Eigen::VectorXd first = spectrum_of(members[c][0]);
    Eigen::VectorXd delta_sum = Eigen::VectorXd::Zero(bands);
    for (std::size_t idx : members[c]) delta_sum += spectrum_of(idx) - first;
    map.class_means.row(c) =
        (first + delta_sum / static_cast<double>(members[c].size())).transpose();
  }

  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto [row, col] = coords[i];
    const Eigen::VectorXd diff =
        spectrum_of(i) - map.class_means.row(labels[i]).transpose();
    const double rmse = std::sqrt(diff.squaredNorm() / bands);
    const std::size_t at = static_cast<std::size_t>(row) * cube.width + col;
    map.labels[at] = labels[i];
    map.rmse[at] = rmse;
  }
  return map;
}

}  // namespace kmu
