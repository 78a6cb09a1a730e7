// Pigment segmentation: K-means over Lab+xy features of an RGB-rendered
// patch produces training labels, designated clusters mark pigment, and a
// Mahalanobis classifier trained on the patch spectra labels every cube
// pixel. The output mask selects pixels predicted into a pigment cluster.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmu/color.hpp"
#include "kmu/cube.hpp"
#include "kmu/image.hpp"
#include "kmu/kmeans.hpp"
#include "kmu/mdc.hpp"
#include "kmu/parallel.hpp"

namespace kmu {

struct SegmentOptions {
  Rect patch;
  int k = 4;
  std::vector<int> pigment_clusters;  // cluster ids designated as pigment
  std::uint64_t seed = 0;
  double red_nm = 650.0, green_nm = 550.0, blue_nm = 450.0;
  MdcOptions mdc;
  unsigned threads = 1;
};

struct SegmentResult {
  PixelMask mask;
  KmeansResult clustering;   // over patch pixels, row-major patch order
  ImageU8 cluster_image;     // patch rendered with per-cluster mean RGB
  MdcModel model;
};

// Lab features of an RGB patch augmented with x and y, both scaled to
// [0, 100] to match the range of L.
inline Eigen::MatrixXd lab_xy_features(const ImageU8& patch) {
  if (patch.channels != 3) throw std::invalid_argument("lab_xy_features: RGB image required");
  const int n = patch.width * patch.height;
  Eigen::MatrixXd feat(n, 5);
  const double xs = patch.width > 1 ? 100.0 / (patch.width - 1) : 0.0;
  const double ys = patch.height > 1 ? 100.0 / (patch.height - 1) : 0.0;
  int at = 0;
  for (int r = 0; r < patch.height; ++r)
    for (int c = 0; c < patch.width; ++c, ++at) {
      const Lab lab = rgb_to_lab(patch.at(r, c, 0), patch.at(r, c, 1), patch.at(r, c, 2));
      feat(at, 0) = lab.L;
      feat(at, 1) = lab.a;
      feat(at, 2) = lab.b;
      feat(at, 3) = c * xs;
      feat(at, 4) = r * ys;
    }
  return feat;
}

// Cluster visualization: every pixel replaced by the mean RGB of its cluster.
inline ImageU8 cluster_mean_image(const ImageU8& patch, const std::vector<int>& labels, int k) {
  ImageU8 out(patch.width, patch.height, 3);
  std::vector<std::array<double, 3>> sums(k, {0.0, 0.0, 0.0});
  std::vector<int> counts(k, 0);
  int at = 0;
  for (int r = 0; r < patch.height; ++r)
    for (int c = 0; c < patch.width; ++c, ++at) {
      for (int ch = 0; ch < 3; ++ch) sums[labels[at]][ch] += patch.at(r, c, ch);
      ++counts[labels[at]];
    }
  at = 0;
  for (int r = 0; r < patch.height; ++r)
    for (int c = 0; c < patch.width; ++c, ++at)
      for (int ch = 0; ch < 3; ++ch)
        out.at(r, c, ch) = static_cast<std::uint8_t>(
            std::lround(sums[labels[at]][ch] / std::max(1, counts[labels[at]])));
  return out;
}

inline SegmentResult segment(const SpectralCube& cube, const SegmentOptions& opt) {
  require_rect_in_bounds(opt.patch, cube.width, cube.height, "segment");
  if (opt.pigment_clusters.empty())
    throw std::invalid_argument("segment: no pigment clusters designated");
  std::set<int> designated;
  for (int id : opt.pigment_clusters) {
    if (id < 0 || id >= opt.k)
      throw std::invalid_argument("segment: designated cluster " + std::to_string(id) +
                                  " does not exist (k = " + std::to_string(opt.k) + ")");
    designated.insert(id);
  }

  const ImageU8 rgb = render_rgb(cube, opt.red_nm, opt.green_nm, opt.blue_nm);
  const ImageU8 patch_rgb = crop(rgb, opt.patch);

  SegmentResult res;
  const Eigen::MatrixXd features = lab_xy_features(patch_rgb);
  res.clustering = kmeans(features, opt.k, opt.seed);
  res.cluster_image = cluster_mean_image(patch_rgb, res.clustering.labels, opt.k);

  // Patch spectra carry the cluster ids as training labels.
  const int np = opt.patch.width * opt.patch.height;
  Eigen::MatrixXd spectra(np, cube.bands);
  int at = 0;
  for (int r = 0; r < opt.patch.height; ++r)
    for (int c = 0; c < opt.patch.width; ++c, ++at)
      spectra.row(at) = cube.pixel(opt.patch.row + r, opt.patch.col + c).transpose();
  res.model = mdc_train(spectra, res.clustering.labels, opt.mdc);

  // Classify the whole cube and keep the designated clusters.
  res.mask = PixelMask(cube.width, cube.height);
  parallel_for(cube.pixel_count(), opt.threads, [&](std::size_t i) {
    const int row = static_cast<int>(i) / cube.width;
    const int col = static_cast<int>(i) % cube.width;
    const int cls = mdc_classify(res.model, cube.pixel(row, col));
    if (designated.count(cls)) res.mask.set(row, col, true);
  });
  return res;
}

}  // namespace kmu
