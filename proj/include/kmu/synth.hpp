// Synthetic scene generator with full ground truth. Pixels are composed in
// K/S space under the single-constant mixing law
//
//   ks(pixel) = ks(paper) + sum_i c_i [ ks(masstone_i) - ks(paper) ]
//
// inverted to reflectance, noised, and clamped. Masstone spectra are kept
// strictly below the paper spectrum per band so the bracket terms stay
// positive and the law is exactly invertible; the generator can also pin
// the joint Gram volume of {paper, masstones} for dimensionality tests.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmu/cube.hpp"
#include "kmu/km.hpp"
#include "kmu/model.hpp"
#include "kmu/rng.hpp"

namespace kmu {

enum class MixStyle { pair, dirichlet };

struct SynthParams {
  int n_pigments = 4;
  int width = 100;
  int height = 100;
  int bands = 61;
  double wavelength_start = 400.0;
  double wavelength_step = 0.0;  // <= 0: span 400-1000 nm over the band count
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  // Scene layout: pure masstone blocks come first, then mixed blocks.
  // -1 means one mixed block per pigment.
  int mixed_blocks = -1;
  MixStyle mix_style = MixStyle::pair;
  double dirichlet_alpha = 0.3;
  double pair_min = 0.6, pair_max = 0.9;  // dominant share in pair mixes
  double sum_min = 1.0, sum_max = 1.0;    // total abundance jitter
  double margin_frac = 0.08;

  // Spectrum shaping.
  double paper_level = 0.86;
  double pigment_level_min = 0.25, pigment_level_max = 0.62;
  double pigment_floor = 0.05;  // lowest masstone reflectance allowed
  double min_sine = 0.3, max_sine = 0.75;  // incremental angle vs prior spectra
  // When > 0, each masstone is constructed with an exact incremental sine of
  // volume_target^(1/n_pigments) against the span of paper and prior
  // masstones, pinning the joint normalized Gram volume.
  double volume_target = 0.0;
};

struct SyntheticScene {
  SpectralCube cube;
  PixelMask true_mask;
  AbundanceMatrix true_abundances;  // masked pixels, linear order
  std::vector<int> true_labels;     // full image; -1 = paper
  Eigen::MatrixXd endmembers;       // n_pigments x bands masstone reflectance
  Eigen::VectorXd paper;            // paper reflectance spectrum
  std::pair<int, int> paper_pixel{0, 0};

  int label_at(int row, int col) const {
    return true_labels[static_cast<std::size_t>(row) * cube.width + col];
  }
};

namespace detail {

inline Eigen::VectorXd smooth_curve(Rng& rng, int bands, double level, double amp) {
  constexpr double two_pi = 6.283185307179586;
  double freq[3], phase[3], coef[3];
  for (int j = 0; j < 3; ++j) {
    freq[j] = rng.uniform(0.4, 1.4) * (j + 1);
    phase[j] = rng.uniform(0.0, two_pi);
    coef[j] = amp * rng.uniform(0.35, 1.0) / (j + 1);
  }
  Eigen::VectorXd v(bands);
  for (int b = 0; b < bands; ++b) {
    const double t = bands > 1 ? static_cast<double>(b) / (bands - 1) : 0.0;
    double s = level;
    for (int j = 0; j < 3; ++j) s += coef[j] * std::cos(two_pi * freq[j] * t + phase[j]);
    v[b] = s;
  }
  return v;
}

// Residual sine of v against the span of the (orthonormal) columns of q.
inline double incremental_sine(const Eigen::MatrixXd& q, int cols, const Eigen::VectorXd& v) {
  const double n2 = v.squaredNorm();
  if (n2 == 0.0) return 0.0;
  double r2 = n2;
  if (cols > 0) r2 -= (q.leftCols(cols).transpose() * v).squaredNorm();
  return std::sqrt(std::max(0.0, r2) / n2);
}

inline void extend_basis(Eigen::MatrixXd& q, int& cols, Eigen::VectorXd v) {
  for (int pass = 0; pass < 2; ++pass)
    if (cols > 0) v -= q.leftCols(cols) * (q.leftCols(cols).transpose() * v);
  const double n = v.norm();
  if (n > 1e-12) {
    q.col(cols) = v / n;
    ++cols;
  }
}

}  // namespace detail

inline SyntheticScene synth_scene(const SynthParams& p) {
  if (p.n_pigments < 1) throw std::invalid_argument("synth_scene: n_pigments must be >= 1");
  if (p.width < 8 || p.height < 8)
    throw std::invalid_argument("synth_scene: scene must be at least 8x8");
  if (p.bands < 2) throw std::invalid_argument("synth_scene: need at least 2 bands");
  if (p.noise_sigma < 0.0) throw std::invalid_argument("synth_scene: negative noise sigma");

  Rng rng(p.seed);
  const int bands = p.bands;

  // Paper: bright, slightly tilted.
  Eigen::VectorXd paper;
  for (;;) {
    paper = detail::smooth_curve(rng, bands, p.paper_level, 0.02);
    if (paper.minCoeff() > 0.8 && paper.maxCoeff() < 0.98) break;
  }
  const double pigment_cap = paper.minCoeff() - 0.04;

  // Masstone spectra, separated in angle from paper and from each other.
  Eigen::MatrixXd basis(bands, p.n_pigments + 1);
  int basis_cols = 0;
  detail::extend_basis(basis, basis_cols, paper);

  Eigen::MatrixXd endmembers(p.n_pigments, bands);
  const double exact_sine =
      p.volume_target > 0.0 ? std::pow(p.volume_target, 1.0 / p.n_pigments) : 0.0;
  for (int i = 0; i < p.n_pigments; ++i) {
    Eigen::VectorXd accepted;
    double best_miss = 1e300;
    Eigen::VectorXd fallback;
    for (int attempt = 0; attempt < 800; ++attempt) {
      const double level = rng.uniform(p.pigment_level_min, p.pigment_level_max);
      const double amp_cap = std::min(level - p.pigment_floor - 0.01, pigment_cap - level);
      const double amp = rng.uniform(0.25, 0.9) * std::max(0.01, amp_cap);
      Eigen::VectorXd cand = detail::smooth_curve(rng, bands, level, amp);

      if (p.volume_target > 0.0) {
        // Blend the parallel and perpendicular parts to hit the exact sine.
        Eigen::VectorXd par = basis.leftCols(basis_cols) *
                              (basis.leftCols(basis_cols).transpose() * cand);
        Eigen::VectorXd perp = cand - par;
        if (perp.norm() < 1e-10 || par.norm() < 1e-10 || par.sum() <= 0.0) continue;
        Eigen::VectorXd dir = (par / par.norm()) * std::sqrt(1.0 - exact_sine * exact_sine) +
                              (perp / perp.norm()) * exact_sine;
        if (dir.sum() <= 1e-6) continue;
        cand = dir * (level * bands / dir.sum());
      }

      const bool in_range =
          cand.minCoeff() >= p.pigment_floor && cand.maxCoeff() <= pigment_cap;
      if (!in_range) continue;
      if (p.volume_target > 0.0) {
        accepted = cand;
        break;
      }
      const double sine = detail::incremental_sine(basis, basis_cols, cand);
      if (sine >= p.min_sine && sine <= p.max_sine) {
        accepted = cand;
        break;
      }
      const double miss =
          sine < p.min_sine ? p.min_sine - sine : sine - p.max_sine;
      if (miss < best_miss) {
        best_miss = miss;
        fallback = cand;
      }
    }
    if (accepted.size() == 0) {
      if (fallback.size() == 0)
        throw std::runtime_error("synth_scene: could not generate masstone spectrum " +
                                 std::to_string(i) + " within the reflectance bounds");
      accepted = fallback;
    }
    endmembers.row(i) = accepted.transpose();
    detail::extend_basis(basis, basis_cols, accepted);
  }

  // Layout: paper border, grid of blocks (pure masstones first, then mixes).
  const int mixed = p.mixed_blocks < 0 ? p.n_pigments : p.mixed_blocks;
  const int blocks = p.n_pigments + mixed;
  const int margin = std::max(1, static_cast<int>(std::lround(
                                      p.margin_frac * std::min(p.width, p.height))));
  const int grid_cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(blocks))));
  const int grid_rows = (blocks + grid_cols - 1) / grid_cols;
  const int inner_w = p.width - 2 * margin;
  const int inner_h = p.height - 2 * margin;
  const int cell_w = inner_w / grid_cols;
  const int cell_h = inner_h / grid_rows;
  const int gap = std::max(1, margin / 2);
  if (cell_w - 2 * gap < 1 || cell_h - 2 * gap < 1)
    throw std::invalid_argument("synth_scene: scene too small for " +
                                std::to_string(blocks) + " blocks");

  // Per-pixel abundances over the full image.
  Eigen::MatrixXd abundance =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p.width) * p.height, p.n_pigments);
  auto lin = [&](int row, int col) {
    return static_cast<Eigen::Index>(row) * p.width + col;
  };

  for (int b = 0; b < blocks; ++b) {
    const int gr = b / grid_cols;
    const int gc = b % grid_cols;
    const int r0 = margin + gr * cell_h + gap;
    const int c0 = margin + gc * cell_w + gap;
    const int r1 = margin + (gr + 1) * cell_h - gap;
    const int c1 = margin + (gc + 1) * cell_w - gap;

    int pair_a = 0, pair_b = 0;
    if (b >= p.n_pigments && p.mix_style == MixStyle::pair) {
      pair_a = static_cast<int>(rng.uniform_index(p.n_pigments));
      pair_b = p.n_pigments > 1
                   ? (pair_a + 1 + static_cast<int>(rng.uniform_index(p.n_pigments - 1))) %
                         p.n_pigments
                   : pair_a;
    }

    for (int row = r0; row < r1; ++row)
      for (int col = c0; col < c1; ++col) {
        if (b < p.n_pigments) {
          abundance(lin(row, col), b) = 1.0;
          continue;
        }
        const double total = rng.uniform(p.sum_min, p.sum_max);
        if (p.mix_style == MixStyle::pair) {
          const double share = rng.uniform(p.pair_min, p.pair_max);
          abundance(lin(row, col), pair_a) += share * total;
          abundance(lin(row, col), pair_b) += (1.0 - share) * total;
          if (pair_a == pair_b) abundance(lin(row, col), pair_a) = total;
        } else {
          const auto dir = rng.dirichlet(
              std::vector<double>(p.n_pigments, p.dirichlet_alpha));
          for (int i = 0; i < p.n_pigments; ++i)
            abundance(lin(row, col), i) = dir[i] * total;
        }
      }
  }

  // Compose pixels in K/S, invert, noise, clamp.
  const Eigen::VectorXd paper_ks = reflectance_to_ks(paper);
  Eigen::MatrixXd delta_ks(p.n_pigments, bands);  // masstone ks - paper ks
  for (int i = 0; i < p.n_pigments; ++i)
    delta_ks.row(i) =
        (reflectance_to_ks(Eigen::VectorXd(endmembers.row(i).transpose())) - paper_ks)
            .transpose();

  SyntheticScene scene;
  scene.paper = paper;
  scene.endmembers = endmembers;
  scene.true_mask = PixelMask(p.width, p.height);
  scene.true_labels.assign(static_cast<std::size_t>(p.width) * p.height, -1);

  const double step = p.wavelength_step > 0.0
                          ? p.wavelength_step
                          : (1000.0 - p.wavelength_start) / (bands - 1);
  std::vector<double> wl(bands);
  for (int b = 0; b < bands; ++b) wl[b] = p.wavelength_start + b * step;
  std::vector<double> data(static_cast<std::size_t>(p.width) * p.height * bands);

  for (int row = 0; row < p.height; ++row)
    for (int col = 0; col < p.width; ++col) {
      const Eigen::VectorXd c = abundance.row(lin(row, col)).transpose();
      const double csum = c.sum();
      Eigen::VectorXd ks = paper_ks;
      if (csum > 0.0) {
        ks += delta_ks.transpose() * c;
        scene.true_mask.set(row, col, true);
        int lbl = 0;
        c.maxCoeff(&lbl);
        scene.true_labels[lin(row, col)] = lbl;
      }
      for (int b = 0; b < bands; ++b) {
        double r = ks_to_reflectance(ks[b]);
        if (p.noise_sigma > 0.0) r += p.noise_sigma * rng.normal();
        r = std::min(1.0, std::max(kReflectanceFloor, r));
        data[(static_cast<std::size_t>(b) * p.height + row) * p.width + col] = r;
      }
    }

  scene.cube = SpectralCube(p.width, p.height, bands, wl, std::move(data));

  const auto coords = masked_pixel_coords(scene.true_mask);
  scene.true_abundances.pixels = coords;
  scene.true_abundances.values.resize(static_cast<Eigen::Index>(coords.size()), p.n_pigments);
  for (std::size_t i = 0; i < coords.size(); ++i)
    scene.true_abundances.values.row(static_cast<Eigen::Index>(i)) =
        abundance.row(lin(coords[i].first, coords[i].second));

  return scene;
}

}  // namespace kmu
