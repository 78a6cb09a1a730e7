// Opaque single-constant Kubelka-Munk transforms between reflectance and
// K/S space, plus bare-substrate (paper) spectrum subtraction.
//
//   K/S = (1 - R)^2 / (2R)
//   R   = 1 + K/S - sqrt((K/S)^2 + 2 K/S)
//
// The inverse is evaluated in the algebraically equivalent conjugate form
// 1 / (1 + x + sqrt(x(x + 2))) to avoid cancellation at large K/S.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "kmu/cube.hpp"
#include "kmu/parallel.hpp"

namespace kmu {

// Reflectance below this floor is raised to it before the K/S transform;
// this bounds K/S below ~5e3 so a single dark-noise pixel cannot dominate
// least-squares residuals.
inline constexpr double kReflectanceFloor = 1e-4;

// Reflectance above 1 (calibration overshoot, glint) is clamped here;
// values > 1 would produce negative K/S.
inline constexpr double kReflectanceCeil = 1.0 - 1e-6;

inline double reflectance_to_ks(double r) {
  if (r < kReflectanceFloor)
    r = kReflectanceFloor;
  else if (r > 1.0)
    r = kReflectanceCeil;
  const double u = 1.0 - r;
  return u * u / (2.0 * r);
}

inline double ks_to_reflectance(double ks) {
  if (ks < 0.0)
    throw std::domain_error("ks_to_reflectance: K/S must be >= 0, got " + std::to_string(ks));
  return 1.0 / (1.0 + ks + std::sqrt(ks * (ks + 2.0)));
}

inline Eigen::VectorXd reflectance_to_ks(const Eigen::VectorXd& r) {
  Eigen::VectorXd out(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) out[i] = reflectance_to_ks(r[i]);
  return out;
}

inline Eigen::VectorXd ks_to_reflectance(const Eigen::VectorXd& ks) {
  Eigen::VectorXd out(ks.size());
  for (Eigen::Index i = 0; i < ks.size(); ++i) out[i] = ks_to_reflectance(ks[i]);
  return out;
}

struct KsCube {
  int width = 0;
  int height = 0;
  int bands = 0;
  std::vector<double> wavelengths;
  std::vector<double> values;  // BSQ, same layout as SpectralCube; >= 0

  std::size_t index(int row, int col, int band) const {
    return (static_cast<std::size_t>(band) * height + row) * width + col;
  }
  double at(int row, int col, int band) const { return values[index(row, col, band)]; }

  Eigen::VectorXd pixel(int row, int col) const {
    Eigen::VectorXd v(bands);
    for (int b = 0; b < bands; ++b) v[b] = at(row, col, b);
    return v;
  }
};

// The handpicked bare-substrate spectrum and its K/S transform.
struct PaperSpectrum {
  Eigen::VectorXd reflectance;
  Eigen::VectorXd ks;

  static PaperSpectrum from_reflectance(const Eigen::VectorXd& r) {
    PaperSpectrum p;
    p.reflectance = r;
    p.ks = reflectance_to_ks(r);
    return p;
  }
};

// Elementwise K/S over the masked pixels; unmasked pixels are left at zero
// and carry no meaning downstream.
inline KsCube cube_to_ks(const SpectralCube& cube, const PixelMask& mask,
                         unsigned threads = 1) {
  require_mask_matches(mask, cube.width, cube.height, "cube_to_ks");
  KsCube ks;
  ks.width = cube.width;
  ks.height = cube.height;
  ks.bands = cube.bands;
  ks.wavelengths = cube.wavelengths;
  ks.values.assign(cube.data.size(), 0.0);
  const std::size_t npix = cube.pixel_count();
  parallel_for(npix, threads, [&](std::size_t i) {
    const int row = static_cast<int>(i) / cube.width;
    const int col = static_cast<int>(i) % cube.width;
    if (!mask.at(row, col)) return;
    for (int b = 0; b < cube.bands; ++b) {
      ks.values[ks.index(row, col, b)] = reflectance_to_ks(cube.at(row, col, b));
    }
  });
  return ks;
}

// ks_pixel - paper.ks, floored at 0. K and S are non-negative physical
// coefficients, so pixels brighter than the chosen paper clip to zero.
inline Eigen::VectorXd subtract_paper(const Eigen::VectorXd& ks_pixel,
                                      const PaperSpectrum& paper) {
  if (ks_pixel.size() != paper.ks.size())
    throw std::invalid_argument("subtract_paper: length mismatch (" +
                                std::to_string(ks_pixel.size()) + " vs " +
                                std::to_string(paper.ks.size()) + ")");
  return (ks_pixel - paper.ks).cwiseMax(0.0);
}

}  // namespace kmu
