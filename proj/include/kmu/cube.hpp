// Spectral cube and pixel mask data model. Cubes are band-sequential in
// memory and addressed as (row, col, band); values are held as doubles and
// treated as immutable once constructed.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kmu {

struct SpectralCube {
  int width = 0;
  int height = 0;
  int bands = 0;
  std::vector<double> wavelengths;  // nanometers, strictly increasing
  std::vector<double> data;         // BSQ: (band * height + row) * width + col

  SpectralCube() = default;
  SpectralCube(int w, int h, int b, std::vector<double> wl, std::vector<double> d)
      : width(w), height(h), bands(b), wavelengths(std::move(wl)), data(std::move(d)) {
    validate();
  }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  std::size_t index(int row, int col, int band) const {
    return (static_cast<std::size_t>(band) * height + row) * width + col;
  }

  double at(int row, int col, int band) const { return data[index(row, col, band)]; }

  bool in_bounds(int row, int col) const {
    return row >= 0 && row < height && col >= 0 && col < width;
  }

  // Reflectance vector at one pixel. Bounds are checked; the error names
  // the offending coordinate.
  Eigen::VectorXd pixel(int row, int col) const {
    if (!in_bounds(row, col)) {
      throw std::out_of_range("cube_pixel: pixel (" + std::to_string(row) + "," +
                              std::to_string(col) + ") out of bounds for " +
                              std::to_string(height) + "x" + std::to_string(width) +
                              " cube");
    }
    Eigen::VectorXd v(bands);
    for (int b = 0; b < bands; ++b) v[b] = at(row, col, b);
    return v;
  }

  void set_pixel(int row, int col, const Eigen::VectorXd& spectrum) {
    for (int b = 0; b < bands; ++b) data[index(row, col, b)] = spectrum[b];
  }

  void validate() const {
    if (width < 1 || height < 1 || bands < 1)
      throw std::invalid_argument("cube: dimensions must be >= 1");
    if (static_cast<int>(wavelengths.size()) != bands)
      throw std::invalid_argument("cube: wavelength count " +
                                  std::to_string(wavelengths.size()) +
                                  " does not match band count " + std::to_string(bands));
    for (int b = 1; b < bands; ++b) {
      if (!(wavelengths[b] > wavelengths[b - 1]))
        throw std::invalid_argument("cube: wavelengths must be strictly increasing");
    }
    if (data.size() != pixel_count() * static_cast<std::size_t>(bands))
      throw std::invalid_argument("cube: data length " + std::to_string(data.size()) +
                                  " does not equal width*height*bands");
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!std::isfinite(data[i])) {
        const std::size_t band = i / pixel_count();
        const std::size_t rest = i % pixel_count();
        throw std::invalid_argument(
            "cube: non-finite value at (row " + std::to_string(rest / width) + ", col " +
            std::to_string(rest % width) + ", band " + std::to_string(band) + ")");
      }
    }
  }
};

struct PixelMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> selected;  // 1 = selected

  PixelMask() = default;
  PixelMask(int w, int h) : width(w), height(h), selected(static_cast<std::size_t>(w) * h, 0) {}

  bool at(int row, int col) const {
    return selected[static_cast<std::size_t>(row) * width + col] != 0;
  }
  void set(int row, int col, bool value) {
    selected[static_cast<std::size_t>(row) * width + col] = value ? 1 : 0;
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : selected) n += v != 0;
    return n;
  }
};

inline PixelMask full_mask(int width, int height) {
  PixelMask m(width, height);
  std::fill(m.selected.begin(), m.selected.end(), std::uint8_t{1});
  return m;
}

inline void require_mask_matches(const PixelMask& mask, int width, int height,
                                 const std::string& op) {
  if (mask.width != width || mask.height != height)
    throw std::invalid_argument(op + ": mask " + std::to_string(mask.height) + "x" +
                                std::to_string(mask.width) + " does not match cube " +
                                std::to_string(height) + "x" + std::to_string(width));
}

// Selected pixel coordinates in linear (row-major) order. This ordering is
// the canonical pixel index map shared by abundance rows and class labels.
inline std::vector<std::pair<int, int>> masked_pixel_coords(const PixelMask& mask) {
  std::vector<std::pair<int, int>> coords;
  coords.reserve(mask.count());
  for (int r = 0; r < mask.height; ++r)
    for (int c = 0; c < mask.width; ++c)
      if (mask.at(r, c)) coords.emplace_back(r, c);
  return coords;
}

}  // namespace kmu
