// Raster output: RGB preview rendering from a cube, class/error map PNGs,
// and 1-bit mask PNGs (black = selected). Backed by libpng.
#pragma once

#include <png.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmu/csv.hpp"
#include "kmu/cube.hpp"
#include "kmu/model.hpp"

namespace kmu {

struct ImageU8 {
  int width = 0;
  int height = 0;
  int channels = 1;  // 1 = gray, 3 = rgb
  std::vector<std::uint8_t> pixels;

  ImageU8() = default;
  ImageU8(int w, int h, int c)
      : width(w), height(h), channels(c),
        pixels(static_cast<std::size_t>(w) * h * c, 0) {}

  std::uint8_t& at(int row, int col, int ch) {
    return pixels[(static_cast<std::size_t>(row) * width + col) * channels + ch];
  }
  std::uint8_t at(int row, int col, int ch) const {
    return pixels[(static_cast<std::size_t>(row) * width + col) * channels + ch];
  }
};

// Rectangle in pixel coordinates, used for patches and crops.
struct Rect {
  int row = 0;
  int col = 0;
  int height = 0;
  int width = 0;
};

inline void require_rect_in_bounds(const Rect& r, int width, int height,
                                   const std::string& op) {
  if (r.height < 1 || r.width < 1 || r.row < 0 || r.col < 0 ||
      r.row + r.height > height || r.col + r.width > width)
    throw std::invalid_argument(op + ": rectangle (row " + std::to_string(r.row) +
                                ", col " + std::to_string(r.col) + ", " +
                                std::to_string(r.height) + "x" + std::to_string(r.width) +
                                ") outside " + std::to_string(height) + "x" +
                                std::to_string(width) + " image");
}

// Index of the band whose wavelength is nearest the target; exact ties go
// to the lower wavelength. Works for any wavelength ordering.
inline int nearest_band(std::span<const double> wavelengths, double target) {
  int best = 0;
  double best_d = std::abs(wavelengths[0] - target);
  for (int i = 1; i < static_cast<int>(wavelengths.size()); ++i) {
    const double d = std::abs(wavelengths[i] - target);
    if (d < best_d || (d == best_d && wavelengths[i] < wavelengths[best])) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

inline std::uint8_t reflectance_to_u8(double r) {
  if (r < 0.0) r = 0.0;
  if (r > 1.0) r = 1.0;
  return static_cast<std::uint8_t>(std::lround(r * 255.0));  // round half up
}

// Tri-band RGB preview: per channel the nearest band is selected, clamped
// to [0,1] and scaled to [0,255].
inline ImageU8 render_rgb(const SpectralCube& cube, double red_nm = 650.0,
                          double green_nm = 550.0, double blue_nm = 450.0) {
  const double lo = cube.wavelengths.front();
  const double hi = cube.wavelengths.back();
  const std::array<std::pair<const char*, double>, 3> req = {
      {{"red", red_nm}, {"green", green_nm}, {"blue", blue_nm}}};
  std::array<int, 3> band{};
  for (int c = 0; c < 3; ++c) {
    if (req[c].second < lo || req[c].second > hi)
      throw std::invalid_argument("render_rgb: " + std::string(req[c].first) +
                                  " wavelength " + format_double(req[c].second) +
                                  " nm outside cube range [" + format_double(lo) + ", " +
                                  format_double(hi) + "]");
    band[c] = nearest_band(cube.wavelengths, req[c].second);
  }
  ImageU8 img(cube.width, cube.height, 3);
  for (int row = 0; row < cube.height; ++row)
    for (int col = 0; col < cube.width; ++col)
      for (int c = 0; c < 3; ++c)
        img.at(row, col, c) = reflectance_to_u8(cube.at(row, col, band[c]));
  return img;
}

inline ImageU8 crop(const ImageU8& img, const Rect& r) {
  require_rect_in_bounds(r, img.width, img.height, "crop");
  ImageU8 out(r.width, r.height, img.channels);
  for (int row = 0; row < r.height; ++row)
    for (int col = 0; col < r.width; ++col)
      for (int c = 0; c < img.channels; ++c)
        out.at(row, col, c) = img.at(r.row + row, r.col + col, c);
  return out;
}

namespace detail {

struct PngWriter {
  std::FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;

  explicit PngWriter(const std::filesystem::path& path) {
    fp = std::fopen(path.string().c_str(), "wb");
    if (!fp) throw std::runtime_error("png: cannot open " + path.string() + " for write");
    png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png) info = png_create_info_struct(png);
    if (!png || !info) {
      cleanup();
      throw std::runtime_error("png: failed to allocate write structures");
    }
  }
  ~PngWriter() { cleanup(); }
  PngWriter(const PngWriter&) = delete;
  PngWriter& operator=(const PngWriter&) = delete;

  void cleanup() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    png = nullptr;
    info = nullptr;
    if (fp) std::fclose(fp);
    fp = nullptr;
  }
};

struct PngReader {
  std::FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;

  explicit PngReader(const std::filesystem::path& path) {
    fp = std::fopen(path.string().c_str(), "rb");
    if (!fp) throw std::runtime_error("png: cannot open " + path.string());
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png) info = png_create_info_struct(png);
    if (!png || !info) {
      cleanup();
      throw std::runtime_error("png: failed to allocate read structures");
    }
  }
  ~PngReader() { cleanup(); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  void cleanup() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    png = nullptr;
    info = nullptr;
    if (fp) std::fclose(fp);
    fp = nullptr;
  }
};

}  // namespace detail

inline void write_png(const ImageU8& img, const std::filesystem::path& path) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("write_png: channels must be 1 or 3");
  detail::PngWriter w(path);
  if (setjmp(png_jmpbuf(w.png)))
    throw std::runtime_error("png: write failed for " + path.string());
  png_init_io(w.png, w.fp);
  png_set_IHDR(w.png, w.info, img.width, img.height, 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  std::vector<png_bytep> rows(img.height);
  for (int r = 0; r < img.height; ++r)
    rows[r] = const_cast<png_bytep>(
        img.pixels.data() + static_cast<std::size_t>(r) * img.width * img.channels);
  png_write_image(w.png, rows.data());
  png_write_end(w.png, nullptr);
}

// Reads a PNG, expanding palette/low-bit-depth/alpha to 8-bit gray or RGB.
inline ImageU8 read_png(const std::filesystem::path& path) {
  detail::PngReader r(path);
  if (setjmp(png_jmpbuf(r.png)))
    throw std::runtime_error("png: read failed for " + path.string());
  png_init_io(r.png, r.fp);
  png_read_info(r.png, r.info);

  png_set_expand(r.png);
  png_set_strip_16(r.png);
  png_set_strip_alpha(r.png);
  png_read_update_info(r.png, r.info);

  const int width = static_cast<int>(png_get_image_width(r.png, r.info));
  const int height = static_cast<int>(png_get_image_height(r.png, r.info));
  const int channels = static_cast<int>(png_get_channels(r.png, r.info));
  if (channels != 1 && channels != 3)
    throw std::runtime_error("png: unsupported channel count " + std::to_string(channels) +
                             " in " + path.string());

  ImageU8 img(width, height, channels);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = img.pixels.data() + static_cast<std::size_t>(y) * width * channels;
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
  return img;
}

// 1-bit grayscale mask, black = selected.
inline void write_mask_png(const PixelMask& mask, const std::filesystem::path& path) {
  detail::PngWriter w(path);
  if (setjmp(png_jmpbuf(w.png)))
    throw std::runtime_error("png: write failed for " + path.string());
  png_init_io(w.png, w.fp);
  png_set_IHDR(w.png, w.info, mask.width, mask.height, 1, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  png_set_packing(w.png);  // accept one byte per pixel, libpng packs bits
  std::vector<std::uint8_t> row(mask.width);
  for (int r = 0; r < mask.height; ++r) {
    for (int c = 0; c < mask.width; ++c) row[c] = mask.at(r, c) ? 0 : 1;
    png_write_row(w.png, row.data());
  }
  png_write_end(w.png, nullptr);
}

inline PixelMask read_mask_png(const std::filesystem::path& path) {
  const ImageU8 img = read_png(path);
  PixelMask mask(img.width, img.height);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      mask.set(r, c, img.at(r, c, 0) < 128);  // black = selected
  return mask;
}

// Fixed 16-color categorical palette for class maps.
inline constexpr std::array<std::array<std::uint8_t, 3>, 16> kClassPalette = {{
    {31, 119, 180},  {255, 127, 14},  {44, 160, 44},   {214, 39, 40},
    {148, 103, 189}, {140, 86, 75},   {227, 119, 194}, {127, 127, 127},
    {188, 189, 34},  {23, 190, 207},  {174, 199, 232}, {255, 187, 120},
    {152, 223, 138}, {255, 152, 150}, {197, 176, 213}, {196, 156, 148},
}};

// One palette color per label; pixels outside the mask are white.
inline void write_class_png(const ClassMap& map, const std::filesystem::path& path) {
  if (map.k() > static_cast<int>(kClassPalette.size()))
    throw std::invalid_argument(
        "write_class_png: " + std::to_string(map.k()) + " classes exceed the " +
        std::to_string(kClassPalette.size()) +
        "-color palette; extend kClassPalette to render more classes");
  ImageU8 img(map.width, map.height, 3);
  for (int r = 0; r < map.height; ++r)
    for (int c = 0; c < map.width; ++c) {
      const int label = map.label_at(r, c);
      if (label < 0) {
        img.at(r, c, 0) = img.at(r, c, 1) = img.at(r, c, 2) = 255;
      } else {
        if (label >= map.k())
          throw std::invalid_argument("write_class_png: label " + std::to_string(label) +
                                      " outside [0, " + std::to_string(map.k()) + ")");
        for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = kClassPalette[label][ch];
      }
    }
  write_png(img, path);
}

// Grayscale error map: RMSE scaled so the maximum maps to 255. The scale
// factor lands in `<path>.scale.txt`; an all-zero map gets scale 0 plus a
// note and renders uniformly black.
inline void write_error_png(const ClassMap& map, const std::filesystem::path& path) {
  double max_rmse = 0.0;
  for (std::size_t i = 0; i < map.rmse.size(); ++i)
    if (map.labels[i] >= 0 && map.rmse[i] > max_rmse) max_rmse = map.rmse[i];

  ImageU8 img(map.width, map.height, 1);
  if (max_rmse > 0.0) {
    for (int r = 0; r < map.height; ++r)
      for (int c = 0; c < map.width; ++c) {
        if (map.label_at(r, c) < 0) continue;
        const double v = map.rmse_at(r, c) / max_rmse;
        img.at(r, c, 0) = reflectance_to_u8(v);
      }
  }
  write_png(img, path);

  const std::filesystem::path sidecar = path.string() + ".scale.txt";
  std::ofstream out(sidecar, std::ios::binary);
  if (!out) throw std::runtime_error("write_error_png: cannot open sidecar " + sidecar.string());
  if (max_rmse > 0.0) {
    out << "scale = " << format_double(255.0 / max_rmse) << "\n";
    out << "max_rmse = " << format_double(max_rmse) << "\n";
  } else {
    out << "scale = 0\n";
    out << "note = all RMSE values are zero; image is uniformly black\n";
  }
}

}  // namespace kmu
