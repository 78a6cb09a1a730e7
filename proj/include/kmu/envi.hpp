// ENVI-style cube I/O: text header (`key = value`, `wavelength = { ... }`)
// plus a raw binary data file. BSQ/BIL/BIP interleaves, float32/float64
// storage, little-endian default with byte-swap on read.
#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmu/csv.hpp"
#include "kmu/cube.hpp"

namespace kmu {

enum class Interleave { bsq, bil, bip };

inline std::string to_string(Interleave il) {
  switch (il) {
    case Interleave::bsq: return "bsq";
    case Interleave::bil: return "bil";
    case Interleave::bip: return "bip";
  }
  return "bsq";
}

struct EnviHeader {
  int samples = 0;  // width
  int lines = 0;    // height
  int bands = 0;
  Interleave interleave = Interleave::bsq;
  int data_type = 4;  // 4 = float32, 5 = float64
  int byte_order = 0; // 0 = little endian, 1 = big endian
  std::size_t header_offset = 0;
  std::vector<double> wavelengths;

  std::size_t element_size() const {
    if (data_type == 4) return 4;
    if (data_type == 5) return 8;
    throw std::runtime_error("envi: unsupported data type code " +
                             std::to_string(data_type) +
                             "; supported codes: 4 (float32), 5 (float64)");
  }
};

namespace detail {

inline std::string lower_trim(std::string s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.front())) s.erase(s.begin());
  while (!s.empty() && is_space(s.back())) s.pop_back();
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline std::string trim(std::string s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.front())) s.erase(s.begin());
  while (!s.empty() && is_space(s.back())) s.pop_back();
  return s;
}

}  // namespace detail

inline EnviHeader read_envi_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("envi: cannot open header " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.rfind("ENVI", 0) != 0)
    throw std::runtime_error("envi: header " + path.string() + " missing ENVI magic line");

  EnviHeader hdr;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;

    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = detail::lower_trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));

    // Brace lists may span lines.
    if (!value.empty() && value.front() == '{' && value.find('}') == std::string::npos) {
      while (pos < text.size()) {
        std::size_t next_eol = text.find('\n', pos);
        if (next_eol == std::string::npos) next_eol = text.size();
        value += " " + detail::trim(text.substr(pos, next_eol - pos));
        pos = next_eol + 1;
        if (value.find('}') != std::string::npos) break;
      }
    }

    if (key == "samples") hdr.samples = static_cast<int>(parse_double(value));
    else if (key == "lines") hdr.lines = static_cast<int>(parse_double(value));
    else if (key == "bands") hdr.bands = static_cast<int>(parse_double(value));
    else if (key == "data type") hdr.data_type = static_cast<int>(parse_double(value));
    else if (key == "byte order") hdr.byte_order = static_cast<int>(parse_double(value));
    else if (key == "header offset") hdr.header_offset = static_cast<std::size_t>(parse_double(value));
    else if (key == "interleave") {
      const std::string il = detail::lower_trim(value);
      if (il == "bsq") hdr.interleave = Interleave::bsq;
      else if (il == "bil") hdr.interleave = Interleave::bil;
      else if (il == "bip") hdr.interleave = Interleave::bip;
      else throw std::runtime_error("envi: unknown interleave '" + il + "'");
    } else if (key == "wavelength") {
      const auto open = value.find('{');
      const auto close = value.find('}');
      if (open == std::string::npos || close == std::string::npos || close < open)
        throw std::runtime_error("envi: malformed wavelength list in " + path.string());
      std::string body = value.substr(open + 1, close - open - 1);
      for (const auto& field : split_fields(body)) {
        const std::string f = detail::trim(field);
        if (!f.empty()) hdr.wavelengths.push_back(parse_double(f));
      }
    }
  }

  if (hdr.samples < 1 || hdr.lines < 1 || hdr.bands < 1)
    throw std::runtime_error("envi: header " + path.string() +
                             " must declare samples, lines and bands >= 1");
  if (!hdr.wavelengths.empty() &&
      static_cast<int>(hdr.wavelengths.size()) != hdr.bands)
    throw std::runtime_error("envi: wavelength list length " +
                             std::to_string(hdr.wavelengths.size()) +
                             " does not match bands " + std::to_string(hdr.bands));
  return hdr;
}

inline void write_envi_header(const EnviHeader& hdr, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("envi: cannot open header for write " + path.string());
  out << "ENVI\n";
  out << "description = { kmunmix spectral cube }\n";
  out << "samples = " << hdr.samples << "\n";
  out << "lines = " << hdr.lines << "\n";
  out << "bands = " << hdr.bands << "\n";
  out << "header offset = " << hdr.header_offset << "\n";
  out << "file type = ENVI Standard\n";
  out << "data type = " << hdr.data_type << "\n";
  out << "interleave = " << to_string(hdr.interleave) << "\n";
  out << "byte order = " << hdr.byte_order << "\n";
  out << "wavelength units = Nanometers\n";
  out << "wavelength = { ";
  for (std::size_t i = 0; i < hdr.wavelengths.size(); ++i) {
    if (i) out << ", ";
    out << format_double(hdr.wavelengths[i]);
  }
  out << " }\n";
  if (!out) throw std::runtime_error("envi: header write failed for " + path.string());
}

namespace detail {

template <class T>
inline T byteswap_value(T v) {
  char* p = reinterpret_cast<char*>(&v);
  std::reverse(p, p + sizeof(T));
  return v;
}

// File element order for each interleave, as (row, col, band) -> linear index.
inline std::size_t file_index(const EnviHeader& h, int row, int col, int band) {
  const std::size_t w = h.samples, hgt = h.lines, b = h.bands;
  switch (h.interleave) {
    case Interleave::bsq: return (static_cast<std::size_t>(band) * hgt + row) * w + col;
    case Interleave::bil: return (static_cast<std::size_t>(row) * b + band) * w + col;
    case Interleave::bip: return (static_cast<std::size_t>(row) * w + col) * b + band;
  }
  return 0;
}

}  // namespace detail

inline SpectralCube read_envi(const std::filesystem::path& header_path,
                              const std::filesystem::path& data_path) {
  const EnviHeader hdr = read_envi_header(header_path);
  if (hdr.wavelengths.empty())
    throw std::runtime_error("envi: header " + header_path.string() +
                             " has no wavelength list; cube ingestion requires one");

  const std::size_t count = static_cast<std::size_t>(hdr.samples) * hdr.lines * hdr.bands;
  const std::size_t expected = hdr.header_offset + count * hdr.element_size();
  std::error_code ec;
  const std::uintmax_t actual = std::filesystem::file_size(data_path, ec);
  if (ec) throw std::runtime_error("envi: cannot stat data file " + data_path.string());
  if (actual != expected)
    throw std::runtime_error("envi: data file " + data_path.string() + " size mismatch: expected " +
                             std::to_string(expected) + " bytes, found " +
                             std::to_string(actual));

  std::ifstream in(data_path, std::ios::binary);
  if (!in) throw std::runtime_error("envi: cannot open data file " + data_path.string());
  in.seekg(static_cast<std::streamoff>(hdr.header_offset));

  std::vector<double> file_values(count);
  const bool swap = (hdr.byte_order == 1);  // host is little endian
  if (hdr.element_size() == 4) {
    std::vector<float> raw(count);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * 4));
    if (!in) throw std::runtime_error("envi: short read from " + data_path.string());
    for (std::size_t i = 0; i < count; ++i)
      file_values[i] = swap ? detail::byteswap_value(raw[i]) : raw[i];
  } else {
    std::vector<double> raw(count);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * 8));
    if (!in) throw std::runtime_error("envi: short read from " + data_path.string());
    for (std::size_t i = 0; i < count; ++i)
      file_values[i] = swap ? detail::byteswap_value(raw[i]) : raw[i];
  }

  // Normalize to internal BSQ order.
  std::vector<double> data(count);
  SpectralCube cube;
  cube.width = hdr.samples;
  cube.height = hdr.lines;
  cube.bands = hdr.bands;
  for (int band = 0; band < hdr.bands; ++band)
    for (int row = 0; row < hdr.lines; ++row)
      for (int col = 0; col < hdr.samples; ++col)
        data[(static_cast<std::size_t>(band) * hdr.lines + row) * hdr.samples + col] =
            file_values[detail::file_index(hdr, row, col, band)];

  return SpectralCube(hdr.samples, hdr.lines, hdr.bands, hdr.wavelengths, std::move(data));
}

// Writes header + raw data. data_type 4 narrows to float32 (the at-rest
// representation); pass data_type 5 to keep full doubles on disk.
inline void write_envi(const SpectralCube& cube, const std::filesystem::path& header_path,
                       const std::filesystem::path& data_path,
                       Interleave interleave = Interleave::bsq, int data_type = 4) {
  EnviHeader hdr;
  hdr.samples = cube.width;
  hdr.lines = cube.height;
  hdr.bands = cube.bands;
  hdr.interleave = interleave;
  hdr.data_type = data_type;
  hdr.byte_order = 0;
  hdr.wavelengths = cube.wavelengths;
  hdr.element_size();  // validates data_type
  write_envi_header(hdr, header_path);

  const std::size_t count = cube.data.size();
  std::ofstream out(data_path, std::ios::binary);
  if (!out) throw std::runtime_error("envi: cannot open data file for write " + data_path.string());

  if (data_type == 4) {
    std::vector<float> raw(count);
    for (int band = 0; band < cube.bands; ++band)
      for (int row = 0; row < cube.height; ++row)
        for (int col = 0; col < cube.width; ++col)
          raw[detail::file_index(hdr, row, col, band)] =
              static_cast<float>(cube.at(row, col, band));
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(count * 4));
  } else {
    std::vector<double> raw(count);
    for (int band = 0; band < cube.bands; ++band)
      for (int row = 0; row < cube.height; ++row)
        for (int col = 0; col < cube.width; ++col)
          raw[detail::file_index(hdr, row, col, band)] = cube.at(row, col, band);
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(count * 8));
  }
  if (!out) throw std::runtime_error("envi: data write failed for " + data_path.string());
}

}  // namespace kmu
