// File schemas shared by the pipeline and the standalone subcommands:
// endmember, volume, abundance, label and class-mean CSV tables. Numbers go
// through shortest round-trip formatting, so write-then-read is value-exact
// and a standalone stage reproduces the in-memory pipeline bit for bit.
#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmu/csv.hpp"
#include "kmu/cube.hpp"
#include "kmu/model.hpp"

namespace kmu {

inline std::vector<std::string> band_columns(const std::vector<double>& wavelengths) {
  std::vector<std::string> cols;
  cols.reserve(wavelengths.size());
  for (double w : wavelengths) cols.push_back("w" + format_double(w));
  return cols;
}

inline void write_endmembers_csv(const EndmemberSet& endmembers,
                                 const std::vector<double>& wavelengths,
                                 const std::filesystem::path& path) {
  CsvTable t;
  t.columns = {"index", "row", "col"};
  for (const auto& c : band_columns(wavelengths)) t.columns.push_back(c);
  for (int i = 0; i < endmembers.count(); ++i) {
    std::vector<double> row;
    row.reserve(t.columns.size());
    row.push_back(i);
    row.push_back(endmembers.sources[i].first);
    row.push_back(endmembers.sources[i].second);
    for (int b = 0; b < endmembers.spectra.cols(); ++b)
      row.push_back(endmembers.spectra(i, b));
    t.rows.push_back(std::move(row));
  }
  write_csv(t, path);
}

// Reads an endmember table and checks it against the cube: each spectrum
// must equal the cube pixel at its source coordinate.
inline EndmemberSet read_endmembers_csv(const std::filesystem::path& path,
                                        const SpectralCube& cube) {
  const CsvTable t = read_csv(path);
  if (t.columns.size() != static_cast<std::size_t>(cube.bands) + 3)
    throw std::runtime_error("endmembers csv " + path.string() + ": expected " +
                             std::to_string(cube.bands + 3) + " columns, found " +
                             std::to_string(t.columns.size()));
  EndmemberSet out;
  out.spectra.resize(static_cast<Eigen::Index>(t.rows.size()), cube.bands);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const int r = static_cast<int>(row[1]);
    const int c = static_cast<int>(row[2]);
    const Eigen::VectorXd from_cube = cube.pixel(r, c);
    for (int b = 0; b < cube.bands; ++b) {
      out.spectra(static_cast<Eigen::Index>(i), b) = row[3 + b];
      if (row[3 + b] != from_cube[b])
        throw std::runtime_error("endmembers csv " + path.string() + ": endmember " +
                                 std::to_string(i) + " does not match cube pixel (" +
                                 std::to_string(r) + "," + std::to_string(c) + ")");
    }
    out.sources.emplace_back(r, c);
  }
  for (std::size_t i = 0; i < out.sources.size(); ++i)
    for (std::size_t j = i + 1; j < out.sources.size(); ++j)
      if (out.sources[i] == out.sources[j])
        throw std::runtime_error("endmembers csv " + path.string() +
                                 ": duplicate source coordinate");
  return out;
}

inline void write_volume_csv(const VolumeFunction& vf, const std::filesystem::path& path) {
  CsvTable t;
  t.columns = {"k", "volume"};
  for (int k = 1; k <= vf.max_k(); ++k)
    t.rows.push_back({static_cast<double>(k), vf.value(k)});
  write_csv(t, path);
}

inline void write_abundances_csv(const AbundanceMatrix& a, const std::filesystem::path& path) {
  CsvTable t;
  t.columns = {"row", "col"};
  for (int j = 0; j < a.endmember_count(); ++j)
    t.columns.push_back("a" + std::to_string(j + 1));
  for (int i = 0; i < a.pixel_count(); ++i) {
    std::vector<double> row;
    row.reserve(t.columns.size());
    row.push_back(a.pixels[i].first);
    row.push_back(a.pixels[i].second);
    for (int j = 0; j < a.endmember_count(); ++j) row.push_back(a.values(i, j));
    t.rows.push_back(std::move(row));
  }
  write_csv(t, path);
}

inline AbundanceMatrix read_abundances_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.columns.size() < 3)
    throw std::runtime_error("abundances csv " + path.string() + ": too few columns");
  const int m = static_cast<int>(t.columns.size()) - 2;
  AbundanceMatrix out;
  out.values.resize(static_cast<Eigen::Index>(t.rows.size()), m);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out.pixels.emplace_back(static_cast<int>(t.rows[i][0]), static_cast<int>(t.rows[i][1]));
    for (int j = 0; j < m; ++j)
      out.values(static_cast<Eigen::Index>(i), j) = t.rows[i][2 + j];
  }
  return out;
}

inline void write_labels_csv(const ClassMap& map, const std::filesystem::path& path) {
  CsvTable t;
  t.columns = {"row", "col", "label", "rmse"};
  for (int r = 0; r < map.height; ++r)
    for (int c = 0; c < map.width; ++c) {
      if (map.label_at(r, c) < 0) continue;
      t.rows.push_back({static_cast<double>(r), static_cast<double>(c),
                        static_cast<double>(map.label_at(r, c)), map.rmse_at(r, c)});
    }
  write_csv(t, path);
}

inline void write_class_means_csv(const ClassMap& map,
                                  const std::vector<double>& wavelengths,
                                  const std::filesystem::path& path) {
  CsvTable t;
  t.columns = {"class"};
  for (const auto& c : band_columns(wavelengths)) t.columns.push_back(c);
  for (int cls = 0; cls < map.k(); ++cls) {
    std::vector<double> row;
    row.reserve(t.columns.size());
    row.push_back(cls);
    for (int b = 0; b < map.class_means.cols(); ++b) row.push_back(map.class_means(cls, b));
    t.rows.push_back(std::move(row));
  }
  write_csv(t, path);
}

}  // namespace kmu
