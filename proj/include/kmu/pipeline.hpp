// End-to-end pipeline: segment -> endmember extraction -> volume-function
// truncation -> K/S transform -> NNLS unmixing -> feature augmentation ->
// K-means -> per-pixel RMSE. Every stage writes its file artifacts as it
// completes, so a failed run keeps partial outputs for inspection, and
// every tunable is echoed into a run manifest.
#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmu/artifacts.hpp"
#include "kmu/classify.hpp"
#include "kmu/csv.hpp"
#include "kmu/cube.hpp"
#include "kmu/dimensionality.hpp"
#include "kmu/envi.hpp"
#include "kmu/image.hpp"
#include "kmu/km.hpp"
#include "kmu/rng.hpp"
#include "kmu/segment.hpp"
#include "kmu/synth.hpp"
#include "kmu/unmix.hpp"
#include "kmu/version.hpp"

namespace kmu {

struct PipelineConfig {
  std::filesystem::path cube_header;
  std::filesystem::path cube_data;
  std::filesystem::path out_dir = "out";
  std::pair<int, int> paper_pixel{0, 0};
  Rect patch;
  int segment_k = 4;
  std::vector<int> pigment_clusters;
  int m_max = 18;
  double tau_vol = kDefaultVolumeTau;
  int final_k = 0;  // 0 = auto: use the estimated dimensionality
  std::uint64_t seed = 0;
  bool paper_subtract = true;
  RmseSpace rmse_space = RmseSpace::reflectance;
  unsigned threads = 1;
};

struct PipelineResult {
  PixelMask mask;
  EndmemberSet endmembers;  // retained (first estimated_dimensionality picks)
  VolumeFunction volume;
  AbundanceMatrix abundances;
  ClassMap classes;
  int estimated_dimensionality = 0;
  int final_k_used = 0;
  std::filesystem::path out_dir;
  std::vector<std::pair<std::string, double>> timings_ms;
};

namespace detail {

inline std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& f : split_fields(s)) {
    const std::string t = trim(f);
    if (!t.empty()) out.push_back(static_cast<int>(parse_double(t)));
  }
  return out;
}

inline bool parse_bool(const std::string& s, const std::string& key) {
  const std::string v = lower_trim(s);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::runtime_error("config: bad boolean for " + key + ": '" + s + "'");
}

}  // namespace detail

inline std::string to_string(RmseSpace space) {
  return space == RmseSpace::reflectance ? "reflectance" : "ks";
}

inline RmseSpace rmse_space_from_string(const std::string& s) {
  const std::string v = detail::lower_trim(s);
  if (v == "reflectance") return RmseSpace::reflectance;
  if (v == "ks") return RmseSpace::ks;
  throw std::runtime_error("config: rmse_space must be 'reflectance' or 'ks', got '" + s + "'");
}

// Config file: `key = value` lines, '#' comments. Relative paths resolve
// against the config file's directory so a run is reviewable in place.
inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  const std::filesystem::path base = path.has_parent_path()
                                         ? path.parent_path()
                                         : std::filesystem::path(".");
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  PipelineConfig cfg;
  bool have_patch = false;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = detail::lower_trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) continue;

    if (key == "cube_header") cfg.cube_header = resolve(value);
    else if (key == "cube_data") cfg.cube_data = resolve(value);
    else if (key == "out_dir") cfg.out_dir = resolve(value);
    else if (key == "paper_pixel") {
      const auto v = detail::parse_int_list(value);
      if (v.size() != 2) throw std::runtime_error("config: paper_pixel wants 'row, col'");
      cfg.paper_pixel = {v[0], v[1]};
    } else if (key == "patch") {
      const auto v = detail::parse_int_list(value);
      if (v.size() != 4)
        throw std::runtime_error("config: patch wants 'row, col, height, width'");
      cfg.patch = Rect{v[0], v[1], v[2], v[3]};
      have_patch = true;
    } else if (key == "segment_k") cfg.segment_k = static_cast<int>(parse_double(value));
    else if (key == "pigment_clusters") cfg.pigment_clusters = detail::parse_int_list(value);
    else if (key == "m_max") cfg.m_max = static_cast<int>(parse_double(value));
    else if (key == "tau_vol") cfg.tau_vol = parse_double(value);
    else if (key == "final_k")
      cfg.final_k = detail::lower_trim(value) == "auto" ? 0
                                                        : static_cast<int>(parse_double(value));
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_double(value));
    else if (key == "paper_subtract") cfg.paper_subtract = detail::parse_bool(value, key);
    else if (key == "rmse_space") cfg.rmse_space = rmse_space_from_string(value);
    else if (key == "threads") cfg.threads = static_cast<unsigned>(parse_double(value));
    else throw std::runtime_error("config: unknown key '" + key + "' in " + path.string());
  }
  if (cfg.cube_header.empty() || cfg.cube_data.empty())
    throw std::runtime_error("config: cube_header and cube_data are required");
  if (!have_patch) throw std::runtime_error("config: patch is required");
  if (cfg.pigment_clusters.empty())
    throw std::runtime_error("config: pigment_clusters is required");
  return cfg;
}

inline std::vector<std::pair<std::string, std::string>> config_key_values(
    const PipelineConfig& cfg) {
  auto int_list = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(v[i]);
    }
    return s;
  };
  return {
      {"cube_header", cfg.cube_header.string()},
      {"cube_data", cfg.cube_data.string()},
      {"out_dir", cfg.out_dir.string()},
      {"paper_pixel", std::to_string(cfg.paper_pixel.first) + ", " +
                          std::to_string(cfg.paper_pixel.second)},
      {"patch", std::to_string(cfg.patch.row) + ", " + std::to_string(cfg.patch.col) + ", " +
                    std::to_string(cfg.patch.height) + ", " + std::to_string(cfg.patch.width)},
      {"segment_k", std::to_string(cfg.segment_k)},
      {"pigment_clusters", int_list(cfg.pigment_clusters)},
      {"m_max", std::to_string(cfg.m_max)},
      {"tau_vol", format_double(cfg.tau_vol)},
      {"final_k", cfg.final_k == 0 ? "auto" : std::to_string(cfg.final_k)},
      {"seed", std::to_string(cfg.seed)},
      {"paper_subtract", cfg.paper_subtract ? "true" : "false"},
      {"rmse_space", to_string(cfg.rmse_space)},
      {"threads", std::to_string(cfg.threads)},
  };
}

inline void save_config(const PipelineConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("config: cannot write " + path.string());
  for (const auto& [k, v] : config_key_values(cfg)) out << k << " = " << v << "\n";
}

inline void validate_config(const PipelineConfig& cfg, const SpectralCube& cube) {
  if (!cube.in_bounds(cfg.paper_pixel.first, cfg.paper_pixel.second))
    throw std::invalid_argument("config: paper_pixel (" +
                                std::to_string(cfg.paper_pixel.first) + "," +
                                std::to_string(cfg.paper_pixel.second) +
                                ") outside cube bounds " + std::to_string(cube.height) +
                                "x" + std::to_string(cube.width));
  require_rect_in_bounds(cfg.patch, cube.width, cube.height, "config: patch");
  if (cfg.segment_k < 1) throw std::invalid_argument("config: segment_k must be >= 1");
  for (int id : cfg.pigment_clusters)
    if (id < 0 || id >= cfg.segment_k)
      throw std::invalid_argument("config: pigment cluster " + std::to_string(id) +
                                  " does not exist (segment_k = " +
                                  std::to_string(cfg.segment_k) + ")");
  if (cfg.m_max < 2) throw std::invalid_argument("config: m_max must be >= 2");
  if (!(cfg.tau_vol > 0.0)) throw std::invalid_argument("config: tau_vol must be > 0");
  if (cfg.final_k < 0) throw std::invalid_argument("config: final_k must be >= 0");
}

inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  using clock = std::chrono::steady_clock;

  PipelineResult res;
  res.out_dir = cfg.out_dir;

  auto run_stage = [&](const std::string& name, auto&& fn) {
    const auto t0 = clock::now();
    try {
      fn();
    } catch (const std::exception& e) {
      throw std::runtime_error("stage " + name + ": " + e.what());
    }
    const double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    res.timings_ms.emplace_back(name, ms);
  };

  SpectralCube cube;
  run_stage("load", [&] {
    cube = read_envi(cfg.cube_header, cfg.cube_data);
    validate_config(cfg, cube);
    fs::create_directories(cfg.out_dir);
  });

  run_stage("segment", [&] {
    SegmentOptions opt;
    opt.patch = cfg.patch;
    opt.k = cfg.segment_k;
    opt.pigment_clusters = cfg.pigment_clusters;
    opt.seed = stage_seed(cfg.seed, "segment");
    opt.threads = cfg.threads;
    SegmentResult seg = segment(cube, opt);
    if (seg.mask.count() == 0)
      throw std::runtime_error("segmentation selected no pixels");
    write_mask_png(seg.mask, cfg.out_dir / "mask.png");
    write_png(seg.cluster_image, cfg.out_dir / "patch_clusters.png");
    res.mask = std::move(seg.mask);
  });

  run_stage("endmembers", [&] {
    const EndmemberSet all = maxd(cube, res.mask, cfg.m_max);
    res.volume = volume_function(all, cfg.tau_vol);
    res.estimated_dimensionality = res.volume.estimated_dimensionality;
    // The volume function truncates the MaxD ordering: only the first
    // estimated_dimensionality endmembers are retained for unmixing.
    const int keep = res.estimated_dimensionality;
    res.endmembers.spectra = all.spectra.topRows(keep);
    res.endmembers.sources.assign(all.sources.begin(), all.sources.begin() + keep);
    write_volume_csv(res.volume, cfg.out_dir / "volume.csv");
    write_endmembers_csv(res.endmembers, cube.wavelengths, cfg.out_dir / "endmembers.csv");
  });

  run_stage("unmix", [&] {
    const PaperSpectrum paper = PaperSpectrum::from_reflectance(
        cube.pixel(cfg.paper_pixel.first, cfg.paper_pixel.second));
    const KsCube ks = cube_to_ks(cube, res.mask, cfg.threads);
    Eigen::MatrixXd em_ks(res.endmembers.count(), cube.bands);
    for (int i = 0; i < res.endmembers.count(); ++i)
      em_ks.row(i) =
          reflectance_to_ks(Eigen::VectorXd(res.endmembers.spectra.row(i).transpose()))
              .transpose();
    UnmixOptions opt;
    opt.subtract_paper = cfg.paper_subtract;
    opt.threads = cfg.threads;
    res.abundances = unmix_cube(ks, em_ks, paper, res.mask, opt);
    write_abundances_csv(res.abundances, cfg.out_dir / "abundances.csv");
  });

  run_stage("classify", [&] {
    const Eigen::MatrixXd features = augment_abundances(res.abundances);
    res.final_k_used = cfg.final_k > 0 ? cfg.final_k : res.estimated_dimensionality;
    std::vector<int> labels =
        classify_pixels(features, res.final_k_used, stage_seed(cfg.seed, "classify"));
    labels = relabel_by_population(labels, res.final_k_used);
    res.classes = class_rmse(cube, res.mask, labels, cfg.rmse_space);
    write_class_png(res.classes, cfg.out_dir / "class.png");
    write_error_png(res.classes, cfg.out_dir / "error.png");
    write_class_means_csv(res.classes, cube.wavelengths, cfg.out_dir / "class_means.csv");
    write_labels_csv(res.classes, cfg.out_dir / "labels.csv");
  });

  run_stage("manifest", [&] {
    std::ofstream out(cfg.out_dir / "manifest.txt", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest");
    out << "tool = kmunmix " << KMU_VERSION << "\n";
    for (const auto& [k, v] : config_key_values(cfg)) out << k << " = " << v << "\n";
    out << "masked_pixels = " << res.mask.count() << "\n";
    out << "endmembers_extracted = " << cfg.m_max << "\n";
    out << "estimated_dimensionality = " << res.estimated_dimensionality << "\n";
    out << "endmembers_retained = " << res.endmembers.count() << "\n";
    out << "final_k_used = " << res.final_k_used << "\n";
    for (const auto& [name, ms] : res.timings_ms)
      out << "timing_" << name << "_ms = " << format_double(ms) << "\n";
    out << "artifacts = mask.png, patch_clusters.png, volume.csv, endmembers.csv, "
           "abundances.csv, class.png, error.png, error.png.scale.txt, "
           "class_means.csv, labels.csv, manifest.txt\n";
  });

  return res;
}

// Horizontal side-by-side crop-and-stitch of two rectangles (possibly from
// two cubes sharing the same band layout).
inline SpectralCube crop_stitch(const SpectralCube& left_cube, const Rect& left,
                                const SpectralCube& right_cube, const Rect& right) {
  require_rect_in_bounds(left, left_cube.width, left_cube.height, "crop_stitch: rect1");
  require_rect_in_bounds(right, right_cube.width, right_cube.height, "crop_stitch: rect2");
  if (left.height != right.height)
    throw std::invalid_argument("crop_stitch: rectangle heights differ (" +
                                std::to_string(left.height) + " vs " +
                                std::to_string(right.height) + ")");
  if (left_cube.bands != right_cube.bands ||
      left_cube.wavelengths != right_cube.wavelengths)
    throw std::invalid_argument("crop_stitch: cubes have different band layouts");

  const int w = left.width + right.width;
  const int h = left.height;
  const int bands = left_cube.bands;
  std::vector<double> data(static_cast<std::size_t>(w) * h * bands);
  for (int b = 0; b < bands; ++b)
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < left.width; ++c)
        data[(static_cast<std::size_t>(b) * h + r) * w + c] =
            left_cube.at(left.row + r, left.col + c, b);
      for (int c = 0; c < right.width; ++c)
        data[(static_cast<std::size_t>(b) * h + r) * w + left.width + c] =
            right_cube.at(right.row + r, right.col + c, b);
    }
  return SpectralCube(w, h, bands, left_cube.wavelengths, std::move(data));
}

}  // namespace kmu
