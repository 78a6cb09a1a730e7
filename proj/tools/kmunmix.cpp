// kmunmix: pigment-diversity mapping for hyperspectral reflectance cubes.
//
// Subcommands cover the full workflow (synth, crop-stitch, segment,
// endmembers, unmix, classify, pipeline); each standalone stage consumes the
// previous stage's file artifacts and reproduces the matching slice of a
// full `pipeline` run exactly, given the same root seed.

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "kmu/artifacts.hpp"
#include "kmu/classify.hpp"
#include "kmu/csv.hpp"
#include "kmu/dimensionality.hpp"
#include "kmu/envi.hpp"
#include "kmu/image.hpp"
#include "kmu/pipeline.hpp"
#include "kmu/segment.hpp"
#include "kmu/synth.hpp"
#include "kmu/unmix.hpp"
#include "kmu/version.hpp"

namespace fs = std::filesystem;

namespace {

kmu::Rect parse_rect(const std::vector<int>& v, const std::string& name) {
  if (v.size() != 4)
    throw std::invalid_argument(name + " wants four integers: row col height width");
  return kmu::Rect{v[0], v[1], v[2], v[3]};
}

std::pair<int, int> parse_pixel(const std::vector<int>& v, const std::string& name) {
  if (v.size() != 2) throw std::invalid_argument(name + " wants two integers: row col");
  return {v[0], v[1]};
}

void write_spectra_csv(const Eigen::MatrixXd& spectra, const std::string& index_name,
                       const std::vector<double>& wavelengths, const fs::path& path) {
  kmu::CsvTable t;
  t.columns = {index_name};
  for (const auto& c : kmu::band_columns(wavelengths)) t.columns.push_back(c);
  for (int i = 0; i < spectra.rows(); ++i) {
    std::vector<double> row;
    row.push_back(i);
    for (int b = 0; b < spectra.cols(); ++b) row.push_back(spectra(i, b));
    t.rows.push_back(std::move(row));
  }
  kmu::write_csv(t, path);
}

int run_synth(const fs::path& out_dir, const kmu::SynthParams& params) {
  fs::create_directories(out_dir);
  const kmu::SyntheticScene scene = kmu::synth_scene(params);
  kmu::write_envi(scene.cube, out_dir / "scene.hdr", out_dir / "scene.raw");
  kmu::write_mask_png(scene.true_mask, out_dir / "true_mask.png");
  kmu::write_abundances_csv(scene.true_abundances, out_dir / "true_abundances.csv");

  kmu::CsvTable labels;
  labels.columns = {"row", "col", "label"};
  for (const auto& [r, c] : scene.true_abundances.pixels)
    labels.rows.push_back({static_cast<double>(r), static_cast<double>(c),
                           static_cast<double>(scene.label_at(r, c))});
  kmu::write_csv(labels, out_dir / "true_labels.csv");

  write_spectra_csv(scene.endmembers, "pigment", scene.cube.wavelengths,
                    out_dir / "true_endmembers.csv");
  write_spectra_csv(scene.paper.transpose(), "paper", scene.cube.wavelengths,
                    out_dir / "paper.csv");

  std::ofstream info(out_dir / "info.txt", std::ios::binary);
  info << "paper_pixel = " << scene.paper_pixel.first << ", " << scene.paper_pixel.second
       << "\n";
  info << "n_pigments = " << params.n_pigments << "\n";
  info << "width = " << params.width << "\nheight = " << params.height << "\n";
  info << "bands = " << params.bands << "\n";
  info << "noise_sigma = " << kmu::format_double(params.noise_sigma) << "\n";
  info << "seed = " << params.seed << "\n";
  info << "masked_pixels = " << scene.true_mask.count() << "\n";

  std::cout << "synth: wrote " << (out_dir / "scene.hdr").string() << " ("
            << params.width << "x" << params.height << "x" << params.bands << ", "
            << scene.true_mask.count() << " pigment pixels)\n";
  return 0;
}

int run_segment(const fs::path& header, const fs::path& data, const kmu::Rect& patch,
                int k, const std::vector<int>& designate, std::uint64_t seed,
                unsigned threads, bool pooled, const fs::path& out_mask,
                const fs::path& out_clusters) {
  const kmu::SpectralCube cube = kmu::read_envi(header, data);

  kmu::SegmentOptions opt;
  opt.patch = patch;
  opt.k = k;
  opt.seed = kmu::stage_seed(seed, "segment");
  opt.threads = threads;
  opt.mdc.pooled = pooled;

  if (designate.empty()) {
    // Preview mode: cluster the patch, report cluster statistics, and write
    // the cluster image so the user can pick pigment clusters.
    kmu::require_rect_in_bounds(patch, cube.width, cube.height, "segment");
    const kmu::ImageU8 rgb = kmu::render_rgb(cube);
    const kmu::ImageU8 patch_rgb = kmu::crop(rgb, patch);
    const Eigen::MatrixXd features = kmu::lab_xy_features(patch_rgb);
    const kmu::KmeansResult km = kmu::kmeans(features, k, opt.seed);
    kmu::write_png(kmu::cluster_mean_image(patch_rgb, km.labels, k), out_clusters);

    std::vector<int> counts(k, 0);
    for (int l : km.labels) ++counts[l];
    std::cout << "cluster  pixels  share      L        a        b\n";
    for (int c = 0; c < k; ++c) {
      std::cout << std::setw(7) << c << std::setw(8) << counts[c] << std::setw(7)
                << std::fixed << std::setprecision(3)
                << static_cast<double>(counts[c]) / km.labels.size() << std::setw(9)
                << std::setprecision(2) << km.centroids(c, 0) << std::setw(9)
                << km.centroids(c, 1) << std::setw(9) << km.centroids(c, 2) << "\n";
    }
    std::cout << "segment: wrote " << out_clusters.string()
              << "; rerun with --designate to produce the mask\n";
    return 0;
  }

  opt.pigment_clusters = designate;
  const kmu::SegmentResult res = kmu::segment(cube, opt);
  kmu::write_mask_png(res.mask, out_mask);
  kmu::write_png(res.cluster_image, out_clusters);
  std::cout << "segment: mask selects " << res.mask.count() << " of "
            << cube.pixel_count() << " pixels -> " << out_mask.string() << "\n";
  return 0;
}

int run_endmembers(const fs::path& header, const fs::path& data, const fs::path& mask_path,
                   int m_max, double tau, const fs::path& out_endmembers,
                   const fs::path& out_volume) {
  const kmu::SpectralCube cube = kmu::read_envi(header, data);
  const kmu::PixelMask mask = kmu::read_mask_png(mask_path);
  const kmu::EndmemberSet all = kmu::maxd(cube, mask, m_max);
  const kmu::VolumeFunction vf = kmu::volume_function(all, tau);
  kmu::EndmemberSet retained;
  retained.spectra = all.spectra.topRows(vf.estimated_dimensionality);
  retained.sources.assign(all.sources.begin(),
                          all.sources.begin() + vf.estimated_dimensionality);
  kmu::write_volume_csv(vf, out_volume);
  kmu::write_endmembers_csv(retained, cube.wavelengths, out_endmembers);
  std::cout << "endmembers: extracted " << m_max << ", estimated dimensionality "
            << vf.estimated_dimensionality << ", retained "
            << vf.estimated_dimensionality << " -> " << out_endmembers.string() << "\n";
  return 0;
}

int run_unmix(const fs::path& header, const fs::path& data, const fs::path& mask_path,
              const fs::path& endmembers_path, const std::pair<int, int>& paper_pixel,
              bool paper_subtract, unsigned threads, const fs::path& out) {
  const kmu::SpectralCube cube = kmu::read_envi(header, data);
  const kmu::PixelMask mask = kmu::read_mask_png(mask_path);
  const kmu::EndmemberSet endmembers = kmu::read_endmembers_csv(endmembers_path, cube);
  const kmu::PaperSpectrum paper = kmu::PaperSpectrum::from_reflectance(
      cube.pixel(paper_pixel.first, paper_pixel.second));
  const kmu::KsCube ks = kmu::cube_to_ks(cube, mask, threads);
  Eigen::MatrixXd em_ks(endmembers.count(), cube.bands);
  for (int i = 0; i < endmembers.count(); ++i)
    em_ks.row(i) = kmu::reflectance_to_ks(
                       Eigen::VectorXd(endmembers.spectra.row(i).transpose()))
                       .transpose();
  kmu::UnmixOptions opt;
  opt.subtract_paper = paper_subtract;
  opt.threads = threads;
  const kmu::AbundanceMatrix ab = kmu::unmix_cube(ks, em_ks, paper, mask, opt);
  kmu::write_abundances_csv(ab, out);
  std::cout << "unmix: " << ab.pixel_count() << " pixels x " << ab.endmember_count()
            << " endmembers -> " << out.string() << "\n";
  return 0;
}

int run_classify(const fs::path& header, const fs::path& data, const fs::path& mask_path,
                 const fs::path& abundances_path, int k, std::uint64_t seed,
                 const std::string& rmse_space, const fs::path& out_dir) {
  const kmu::SpectralCube cube = kmu::read_envi(header, data);
  const kmu::PixelMask mask = kmu::read_mask_png(mask_path);
  const kmu::AbundanceMatrix ab = kmu::read_abundances_csv(abundances_path);
  if (ab.pixels != kmu::masked_pixel_coords(mask))
    throw std::runtime_error("classify: abundance rows do not match the mask's pixels");
  fs::create_directories(out_dir);
  const Eigen::MatrixXd features = kmu::augment_abundances(ab);
  std::vector<int> labels =
      kmu::classify_pixels(features, k, kmu::stage_seed(seed, "classify"));
  labels = kmu::relabel_by_population(labels, k);
  const kmu::ClassMap map =
      kmu::class_rmse(cube, mask, labels, kmu::rmse_space_from_string(rmse_space));
  kmu::write_class_png(map, out_dir / "class.png");
  kmu::write_error_png(map, out_dir / "error.png");
  kmu::write_class_means_csv(map, cube.wavelengths, out_dir / "class_means.csv");
  kmu::write_labels_csv(map, out_dir / "labels.csv");
  std::cout << "classify: " << k << " classes -> " << (out_dir / "class.png").string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kubelka-Munk pigment diversity mapping for hyperspectral cubes"};
  app.set_version_flag("--version", std::string("kmunmix ") + KMU_VERSION);
  app.require_subcommand(1);

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene with ground truth");
  std::string synth_out = "synth_out";
  kmu::SynthParams sp;
  std::string mix_style = "pair";
  synth->add_option("--out-dir", synth_out, "Output directory")->required();
  synth->add_option("--pigments", sp.n_pigments, "Number of pigments");
  synth->add_option("--width", sp.width, "Scene width");
  synth->add_option("--height", sp.height, "Scene height");
  synth->add_option("--bands", sp.bands, "Spectral bands");
  synth->add_option("--noise-sigma", sp.noise_sigma, "Gaussian reflectance noise stdev");
  synth->add_option("--seed", sp.seed, "Random seed");
  synth->add_option("--mixed-blocks", sp.mixed_blocks, "Mixed blocks (-1: one per pigment)");
  synth->add_option("--mix-style", mix_style, "pair or dirichlet")
      ->check(CLI::IsMember({"pair", "dirichlet"}));
  synth->add_option("--alpha", sp.dirichlet_alpha, "Dirichlet concentration");
  synth->add_option("--pair-min", sp.pair_min, "Min dominant share in pair mixes");
  synth->add_option("--pair-max", sp.pair_max, "Max dominant share in pair mixes");
  synth->add_option("--sum-min", sp.sum_min, "Min total abundance in mixes");
  synth->add_option("--sum-max", sp.sum_max, "Max total abundance in mixes");
  synth->add_option("--level-min", sp.pigment_level_min, "Min masstone mean reflectance");
  synth->add_option("--level-max", sp.pigment_level_max, "Max masstone mean reflectance");
  synth->add_option("--pigment-floor", sp.pigment_floor, "Lowest masstone reflectance");
  synth->add_option("--volume-target", sp.volume_target,
                    "Pin the normalized Gram volume of paper+masstones (0 = off)");

  // ---- crop-stitch ----
  auto* cs = app.add_subcommand("crop-stitch",
                                "Crop two rectangles and stitch them side by side");
  std::string cs_header, cs_data, cs_header2, cs_data2, cs_out_header, cs_out_data;
  std::vector<int> cs_rect1, cs_rect2;
  cs->add_option("--header", cs_header, "ENVI header")->required();
  cs->add_option("--data", cs_data, "ENVI data file")->required();
  cs->add_option("--header2", cs_header2, "Second cube header (default: first cube)");
  cs->add_option("--data2", cs_data2, "Second cube data");
  cs->add_option("--rect1", cs_rect1, "row col height width")->expected(4)->required();
  cs->add_option("--rect2", cs_rect2, "row col height width")->expected(4)->required();
  cs->add_option("--out-header", cs_out_header, "Output header path")->required();
  cs->add_option("--out-data", cs_out_data, "Output data path")->required();

  // ---- segment ----
  auto* seg = app.add_subcommand("segment", "K-means + Mahalanobis pigment segmentation");
  std::string seg_header, seg_data, seg_out_mask = "mask.png",
              seg_out_clusters = "clusters.png";
  std::vector<int> seg_patch, seg_designate;
  int seg_k = 4;
  std::uint64_t seg_seed = 0;
  unsigned seg_threads = 1;
  bool seg_pooled = false;
  seg->add_option("--header", seg_header, "ENVI header")->required();
  seg->add_option("--data", seg_data, "ENVI data file")->required();
  seg->add_option("--patch", seg_patch, "Training patch: row col height width")
      ->expected(4)
      ->required();
  seg->add_option("--k", seg_k, "Cluster count");
  seg->add_option("--designate", seg_designate,
                  "Cluster ids treated as pigment (omit for preview)");
  seg->add_option("--seed", seg_seed, "Root seed");
  seg->add_option("--threads", seg_threads, "Worker threads (0 = all cores)");
  seg->add_flag("--pooled-covariance", seg_pooled, "Pool class covariances");
  seg->add_option("--out-mask", seg_out_mask, "Mask PNG path");
  seg->add_option("--out-clusters", seg_out_clusters, "Cluster preview PNG path");

  // ---- endmembers ----
  auto* em = app.add_subcommand("endmembers",
                                "MaxD extraction + Gram volume dimensionality");
  std::string em_header, em_data, em_mask, em_out = "endmembers.csv",
              em_out_volume = "volume.csv";
  int em_m_max = 18;
  double em_tau = kmu::kDefaultVolumeTau;
  em->add_option("--header", em_header, "ENVI header")->required();
  em->add_option("--data", em_data, "ENVI data file")->required();
  em->add_option("--mask", em_mask, "Mask PNG (black = selected)")->required();
  em->add_option("--m-max", em_m_max, "Endmembers to extract");
  em->add_option("--tau-vol", em_tau, "Volume threshold for dimensionality");
  em->add_option("--out-endmembers", em_out, "Endmember CSV path");
  em->add_option("--out-volume", em_out_volume, "Volume function CSV path");

  // ---- unmix ----
  auto* um = app.add_subcommand("unmix", "NNLS unmixing in K/S space");
  std::string um_header, um_data, um_mask, um_endmembers, um_out = "abundances.csv";
  std::vector<int> um_paper;
  bool um_no_subtract = false;
  unsigned um_threads = 1;
  um->add_option("--header", um_header, "ENVI header")->required();
  um->add_option("--data", um_data, "ENVI data file")->required();
  um->add_option("--mask", um_mask, "Mask PNG")->required();
  um->add_option("--endmembers", um_endmembers, "Endmember CSV")->required();
  um->add_option("--paper-pixel", um_paper, "Bare paper pixel: row col")
      ->expected(2)
      ->required();
  um->add_flag("--no-paper-subtract", um_no_subtract,
               "Unmix raw K/S without paper subtraction");
  um->add_option("--threads", um_threads, "Worker threads (0 = all cores)");
  um->add_option("--out", um_out, "Abundance CSV path");

  // ---- classify ----
  auto* cl = app.add_subcommand("classify",
                                "Difference-augmented K-means + RMSE error map");
  std::string cl_header, cl_data, cl_mask, cl_abundances, cl_rmse_space = "reflectance",
              cl_out_dir = ".";
  int cl_k = 0;
  std::uint64_t cl_seed = 0;
  cl->add_option("--header", cl_header, "ENVI header")->required();
  cl->add_option("--data", cl_data, "ENVI data file")->required();
  cl->add_option("--mask", cl_mask, "Mask PNG")->required();
  cl->add_option("--abundances", cl_abundances, "Abundance CSV")->required();
  cl->add_option("--k", cl_k, "Final class count")->required();
  cl->add_option("--seed", cl_seed, "Root seed");
  cl->add_option("--rmse-space", cl_rmse_space, "reflectance or ks")
      ->check(CLI::IsMember({"reflectance", "ks"}));
  cl->add_option("--out-dir", cl_out_dir, "Output directory");

  // ---- pipeline ----
  auto* pl = app.add_subcommand("pipeline", "Run the full workflow from a config file");
  std::string pl_config;
  std::string pl_out_dir, pl_rmse_space;
  std::vector<int> pl_patch, pl_designate, pl_paper;
  int pl_final_k = -1, pl_m_max = -1, pl_segment_k = -1;
  double pl_tau = -1.0;
  std::int64_t pl_seed = -1;
  int pl_threads = -1;
  bool pl_no_subtract = false;
  pl->add_option("--config", pl_config, "Config file (key = value lines)")->required();
  pl->add_option("--out-dir", pl_out_dir, "Override out_dir");
  pl->add_option("--seed", pl_seed, "Override seed");
  pl->add_option("--threads", pl_threads, "Override threads");
  pl->add_option("--final-k", pl_final_k, "Override final_k (0 = auto)");
  pl->add_option("--m-max", pl_m_max, "Override m_max");
  pl->add_option("--segment-k", pl_segment_k, "Override segment_k");
  pl->add_option("--tau-vol", pl_tau, "Override tau_vol");
  pl->add_option("--patch", pl_patch, "Override patch: row col height width")->expected(4);
  pl->add_option("--designate", pl_designate, "Override pigment clusters");
  pl->add_option("--paper-pixel", pl_paper, "Override paper pixel: row col")->expected(2);
  pl->add_flag("--no-paper-subtract", pl_no_subtract, "Disable paper subtraction");
  pl->add_option("--rmse-space", pl_rmse_space, "Override rmse_space")
      ->check(CLI::IsMember({"reflectance", "ks"}));

  CLI11_PARSE(app, argc, argv);

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (synth->parsed()) {
      sp.mix_style = mix_style == "pair" ? kmu::MixStyle::pair : kmu::MixStyle::dirichlet;
      return run_synth(synth_out, sp);
    }
    if (cs->parsed()) {
      const kmu::SpectralCube a = kmu::read_envi(cs_header, cs_data);
      const kmu::SpectralCube b = cs_header2.empty() ? a : kmu::read_envi(cs_header2, cs_data2);
      const kmu::SpectralCube out = kmu::crop_stitch(a, parse_rect(cs_rect1, "--rect1"), b,
                                                     parse_rect(cs_rect2, "--rect2"));
      kmu::write_envi(out, cs_out_header, cs_out_data);
      std::cout << "crop-stitch: wrote " << out.height << "x" << out.width << " cube -> "
                << cs_out_header << "\n";
      return 0;
    }
    if (seg->parsed())
      return run_segment(seg_header, seg_data, parse_rect(seg_patch, "--patch"), seg_k,
                         seg_designate, seg_seed, seg_threads, seg_pooled, seg_out_mask,
                         seg_out_clusters);
    if (em->parsed())
      return run_endmembers(em_header, em_data, em_mask, em_m_max, em_tau, em_out,
                            em_out_volume);
    if (um->parsed())
      return run_unmix(um_header, um_data, um_mask, um_endmembers,
                       parse_pixel(um_paper, "--paper-pixel"), !um_no_subtract, um_threads,
                       um_out);
    if (cl->parsed())
      return run_classify(cl_header, cl_data, cl_mask, cl_abundances, cl_k, cl_seed,
                          cl_rmse_space, cl_out_dir);
    if (pl->parsed()) {
      kmu::PipelineConfig cfg = kmu::load_config(pl_config);
      if (!pl_out_dir.empty()) cfg.out_dir = pl_out_dir;
      if (pl_seed >= 0) cfg.seed = static_cast<std::uint64_t>(pl_seed);
      if (pl_threads >= 0) cfg.threads = static_cast<unsigned>(pl_threads);
      if (pl_final_k >= 0) cfg.final_k = pl_final_k;
      if (pl_m_max >= 0) cfg.m_max = pl_m_max;
      if (pl_segment_k >= 0) cfg.segment_k = pl_segment_k;
      if (pl_tau > 0.0) cfg.tau_vol = pl_tau;
      if (!pl_patch.empty()) cfg.patch = parse_rect(pl_patch, "--patch");
      if (!pl_designate.empty()) cfg.pigment_clusters = pl_designate;
      if (!pl_paper.empty()) cfg.paper_pixel = parse_pixel(pl_paper, "--paper-pixel");
      if (pl_no_subtract) cfg.paper_subtract = false;
      if (!pl_rmse_space.empty()) cfg.rmse_space = kmu::rmse_space_from_string(pl_rmse_space);

      const kmu::PipelineResult res = kmu::run_pipeline(cfg);
      std::cout << "pipeline: mask " << res.mask.count() << " px, dimensionality "
                << res.estimated_dimensionality << ", final k " << res.final_k_used
                << ", artifacts in " << res.out_dir.string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "kmunmix " << cmd << ": error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
