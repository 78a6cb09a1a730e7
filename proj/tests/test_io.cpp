#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "kmu/csv.hpp"
#include "kmu/envi.hpp"
#include "kmu/image.hpp"
#include "kmu/rng.hpp"
#include "oracles.hpp"

using namespace kmu;
namespace fs = std::filesystem;

namespace {

// Random cube whose values are exactly representable in float32 (the
// at-rest precision), so disk round trips can be compared bit for bit.
SpectralCube random_cube(Rng& rng, int w, int h, int b) {
  std::vector<double> wl(b);
  for (int i = 0; i < b; ++i) wl[i] = 400.0 + 5.0 * i;
  std::vector<double> data(static_cast<std::size_t>(w) * h * b);
  for (auto& v : data) v = static_cast<float>(rng.uniform(0.0, 1.2));
  return SpectralCube(w, h, b, wl, data);
}

}  // namespace

TEST_CASE("ENVI fixture with known bytes reads back as the reference layout") {
  const auto dir = oracle::make_temp_dir("envi_fixture");
  // 2x2x3 BSQ float32, hand-written.
  std::vector<float> raw;
  for (int band = 0; band < 3; ++band)
    for (int pix = 0; pix < 4; ++pix) raw.push_back(band + 0.25f * pix);
  {
    std::ofstream f(dir / "c.raw", std::ios::binary);
    f.write(reinterpret_cast<const char*>(raw.data()), raw.size() * 4);
  }
  {
    std::ofstream f(dir / "c.hdr", std::ios::binary);
    f << "ENVI\nsamples = 2\nlines = 2\nbands = 3\nheader offset = 0\n"
         "data type = 4\ninterleave = bsq\nbyte order = 0\n"
         "wavelength = { 400, 500, 600 }\n";
  }
  const SpectralCube cube = read_envi(dir / "c.hdr", dir / "c.raw");
  REQUIRE(cube.width == 2);
  REQUIRE(cube.height == 2);
  REQUIRE(cube.bands == 3);
  CHECK(cube.at(0, 0, 0) == 0.0);
  CHECK(cube.at(0, 1, 0) == 0.25);
  CHECK(cube.at(1, 0, 1) == 1.5);
  CHECK(cube.at(1, 1, 2) == 2.75);
  fs::remove_all(dir);
}

TEST_CASE("ENVI round trip is bit-exact for all three interleaves") {
  const auto dir = oracle::make_temp_dir("envi_rt");
  Rng rng(5);
  for (const Interleave il : {Interleave::bsq, Interleave::bil, Interleave::bip}) {
    const SpectralCube cube = random_cube(rng, 4, 3, 5);
    write_envi(cube, dir / "t.hdr", dir / "t.raw", il);
    const SpectralCube back = read_envi(dir / "t.hdr", dir / "t.raw");
    CHECK(back.data == cube.data);
    CHECK(back.wavelengths == cube.wavelengths);
    CHECK(back.width == cube.width);
    CHECK(back.height == cube.height);
  }
  // The three interleaves decode to the identical cube.
  const SpectralCube cube = random_cube(rng, 3, 2, 4);
  write_envi(cube, dir / "a.hdr", dir / "a.raw", Interleave::bsq);
  write_envi(cube, dir / "b.hdr", dir / "b.raw", Interleave::bil);
  const SpectralCube a = read_envi(dir / "a.hdr", dir / "a.raw");
  const SpectralCube b = read_envi(dir / "b.hdr", dir / "b.raw");
  CHECK(a.data == b.data);
  fs::remove_all(dir);
}

TEST_CASE("ENVI float64 storage preserves doubles exactly") {
  const auto dir = oracle::make_temp_dir("envi_f64");
  Rng rng(6);
  std::vector<double> data(12);
  for (auto& v : data) v = rng.uniform01();
  const SpectralCube cube(2, 2, 3, {400, 500, 600}, data);
  write_envi(cube, dir / "t.hdr", dir / "t.raw", Interleave::bsq, 5);
  CHECK(read_envi(dir / "t.hdr", dir / "t.raw").data == cube.data);
  fs::remove_all(dir);
}

TEST_CASE("ENVI degenerate 1x1x1 cube round trips") {
  const auto dir = oracle::make_temp_dir("envi_tiny");
  const SpectralCube cube(1, 1, 1, {550}, {0.5});
  write_envi(cube, dir / "t.hdr", dir / "t.raw");
  CHECK(fs::file_size(dir / "t.raw") == 4);
  CHECK(read_envi(dir / "t.hdr", dir / "t.raw").data == cube.data);
  fs::remove_all(dir);
}

TEST_CASE("ENVI errors carry context") {
  const auto dir = oracle::make_temp_dir("envi_err");
  const SpectralCube cube = [&] {
    Rng rng(9);
    return random_cube(rng, 2, 2, 2);
  }();
  write_envi(cube, dir / "t.hdr", dir / "t.raw");

  SECTION("truncated data file reports expected vs actual byte count") {
    fs::resize_file(dir / "t.raw", 10);
    try {
      read_envi(dir / "t.hdr", dir / "t.raw");
      FAIL("expected size mismatch");
    } catch (const std::exception& e) {
      const std::string msg = e.what();
      CHECK(msg.find("32") != std::string::npos);  // expected bytes
      CHECK(msg.find("10") != std::string::npos);  // actual bytes
    }
  }
  SECTION("unsupported data type lists the supported codes") {
    std::ofstream f(dir / "t.hdr", std::ios::binary);
    f << "ENVI\nsamples = 2\nlines = 2\nbands = 2\ndata type = 2\ninterleave = bsq\n"
         "byte order = 0\nwavelength = { 400, 500 }\n";
    f.close();
    try {
      read_envi(dir / "t.hdr", dir / "t.raw");
      FAIL("expected unsupported data type");
    } catch (const std::exception& e) {
      const std::string msg = e.what();
      CHECK(msg.find("4") != std::string::npos);
      CHECK(msg.find("5") != std::string::npos);
    }
  }
  SECTION("writing to an empty path fails") {
    CHECK_THROWS(write_envi(cube, "", ""));
  }
  fs::remove_all(dir);
}

TEST_CASE("nearest band selection breaks ties toward the lower wavelength") {
  const std::vector<double> wl = {649.1, 650.9};
  CHECK(nearest_band(wl, 650.0) == 0);
  // Order independence: shuffled wavelength lists give the same wavelength.
  const std::vector<double> shuffled = {650.9, 649.1};
  CHECK(shuffled[nearest_band(shuffled, 650.0)] == wl[nearest_band(wl, 650.0)]);
}

TEST_CASE("render_rgb scales, clamps and rounds") {
  SECTION("constant 0.5 cube renders mid gray, 127.5 rounds up") {
    const SpectralCube cube(2, 2, 3, {450, 550, 650}, std::vector<double>(12, 0.5));
    const ImageU8 img = render_rgb(cube);
    for (int ch = 0; ch < 3; ++ch) CHECK(img.at(0, 0, ch) == 128);
  }
  SECTION("reflectance above 1 clamps to 255") {
    const SpectralCube cube(1, 1, 3, {450, 550, 650}, {1.2, 1.2, 1.2});
    const ImageU8 img = render_rgb(cube);
    CHECK(img.at(0, 0, 0) == 255);
  }
  SECTION("out-of-range wavelength names the channel") {
    const SpectralCube cube(1, 1, 2, {500, 600}, {0.5, 0.5});
    try {
      render_rgb(cube, 650.0, 550.0, 520.0);
      FAIL("expected error");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("red") != std::string::npos);
    }
  }
}

TEST_CASE("mask PNG round trips (1-bit, black = selected)") {
  const auto dir = oracle::make_temp_dir("mask_png");
  Rng rng(13);
  PixelMask mask(9, 5);  // width not a multiple of 8 exercises bit packing
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 9; ++c) mask.set(r, c, rng.uniform01() < 0.5);
  write_mask_png(mask, dir / "m.png");
  const PixelMask back = read_mask_png(dir / "m.png");
  CHECK(back.selected == mask.selected);
  fs::remove_all(dir);
}

TEST_CASE("class PNG uses the palette and white background") {
  const auto dir = oracle::make_temp_dir("class_png");
  ClassMap map;
  map.width = 2;
  map.height = 1;
  map.labels = {0, -1};
  map.rmse = {0.0, 0.0};
  map.class_means = Eigen::MatrixXd::Zero(2, 3);

  write_class_png(map, dir / "c.png");
  const ImageU8 img = read_png(dir / "c.png");
  REQUIRE(img.channels == 3);
  CHECK(img.at(0, 0, 0) == kClassPalette[0][0]);
  CHECK(img.at(0, 0, 1) == kClassPalette[0][1]);
  CHECK(img.at(0, 1, 0) == 255);
  CHECK(img.at(0, 1, 1) == 255);
  CHECK(img.at(0, 1, 2) == 255);

  SECTION("17 classes exceed the palette") {
    map.class_means = Eigen::MatrixXd::Zero(17, 3);
    try {
      write_class_png(map, dir / "d.png");
      FAIL("expected palette error");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("palette") != std::string::npos);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("error PNG normalizes to the max RMSE with a scale sidecar") {
  const auto dir = oracle::make_temp_dir("error_png");
  ClassMap map;
  map.width = 3;
  map.height = 1;
  map.labels = {0, 0, 0};
  map.class_means = Eigen::MatrixXd::Zero(1, 2);

  SECTION("single hot pixel maps to 255") {
    map.rmse = {0.0, 0.4, 0.0};
    write_error_png(map, dir / "e.png");
    const ImageU8 img = read_png(dir / "e.png");
    CHECK(img.at(0, 0, 0) == 0);
    CHECK(img.at(0, 1, 0) == 255);
    std::ifstream side(dir / "e.png.scale.txt");
    std::string text((std::istreambuf_iterator<char>(side)),
                     std::istreambuf_iterator<char>());
    CHECK(text.find("scale = 637.5") != std::string::npos);
  }
  SECTION("uniform RMSE renders uniform 255") {
    map.rmse = {0.2, 0.2, 0.2};
    write_error_png(map, dir / "u.png");
    const ImageU8 img = read_png(dir / "u.png");
    for (int c = 0; c < 3; ++c) CHECK(img.at(0, c, 0) == 255);
  }
  SECTION("all-zero RMSE renders black with a scale-0 note") {
    map.rmse = {0.0, 0.0, 0.0};
    write_error_png(map, dir / "z.png");
    const ImageU8 img = read_png(dir / "z.png");
    for (int c = 0; c < 3; ++c) CHECK(img.at(0, c, 0) == 0);
    std::ifstream side(dir / "z.png.scale.txt");
    std::string text((std::istreambuf_iterator<char>(side)),
                     std::istreambuf_iterator<char>());
    CHECK(text.find("scale = 0") != std::string::npos);
    CHECK(text.find("note") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("CSV writes header plus rows and round trips exactly") {
  const auto dir = oracle::make_temp_dir("csv");
  SECTION("identity 2x2 gives a 3-line file") {
    CsvTable t;
    t.columns = {"a", "b"};
    t.rows = {{1, 0}, {0, 1}};
    write_csv(t, dir / "i.csv");
    std::ifstream in(dir / "i.csv");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  }
  SECTION("empty table is header only") {
    CsvTable t;
    t.columns = {"x", "y", "z"};
    write_csv(t, dir / "e.csv");
    const CsvTable back = read_csv(dir / "e.csv");
    CHECK(back.columns == t.columns);
    CHECK(back.rows.empty());
  }
  SECTION("round trip parse equality at full precision") {
    Rng rng(21);
    CsvTable t;
    t.columns = {"v", "w"};
    for (int i = 0; i < 40; ++i)
      t.rows.push_back({rng.normal() * std::pow(10.0, rng.uniform(-8, 8)), rng.uniform01()});
    write_csv(t, dir / "p.csv");
    const CsvTable back = read_csv(dir / "p.csv");
    REQUIRE(back.rows.size() == t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      CHECK(back.rows[i][0] == t.rows[i][0]);
      CHECK(back.rows[i][1] == t.rows[i][1]);
    }
  }
  fs::remove_all(dir);
}
