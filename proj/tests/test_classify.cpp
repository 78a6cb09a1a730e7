#include <catch2/catch_amalgamated.hpp>

#include "kmu/classify.hpp"
#include "kmu/rng.hpp"
#include "oracles.hpp"

using namespace kmu;

TEST_CASE("difference features on the three-endmember reference row") {
  Eigen::VectorXd a(3);
  a << 0.48, 0.49, 0.02;
  const Eigen::VectorXd d = difference_features(a);
  REQUIRE(d.size() == 3);
  CHECK(d[0] == Catch::Approx(0.01).margin(1e-12));
  CHECK(d[1] == Catch::Approx(0.46).margin(1e-12));
  CHECK(d[2] == Catch::Approx(0.47).margin(1e-12));
}

TEST_CASE("difference features degenerate cases") {
  SECTION("equal abundances give zeros") {
    Eigen::VectorXd a = Eigen::VectorXd::Constant(3, 0.2);
    CHECK(difference_features(a).isZero());
  }
  SECTION("two endmembers give one feature") {
    Eigen::VectorXd a(2);
    a << 1.0, 0.0;
    const Eigen::VectorXd d = difference_features(a);
    REQUIRE(d.size() == 1);
    CHECK(d[0] == 1.0);
  }
  SECTION("one endmember gives no features") {
    Eigen::VectorXd a(1);
    a << 0.7;
    CHECK(difference_features(a).size() == 0);
  }
}

TEST_CASE("difference features are sign-invariant and permutation-equivariant") {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::VectorXd a(4);
    for (int i = 0; i < 4; ++i) a[i] = rng.uniform01();
    const Eigen::VectorXd d = difference_features(a);
    // Sign invariance: |a_i - a_j| == |a_j - a_i|.
    int at = 0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) CHECK(d[at++] == std::abs(a[j] - a[i]));
    // Permutation equivariance: swapping abundances permutes the pairs.
    Eigen::VectorXd p = a;
    std::swap(p[0], p[1]);
    const Eigen::VectorXd dp = difference_features(p);
    CHECK(dp[0] == d[0]);              // (0,1) still |a0 - a1|
    CHECK(dp[1] == d[3]);              // (0,2) now |a1 - a2|
    CHECK(dp[2] == d[4]);              // (0,3) now |a1 - a3|
    CHECK(dp[3] == d[1]);
    CHECK(dp[4] == d[2]);
    CHECK(dp[5] == d[5]);
  }
}

TEST_CASE("augment concatenates abundances with their differences") {
  AbundanceMatrix ab;
  ab.values.resize(2, 3);
  ab.values.row(0) << 0.48, 0.49, 0.02;
  ab.values.row(1) << 0.0, 0.0, 0.0;
  ab.pixels = {{0, 0}, {0, 1}};
  const Eigen::MatrixXd f = augment_abundances(ab);
  REQUIRE(f.cols() == 6);
  CHECK(f(0, 0) == 0.48);
  CHECK(f(0, 1) == 0.49);
  CHECK(f(0, 2) == 0.02);
  CHECK(f(0, 3) == Catch::Approx(0.01).margin(1e-12));
  CHECK(f(0, 4) == Catch::Approx(0.46).margin(1e-12));
  CHECK(f(0, 5) == Catch::Approx(0.47).margin(1e-12));
  CHECK(f.row(1).isZero());

  SECTION("m = 1 keeps only the abundances") {
    AbundanceMatrix one;
    one.values.resize(2, 1);
    one.values << 0.5, 0.25;
    one.pixels = {{0, 0}, {0, 1}};
    CHECK(augment_abundances(one).cols() == 1);
  }
  SECTION("identical abundance rows produce identical features") {
    AbundanceMatrix two;
    two.values.resize(2, 3);
    two.values.row(0) << 0.2, 0.5, 0.3;
    two.values.row(1) << 0.2, 0.5, 0.3;
    two.pixels = {{0, 0}, {0, 1}};
    const Eigen::MatrixXd g = augment_abundances(two);
    CHECK((g.row(0).array() == g.row(1).array()).all());
  }
}

TEST_CASE("classify_pixels separates pure endmember populations") {
  Eigen::MatrixXd features(20, 2);
  std::vector<int> truth(20);
  for (int i = 0; i < 10; ++i) {
    features.row(i) << 1.0, 0.0;
    truth[i] = 0;
  }
  for (int i = 10; i < 20; ++i) {
    features.row(i) << 0.0, 1.0;
    truth[i] = 1;
  }
  const std::vector<int> labels = classify_pixels(features, 2, 3);
  CHECK(oracle::matched_accuracy(labels, truth, 2, 2, 20) == 1.0);

  SECTION("k = 1 labels everything alike") {
    const std::vector<int> ones = classify_pixels(features, 1, 3);
    for (int l : ones) CHECK(l == 0);
  }
}

TEST_CASE("relabel_by_population orders labels by size") {
  //                       0  0  1  1  1  2
  const std::vector<int> labels{0, 0, 1, 1, 1, 2};
  const std::vector<int> out = relabel_by_population(labels, 3);
  // class 1 (3 px) -> 0, class 0 (2 px) -> 1, class 2 (1 px) -> 2
  CHECK(out == std::vector<int>{1, 1, 0, 0, 0, 2});
}

namespace {

SpectralCube one_band_cube(const std::vector<double>& values) {
  return SpectralCube(static_cast<int>(values.size()), 1, 1, {550.0}, values);
}

}  // namespace

TEST_CASE("class_rmse hand computations") {
  SECTION("one band, two pixels 0.4 and 0.6") {
    const SpectralCube cube = one_band_cube({0.4, 0.6});
    const ClassMap map = class_rmse(cube, full_mask(2, 1), {0, 0});
    CHECK(map.class_means(0, 0) == Catch::Approx(0.5).margin(1e-15));
    CHECK(map.rmse_at(0, 0) == Catch::Approx(0.1).margin(1e-12));
    CHECK(map.rmse_at(0, 1) == Catch::Approx(0.1).margin(1e-12));
  }
  SECTION("identical pixels give exactly zero RMSE") {
    const SpectralCube cube = one_band_cube({0.1, 0.1, 0.1});
    const ClassMap map = class_rmse(cube, full_mask(3, 1), {0, 0, 0});
    for (int c = 0; c < 3; ++c) CHECK(map.rmse_at(0, c) == 0.0);
  }
  SECTION("pixels symmetric about the mean have equal rmse") {
    const SpectralCube cube(2, 1, 2, {500, 600}, {0.3, 0.5, 0.8, 0.6});
    const ClassMap map = class_rmse(cube, full_mask(2, 1), {0, 0});
    CHECK(map.rmse_at(0, 0) == Catch::Approx(map.rmse_at(0, 1)).epsilon(1e-12));
  }
  SECTION("empty class is an error naming the class") {
    const SpectralCube cube = one_band_cube({0.4, 0.6});
    try {
      class_rmse(cube, full_mask(2, 1), {0, 2});
      FAIL("expected empty-class error");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("class 1") != std::string::npos);
    }
  }
}

TEST_CASE("class means are exact per-band averages") {
  Rng rng(12);
  const int n = 24, bands = 7;
  std::vector<double> data(n * bands);
  for (auto& v : data) v = rng.uniform01();
  std::vector<double> wl(bands);
  for (int b = 0; b < bands; ++b) wl[b] = 400.0 + 10.0 * b;
  const SpectralCube cube(n, 1, bands, wl, data);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = static_cast<int>(rng.uniform_index(3));
  if (std::count(labels.begin(), labels.end(), 0) == 0) labels[0] = 0;
  if (std::count(labels.begin(), labels.end(), 1) == 0) labels[1] = 1;
  if (std::count(labels.begin(), labels.end(), 2) == 0) labels[2] = 2;

  const ClassMap map = class_rmse(cube, full_mask(n, 1), labels);
  // Mean-of-class property: residuals sum to zero per band.
  for (int cls = 0; cls < 3; ++cls) {
    Eigen::VectorXd resid = Eigen::VectorXd::Zero(bands);
    for (int i = 0; i < n; ++i)
      if (labels[i] == cls) resid += cube.pixel(0, i) - map.class_means.row(cls).transpose();
    CHECK(resid.lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("class_rmse is invariant to label renaming") {
  Rng rng(13);
  const int n = 16;
  std::vector<double> data(n * 2);
  for (auto& v : data) v = rng.uniform01();
  const SpectralCube cube(n, 1, 2, {500, 600}, data);
  std::vector<int> labels(n), renamed(n);
  for (int i = 0; i < n; ++i) {
    labels[i] = i % 2;
    renamed[i] = 1 - labels[i];
  }
  const ClassMap a = class_rmse(cube, full_mask(n, 1), labels);
  const ClassMap b = class_rmse(cube, full_mask(n, 1), renamed);
  for (int i = 0; i < n; ++i)
    CHECK(a.rmse_at(0, i) == Catch::Approx(b.rmse_at(0, i)).margin(1e-15));
  CHECK((a.class_means.row(0).array() == b.class_means.row(1).array()).all());
}

TEST_CASE("class_rmse in K/S space transforms before averaging") {
  const SpectralCube cube = one_band_cube({0.5, 0.5});
  const ClassMap map = class_rmse(cube, full_mask(2, 1), {0, 0}, RmseSpace::ks);
  CHECK(map.class_means(0, 0) == Catch::Approx(0.25).margin(1e-12));  // ks of 0.5
  CHECK(map.rmse_at(0, 0) == 0.0);
}
