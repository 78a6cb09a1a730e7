#include <catch2/catch_amalgamated.hpp>

#include "kmu/nnls.hpp"
#include "kmu/rng.hpp"
#include "oracles.hpp"

using namespace kmu;

TEST_CASE("nnls clips negativity through the constraint") {
  const Eigen::MatrixXd c = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd d(2);
  d << 3.0, -1.0;
  const Eigen::VectorXd y = nnls(c, d);
  CHECK(y[0] == Catch::Approx(3.0).margin(1e-12));
  CHECK(y[1] == 0.0);
}

TEST_CASE("nnls solves an already-feasible single column") {
  Eigen::MatrixXd c(2, 1);
  c << 1.0, 1.0;
  Eigen::VectorXd d(2);
  d << 1.0, 2.0;
  const Eigen::VectorXd y = nnls(c, d);
  CHECK(y[0] == Catch::Approx(1.5).margin(1e-12));
}

TEST_CASE("nnls matches brute-force enumeration on random instances") {
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const int bands = 1 + static_cast<int>(rng.uniform_index(6));
    const int m = 1 + static_cast<int>(rng.uniform_index(3));
    Eigen::MatrixXd c(bands, m);
    Eigen::VectorXd d(bands);
    for (int i = 0; i < c.size(); ++i) c.data()[i] = rng.normal();
    for (int i = 0; i < d.size(); ++i) d[i] = rng.normal();
    bool zero_col = false;
    for (int j = 0; j < m; ++j) zero_col |= c.col(j).norm() == 0.0;
    if (zero_col) continue;

    const Eigen::VectorXd y = nnls(c, d);
    const auto ref = oracle::nnls_bruteforce(c, d);
    CHECK((c * y - d).squaredNorm() <= ref.objective + 1e-8);
    CHECK(oracle::nnls_kkt_ok(c, d, y));
  }
}

TEST_CASE("nnls local perturbation cannot improve the residual") {
  Rng rng(88);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd c(6, 3);
    Eigen::VectorXd d(6);
    for (int i = 0; i < c.size(); ++i) c.data()[i] = std::abs(rng.normal());
    for (int i = 0; i < d.size(); ++i) d[i] = std::abs(rng.normal());
    const Eigen::VectorXd y = nnls(c, d);
    const double base = (c * y - d).norm();
    for (int j = 0; j < 3; ++j) {
      if (y[j] <= 0.0) continue;
      for (const double delta : {1e-4, -1e-4}) {
        Eigen::VectorXd y2 = y;
        y2[j] = std::max(0.0, y2[j] + delta);
        CHECK(base <= (c * y2 - d).norm() + 1e-8);
      }
    }
  }
}

TEST_CASE("nnls error paths") {
  SECTION("all-zero column names the endmember") {
    Eigen::MatrixXd c(2, 2);
    c << 1.0, 0.0, 1.0, 0.0;
    Eigen::VectorXd d(2);
    d << 1.0, 1.0;
    try {
      nnls(c, d);
      FAIL("expected zero-column error");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("endmember 1") != std::string::npos);
    }
  }
  SECTION("iteration cap produces residual diagnostics") {
    Eigen::MatrixXd c(2, 2);
    c << 1.0, 0.5, 0.2, 1.0;
    Eigen::VectorXd d(2);
    d << 1.0, 1.0;
    NnlsOptions opt;
    opt.max_outer_factor = 0;  // force the cap immediately
    try {
      nnls(c, d, opt);
      FAIL("expected iteration cap error");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("residual") != std::string::npos);
    }
  }
  SECTION("dimension mismatch") {
    Eigen::MatrixXd c(3, 1);
    c.setOnes();
    Eigen::VectorXd d(2);
    d.setOnes();
    CHECK_THROWS_AS(nnls(c, d), std::invalid_argument);
  }
}

TEST_CASE("nnls handles zero right-hand side") {
  Eigen::MatrixXd c(3, 2);
  c << 1, 2, 3, 4, 5, 6;
  const Eigen::VectorXd y = nnls(c, Eigen::VectorXd::Zero(3));
  CHECK(y.isZero());
}
