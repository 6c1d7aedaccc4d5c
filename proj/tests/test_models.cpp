#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "volrank/models.hpp"

using namespace volrank;

TEST_CASE("zoo declares the rank the scan finds", "[models]") {
  const int expected_rank[3][4] = {
      {1, 0, 1, 1},  // d = 1
      {2, 0, 1, 1},  // d = 2
      {3, 0, 1, 2},  // d = 3
  };
  for (int d = 1; d <= 3; ++d) {
    for (int id = 1; id <= 4; ++id) {
      const ModelSpec m = model_zoo(d, id);  // make_model re-scans internally
      CHECK(m.d == d);
      CHECK(m.q == d);
      CHECK(m.true_max_rank == expected_rank[d - 1][id - 1]);
      CHECK(m.label == "d" + std::to_string(d) + "m" + std::to_string(id));
      CHECK(m.noise_cov.isApprox(0.0005 *
                                 Eigen::MatrixXd::Identity(d, d)));
    }
  }
}

TEST_CASE("label lookup round trips and rejects junk", "[models]") {
  for (int d = 1; d <= 3; ++d) {
    for (int id = 1; id <= 4; ++id) {
      const std::string label =
          "d" + std::to_string(d) + "m" + std::to_string(id);
      CHECK(model_by_label(label).label == label);
    }
  }
  CHECK_THROWS_AS(model_by_label("d4m1"), std::invalid_argument);
  CHECK_THROWS_AS(model_by_label("d1m5"), std::invalid_argument);
  CHECK_THROWS_AS(model_by_label("x1m1"), std::invalid_argument);
  CHECK_THROWS_AS(model_by_label(""), std::invalid_argument);
  CHECK_THROWS_AS(model_by_label("d1m1x"), std::invalid_argument);
}

TEST_CASE("coefficient values at pinned times", "[models]") {
  constexpr double two_pi = 2.0 * std::numbers::pi_v<double>;

  SECTION("switching volatility is exclusive") {
    const ModelSpec m = model_zoo(2, 3);
    Eigen::MatrixXd s(2, 2);
    m.vol(0.25, s);
    CHECK(s(0, 0) == 1.0);
    CHECK(s(1, 1) == 0.0);
    m.vol(0.75, s);
    CHECK(s(0, 0) == 0.0);
    CHECK(s(1, 1) == 1.0);
    Eigen::VectorXd b(2);
    m.drift(0.3, b);
    CHECK(b(0) == 1.0);
    CHECK(b(1) == -1.0);
  }

  SECTION("oscillating model keeps duplicated columns") {
    const ModelSpec m = model_zoo(3, 4);
    Eigen::MatrixXd s(3, 3);
    m.vol(0.1, s);
    CHECK(s.col(0) == s.col(1));
    CHECK(s(0, 0) == Catch::Approx(std::cos(two_pi * 0.1)));
    CHECK(s(1, 0) == Catch::Approx(std::sin(two_pi * 0.1)));
    CHECK(s(2, 2) == 1.0);
    CHECK(s(2, 0) == 0.0);
    // Covolatility rank is 2 everywhere: duplicated pair + unit column.
    const Eigen::MatrixXd c = s * s.transpose();
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(c);
    int rank = 0;
    for (int i = 0; i < 3; ++i)
      if (svd.singularValues()(i) > 1e-10) ++rank;
    CHECK(rank == 2);
  }

  SECTION("scalar oscillating model") {
    const ModelSpec m = model_zoo(1, 4);
    Eigen::MatrixXd s(1, 1);
    m.vol(0.0, s);
    CHECK(s(0, 0) == 1.0);
    Eigen::VectorXd b(1);
    m.drift(0.25, b);
    CHECK(b(0) == Catch::Approx(2.0));
  }
}

TEST_CASE("validation rejects inconsistent specs", "[models]") {
  ModelSpec base = model_zoo(2, 1);

  SECTION("declared rank contradicting the scan") {
    ModelSpec bad = base;
    bad.true_max_rank = 1;
    CHECK_THROWS_WITH(make_model(bad),
                      Catch::Matchers::ContainsSubstring("rank scan"));
  }
  SECTION("asymmetric noise covariance") {
    ModelSpec bad = base;
    bad.noise_cov(0, 1) = 0.1;
    CHECK_THROWS_AS(make_model(bad), std::invalid_argument);
  }
  SECTION("indefinite noise covariance") {
    ModelSpec bad = base;
    bad.noise_cov = -0.001 * Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(make_model(bad), std::invalid_argument);
  }
  SECTION("wrong noise dimensions") {
    ModelSpec bad = base;
    bad.noise_cov = Eigen::MatrixXd::Identity(3, 3);
    CHECK_THROWS_AS(make_model(bad), std::invalid_argument);
  }
  SECTION("missing coefficients") {
    ModelSpec bad = base;
    bad.vol = nullptr;
    CHECK_THROWS_AS(make_model(bad), std::invalid_argument);
  }
  SECTION("zoo bounds") {
    CHECK_THROWS_AS(model_zoo(0, 1), std::invalid_argument);
    CHECK_THROWS_AS(model_zoo(4, 1), std::invalid_argument);
    CHECK_THROWS_AS(model_zoo(1, 0), std::invalid_argument);
    CHECK_THROWS_AS(model_zoo(1, 5), std::invalid_argument);
  }
}

TEST_CASE("perturbation configuration", "[models]") {
  const PerturbationConfig p = PerturbationConfig::scaled_identity(3);
  CHECK(p.sigma_tilde.isApprox(2.0 * Eigen::MatrixXd::Identity(3, 3)));
  CHECK_NOTHROW(p.validate(3));
  CHECK_THROWS_AS(p.validate(2), std::invalid_argument);

  PerturbationConfig bad{Eigen::MatrixXd::Zero(2, 2)};
  CHECK_THROWS_AS(bad.validate(2), std::invalid_argument);  // not PD
  bad.sigma_tilde = Eigen::MatrixXd::Identity(2, 2);
  bad.sigma_tilde(0, 1) = 0.5;  // asymmetric
  CHECK_THROWS_AS(bad.validate(2), std::invalid_argument);
  CHECK_THROWS_AS(PerturbationConfig::scaled_identity(0),
                  std::invalid_argument);
  CHECK_THROWS_AS(PerturbationConfig::scaled_identity(2, -1.0),
                  std::invalid_argument);
}
