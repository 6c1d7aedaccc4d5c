#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "volrank/matperturb.hpp"
#include "volrank/rng.hpp"

using namespace volrank;

namespace {

Eigen::MatrixXd random_matrix(int d, std::uint64_t seed,
                              std::uint64_t stream) {
  RandomStream s(seed, stream);
  Eigen::MatrixXd M(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      M(i, j) = s.normal_at(static_cast<std::uint64_t>(i * d + j));
  return M;
}

// Independent oracle: the mixture sums are, up to index reversal, the
// coefficients of the polynomial t -> det(A + t B).  Evaluate that
// determinant at d+1 symmetric nodes and solve the Vandermonde system; no
// subset enumeration is involved.
std::vector<double> poly_coeffs_by_interpolation(const Eigen::MatrixXd& A,
                                                 const Eigen::MatrixXd& B) {
  const int d = static_cast<int>(A.rows());
  Eigen::MatrixXd V(d + 1, d + 1);
  Eigen::VectorXd rhs(d + 1);
  for (int k = 0; k <= d; ++k) {
    const double t = -0.5 * d + k;  // symmetric nodes, spacing 1
    double p = 1.0;
    for (int m = 0; m <= d; ++m) {
      V(k, m) = p;  // t^m multiplies gamma_{d-m}
      p *= t;
    }
    rhs(k) = (A + t * B).determinant();
  }
  const Eigen::VectorXd q = V.fullPivLu().solve(rhs);
  std::vector<double> coeffs(static_cast<std::size_t>(d) + 1);
  for (int r = 0; r <= d; ++r)
    coeffs[static_cast<std::size_t>(r)] = q(d - r);
  return coeffs;
}

}  // namespace

TEST_CASE("hand-checked 2x2 mixture sums", "[matperturb]") {
  Eigen::MatrixXd A(2, 2), B(2, 2);
  A << 1, 0, 0, 0;
  B = Eigen::MatrixXd::Identity(2, 2);
  CHECK(gamma_r(A, B, 0) == Catch::Approx(1.0).margin(1e-15));
  CHECK(gamma_r(A, B, 1) == Catch::Approx(1.0).margin(1e-15));
  CHECK(gamma_r(A, B, 2) == Catch::Approx(0.0).margin(1e-15));

  // Generic entries: the single-column mixtures written out by hand.
  A << 2, -1, 3, 5;
  B << 7, 0.5, -4, 6;
  const double expect_r1 = (2 * 6 - 0.5 * 3) + (7 * 5 - (-1) * (-4));
  CHECK(gamma_r(A, B, 1) == Catch::Approx(expect_r1).epsilon(1e-13));
  CHECK(gamma_r(A, B, 0) == Catch::Approx(B.determinant()).epsilon(1e-13));
  CHECK(gamma_r(A, B, 2) == Catch::Approx(A.determinant()).epsilon(1e-13));
}

TEST_CASE("out-of-range orders contribute nothing", "[matperturb]") {
  const Eigen::MatrixXd A = random_matrix(3, 11, 0);
  const Eigen::MatrixXd B = random_matrix(3, 11, 1);
  CHECK(gamma_r(A, B, -1) == 0.0);
  CHECK(gamma_r(A, B, 4) == 0.0);
  CHECK(gamma_prime_r(A, B, B, -1) == 0.0);
  CHECK(gamma_prime_r(A, B, B, 3) == 0.0);  // no slot left for the C column
}

TEST_CASE("interpolation oracle confirms every coefficient", "[matperturb]") {
  for (int d = 1; d <= 5; ++d) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const Eigen::MatrixXd A = random_matrix(d, seed, 0);
      const Eigen::MatrixXd B = random_matrix(d, seed, 1);
      const auto oracle = poly_coeffs_by_interpolation(A, B);
      for (int r = 0; r <= d; ++r) {
        const double got = gamma_r(A, B, r);
        CHECK_THAT(got, Catch::Matchers::WithinAbs(
                            oracle[static_cast<std::size_t>(r)],
                            1e-8 * std::max(1.0, std::abs(got))));
      }
    }
  }
}

TEST_CASE("column symmetry and homogeneity", "[matperturb]") {
  for (int d = 1; d <= 5; ++d) {
    const Eigen::MatrixXd A = random_matrix(d, 21 + static_cast<std::uint64_t>(d), 0);
    const Eigen::MatrixXd B = random_matrix(d, 21 + static_cast<std::uint64_t>(d), 1);
    for (int r = 0; r <= d; ++r) {
      const double g = gamma_r(A, B, r);
      // Swapping the roles of A and B mirrors the order.
      CHECK(gamma_r(B, A, d - r) == Catch::Approx(g).margin(1e-10));
      // Each term carries exactly r columns of A.
      const double scale = 1.7;
      CHECK(gamma_r(scale * A, B, r) ==
            Catch::Approx(std::pow(scale, r) * g).margin(1e-10));
    }
  }
}

TEST_CASE("three-way sums contract to two-way sums", "[matperturb]") {
  for (int d = 1; d <= 4; ++d) {
    const Eigen::MatrixXd A = random_matrix(d, 31 + static_cast<std::uint64_t>(d), 0);
    const Eigen::MatrixXd B = random_matrix(d, 31 + static_cast<std::uint64_t>(d), 1);
    for (int r = 0; r < d; ++r) {
      // Substituting B for the distinguished column counts the B-slots.
      CHECK(gamma_prime_r(A, B, B, r) ==
            Catch::Approx((d - r) * gamma_r(A, B, r)).margin(1e-10));
      // Substituting A promotes the subset and counts its members.
      CHECK(gamma_prime_r(A, B, A, r) ==
            Catch::Approx((r + 1) * gamma_r(A, B, r + 1)).margin(1e-10));
    }
  }
}

TEST_CASE("expansion reproduces det(A + t B) at arbitrary t", "[matperturb]") {
  for (int d = 1; d <= 5; ++d) {
    const Eigen::MatrixXd A = random_matrix(d, 41 + static_cast<std::uint64_t>(d), 0);
    const Eigen::MatrixXd B = random_matrix(d, 41 + static_cast<std::uint64_t>(d), 1);
    const auto c = det_poly_coefficients(A, B);
    REQUIRE(c.size() == static_cast<std::size_t>(d) + 1);
    for (int r = 0; r <= d; ++r)
      CHECK(c[static_cast<std::size_t>(r)] == gamma_r(A, B, r));
    RandomStream ts(97, static_cast<std::uint64_t>(d));
    for (int k = 0; k < 8; ++k) {
      const double t = 4.0 * ts.uniform_at(static_cast<std::uint64_t>(k)) - 2.0;
      double p = 0.0, mag = 0.0;
      for (int r = 0; r <= d; ++r) {
        const double term =
            std::pow(t, d - r) * c[static_cast<std::size_t>(r)];
        p += term;
        mag += std::abs(term);
      }
      const double direct = (A + t * B).determinant();
      CHECK_THAT(p, Catch::Matchers::WithinAbs(direct, 1e-10 * std::max(1.0, mag)));
    }
  }
}

TEST_CASE("ratio probe reads off the rank deficiency", "[matperturb]") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 3);
  A(0, 0) = 1.0;
  A(1, 1) = 1.0;  // rank 2, so the small-lambda ratio tends to 2^(3-2) = 2
  std::vector<double> errs;
  for (std::uint64_t seed = 0; seed < 200; ++seed)
    errs.push_back(std::abs(rank_ratio_probe(A, 1e-4, seed) - 2.0));
  std::nth_element(errs.begin(), errs.begin() + 100, errs.end());
  CHECK(errs[100] < 0.02);

  // Full-rank identity: ratio tends to 2^0 = 1.
  std::vector<double> errs_full;
  for (std::uint64_t seed = 0; seed < 200; ++seed)
    errs_full.push_back(
        std::abs(rank_ratio_probe(Eigen::MatrixXd::Identity(3, 3), 1e-4, seed) -
                 1.0));
  std::nth_element(errs_full.begin(), errs_full.begin() + 100, errs_full.end());
  CHECK(errs_full[100] < 0.02);

  CHECK_THROWS_AS(rank_ratio_probe(A, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(rank_ratio_probe(A, -1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(rank_ratio_probe(Eigen::MatrixXd::Zero(2, 3), 1e-4, 1),
                  std::invalid_argument);
}

TEST_CASE("shape validation", "[matperturb]") {
  const Eigen::MatrixXd A = random_matrix(3, 1, 0);
  const Eigen::MatrixXd B2 = random_matrix(2, 1, 1);
  CHECK_THROWS_AS(gamma_r(A, B2, 1), std::invalid_argument);
  CHECK_THROWS_AS(gamma_r(Eigen::MatrixXd::Zero(2, 3), A, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(gamma_prime_r(A, A, B2, 1), std::invalid_argument);
}
