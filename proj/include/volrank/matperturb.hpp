#pragma once

// Column-mixture determinant expansions.  For d x d matrices A and B,
//
//   gamma_r(A,B) = sum over r-subsets S of {1..d} of det(M_S),
//
// where M_S takes its columns from A on S and from B elsewhere (columns stay
// in place).  Expanding det(A + t B) column by column gives the exact
// polynomial identity
//
//   det(A + t B) = sum_{r=0}^{d} t^{d-r} gamma_r(A,B),
//
// so for A positive semidefinite of rank r and B positive definite, the ratio
// det(A + 2t B) / det(A + t B) approaches 2^{d-r} as t -> 0.  That ratio is
// what turns determinants of noisy covolatility blocks into a rank readout.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "volrank/common.hpp"
#include "volrank/rng.hpp"

namespace volrank {

namespace detail {

inline void require_square_same(const Eigen::MatrixXd& A,
                                const Eigen::MatrixXd& B, const char* who) {
  if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
    throw std::invalid_argument(std::string(who) +
                                ": matrices must be square and equally sized");
  if (A.rows() < 1)
    throw std::invalid_argument(std::string(who) + ": empty matrix");
}

// Visits every r-subset of {0..d-1} in lexicographic order.
template <typename Visitor>
void for_each_subset(int d, int r, Visitor&& visit) {
  std::vector<int> idx(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (;;) {
    visit(idx);
    int i = r - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == d - r + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < r; ++j)
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

}  // namespace detail

// Sum of det over all ways of taking r columns from A and d-r from B.
// Out-of-range r (including the r = -1 convention) contributes nothing.
inline double gamma_r(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                      int r) {
  detail::require_square_same(A, B, "gamma_r");
  const int d = static_cast<int>(A.rows());
  if (r < 0 || r > d) return 0.0;
  if (r == 0) return B.determinant();
  if (r == d) return A.determinant();
  CompensatedSum acc;
  Eigen::MatrixXd M(d, d);
  detail::for_each_subset(d, r, [&](const std::vector<int>& sel) {
    M = B;
    for (int j : sel) M.col(j) = A.col(j);
    acc.add(M.determinant());
  });
  return acc.value();
}

// Three-way variant: r columns from A, exactly one from C, the rest from B.
// Vanishes by convention at r = d (no slot left for the C column).
inline double gamma_prime_r(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                            const Eigen::MatrixXd& C, int r) {
  detail::require_square_same(A, B, "gamma_prime_r");
  detail::require_square_same(A, C, "gamma_prime_r");
  const int d = static_cast<int>(A.rows());
  if (r < 0 || r >= d) return 0.0;
  CompensatedSum acc;
  Eigen::MatrixXd M(d, d);
  std::vector<char> in_sel(static_cast<std::size_t>(d));
  detail::for_each_subset(d, r, [&](const std::vector<int>& sel) {
    std::fill(in_sel.begin(), in_sel.end(), char{0});
    for (int j : sel) in_sel[static_cast<std::size_t>(j)] = 1;
    for (int k = 0; k < d; ++k) {
      if (in_sel[static_cast<std::size_t>(k)]) continue;
      M = B;
      for (int j : sel) M.col(j) = A.col(j);
      M.col(k) = C.col(k);
      acc.add(M.determinant());
    }
  });
  return acc.value();
}

// Coefficients c[r] = gamma_r(A,B) of det(A + t B) = sum_r t^{d-r} c[r],
// self-checked against direct determinant evaluations at d+1 probe points.
// A check failure means an internal inconsistency and throws.
inline std::vector<double> det_poly_coefficients(const Eigen::MatrixXd& A,
                                                 const Eigen::MatrixXd& B) {
  detail::require_square_same(A, B, "det_poly_coefficients");
  const int d = static_cast<int>(A.rows());
  std::vector<double> c(static_cast<std::size_t>(d) + 1);
  for (int r = 0; r <= d; ++r) c[static_cast<std::size_t>(r)] = gamma_r(A, B, r);
  const double base = 1.0 + A.norm() + B.norm();
  for (int k = 0; k <= d; ++k) {
    const double t = 0.5 + k;
    double p = 0.0;
    for (int r = 0; r <= d; ++r)
      p += std::pow(t, d - r) * c[static_cast<std::size_t>(r)];
    const double direct = (A + t * B).determinant();
    const double tol =
        1e-9 * std::pow(base * std::max(1.0, t), d) * (d + 1);
    if (!(std::abs(p - direct) <= tol))
      throw std::logic_error(
          "det_poly_coefficients: expansion disagrees with direct determinant");
  }
  return c;
}

// Evaluates det(A + 2 lambda B) / det(A + lambda B) for a random Gaussian
// perturbation B drawn from (seed).  For A >= 0 with rank r the value
// approaches 2^(d-r) as lambda -> 0.  A vanishing denominator (degenerate
// draw) is reported rather than returned as infinity.
inline double rank_ratio_probe(const Eigen::MatrixXd& A, double lambda,
                               std::uint64_t seed) {
  if (A.rows() != A.cols() || A.rows() < 1)
    throw std::invalid_argument("rank_ratio_probe: matrix must be square");
  if (!(lambda > 0.0))
    throw std::invalid_argument("rank_ratio_probe: lambda must be positive");
  const int d = static_cast<int>(A.rows());
  RandomStream stream(seed, 0);
  Eigen::MatrixXd B(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      B(i, j) = stream.normal_at(static_cast<std::uint64_t>(i) *
                                     static_cast<std::uint64_t>(d) +
                                 static_cast<std::uint64_t>(j));
  const double denom = (A + lambda * B).determinant();
  if (denom == 0.0)
    throw std::runtime_error("rank_ratio_probe: degenerate draw (zero denominator)");
  const double ratio = (A + 2.0 * lambda * B).determinant() / denom;
  if (!std::isfinite(ratio))
    throw std::runtime_error("rank_ratio_probe: non-finite ratio");
  return ratio;
}

}  // namespace volrank
