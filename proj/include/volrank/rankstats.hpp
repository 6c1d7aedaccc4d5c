#pragma once

// Rank statistics from perturbed, pre-averaged blocks.
//
// For kappa in {1,2} let Z^kappa = Y + sqrt(kappa u_n) X' and let f(M) =
// det(M)^2.  Writing f^kappa_i for f of the main-layout block matrix of round
// i (kappa = 1 uses weight g, kappa = 2 uses weight h), the statistics are
//
//   S1 = 3 d u_n sum_i f^1_i,          S2 = 3 d u_n sum_i f^2_i,
//   V11 = 9 d^2 u_n sum_i (f^1_i)^2,   V22 = 9 d^2 u_n sum_i (f^2_i)^2,
//   V12 = 9 d^2 u_n sum_i f^1_i f^2_i,         i = 0 .. [T/(3 d u_n)] - 1.
//
// Both S statistics scale like (kappa u_n)^(d - R), so their ratio exposes the
// maximal rank:  Rhat = d - log(S2/S1)/log 2.  The plug-in variance of Rhat is
//
//   V = (V11 + 4^(Rhat-d) V22 - 2^(1+Rhat-d) V12) / (S1 log 2)^2,
//
// with a same-weight difference statistic V' as fallback when cancellation
// drives the combined estimate nonpositive:
//
//   V'raw = 3 d^2 u_n sum_{i<[T/(2 d u_n)]} (f^1_{A,i} - f^1_{B,i})^2,
//   V'    = 2 V'raw / (S1 log 2)^2,
//
// where the A/B blocks of round i start at (2 i d + j - 1) k_n and
// (2 i d + d + j - 1) k_n.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "volrank/common.hpp"
#include "volrank/preavg.hpp"
#include "volrank/simulate.hpp"
#include "volrank/weights.hpp"

namespace volrank {

// Raised when a realization carries no usable signal (e.g. an S statistic or
// every variance estimate is nonpositive, so neither the rank readout nor its
// standardization exists).
struct DegenerateStatistic : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class VarianceMode { Combined, Prime };

struct RankTestReport {
  int d = 0;
  double delta_n = 0.0, T = 0.0, theta = 0.0;
  int k_n = 0;
  double u_n = 0.0;
  std::int64_t n_blocks = 0;

  double S1 = 0.0, S2 = 0.0;
  double r_hat = 0.0;
  int r_hat_int = 0;
  double V11 = 0.0, V22 = 0.0, V12 = 0.0;
  double V_combined = 0.0;
  double V_prime = 0.0;
  bool used_fallback = false;
  double V_used = 0.0;
  std::map<int, double> standardized;  // r -> (r_hat - r)/sqrt(u_n V_used)
};

// (r_hat - r), standardized by the estimated asymptotic scale.
inline double standardized_gap(double r_hat, int r, double V, double u_n) {
  if (!(V > 0.0))
    throw std::domain_error("standardized_gap: variance must be positive");
  if (!(u_n > 0.0))
    throw std::domain_error("standardized_gap: u_n must be positive");
  return (r_hat - r) / std::sqrt(u_n * V);
}

// Rounds the continuous readout to an integer rank estimate: clamp to the
// admissible range, then round half to even.
inline int integer_rank(double r_hat, int d) {
  const double clamped = std::clamp(r_hat, 0.0, static_cast<double>(d));
  return static_cast<int>(std::nearbyint(clamped));
}

// Main statistic alone (used by tests and exploratory runs).
inline double s_statistic(const Eigen::MatrixXd& series,
                          const PreAvgPlan& plan,
                          const std::vector<double>& samples, int kappa,
                          double T) {
  const int d = static_cast<int>(series.rows());
  const std::int64_t n_blocks = floor_snap(T / (3.0 * d * plan.u_n));
  if (n_blocks < 1)
    throw std::invalid_argument("s_statistic: series too short for one block");
  CompensatedSum acc;
  for (std::int64_t i = 0; i < n_blocks; ++i) {
    const double det = block_matrix(series, plan, samples, kappa, i).determinant();
    acc.add(det * det);
  }
  return 3.0 * d * plan.u_n * acc.value();
}

// Fallback variance statistic V'raw (same weight, same kappa = 1).
inline double v_prime_raw(const Eigen::MatrixXd& series, const PreAvgPlan& plan,
                          const std::vector<double>& samples, double T) {
  const int d = static_cast<int>(series.rows());
  const std::int64_t n_pairs = floor_snap(T / (2.0 * d * plan.u_n));
  if (n_pairs < 1)
    throw std::invalid_argument("v_prime_raw: series too short for one pair");
  std::vector<std::int64_t> starts_a(static_cast<std::size_t>(d));
  std::vector<std::int64_t> starts_b(static_cast<std::size_t>(d));
  CompensatedSum acc;
  for (std::int64_t i = 0; i < n_pairs; ++i) {
    for (int j = 0; j < d; ++j) {
      starts_a[static_cast<std::size_t>(j)] = (2 * i * d + j) * plan.k_n;
      starts_b[static_cast<std::size_t>(j)] = ((2 * i + 1) * d + j) * plan.k_n;
    }
    const double det_a =
        scaled_block(series, samples, 1, plan.u_n, starts_a).determinant();
    const double det_b =
        scaled_block(series, samples, 1, plan.u_n, starts_b).determinant();
    const double diff = det_a * det_a - det_b * det_b;
    acc.add(diff * diff);
  }
  return 3.0 * d * d * plan.u_n * acc.value();
}

// Full per-path evaluation: statistics, rank readout, variance estimates and
// standardized gaps for every candidate rank.
inline RankTestReport compute_report(
    const PathDataset& path, const WeightFunction& g, const WeightFunction& h,
    double theta, std::optional<int> override_k = std::nullopt,
    VarianceMode mode = VarianceMode::Combined) {
  const int d = path.dim();
  const PreAvgPlan plan = make_plan(path.delta_n, theta, override_k);

  RankTestReport rep;
  rep.d = d;
  rep.delta_n = path.delta_n;
  rep.T = path.T;
  rep.theta = theta;
  rep.k_n = plan.k_n;
  rep.u_n = plan.u_n;
  rep.n_blocks = floor_snap(path.T / (3.0 * d * plan.u_n));
  if (rep.n_blocks < 1)
    throw std::invalid_argument(
        "compute_report: series too short for one block (n_blocks = 0)");

  const std::vector<double> gs = sample_grid(g, plan.k_n);
  const std::vector<double> hs = sample_grid(h, plan.k_n);
  const Eigen::MatrixXd Z1 = perturbed_series(path, 1, plan.u_n);
  const Eigen::MatrixXd Z2 = perturbed_series(path, 2, plan.u_n);

  CompensatedSum s1, s2, v11, v22, v12;
  for (std::int64_t i = 0; i < rep.n_blocks; ++i) {
    const double det1 = block_matrix(Z1, plan, gs, 1, i).determinant();
    const double det2 = block_matrix(Z2, plan, hs, 2, i).determinant();
    const double f1 = det1 * det1;
    const double f2 = det2 * det2;
    s1.add(f1);
    s2.add(f2);
    v11.add(f1 * f1);
    v22.add(f2 * f2);
    v12.add(f1 * f2);
  }
  rep.S1 = 3.0 * d * plan.u_n * s1.value();
  rep.S2 = 3.0 * d * plan.u_n * s2.value();
  rep.V11 = 9.0 * d * d * plan.u_n * v11.value();
  rep.V22 = 9.0 * d * d * plan.u_n * v22.value();
  rep.V12 = 9.0 * d * d * plan.u_n * v12.value();

  if (!(rep.S1 > 0.0) || !(rep.S2 > 0.0))
    throw DegenerateStatistic(
        "compute_report: nonpositive S statistic (S1 = " +
        std::to_string(rep.S1) + ", S2 = " + std::to_string(rep.S2) + ")");

  const double log2 = std::log(2.0);
  rep.r_hat = d - std::log(rep.S2 / rep.S1) / log2;
  rep.r_hat_int = integer_rank(rep.r_hat, d);

  const double denom = rep.S1 * rep.S1 * log2 * log2;
  rep.V_combined = (rep.V11 + std::pow(4.0, rep.r_hat - d) * rep.V22 -
                    std::pow(2.0, 1.0 + rep.r_hat - d) * rep.V12) /
                   denom;
  rep.V_prime = 2.0 * v_prime_raw(Z1, plan, gs, path.T) / denom;

  rep.used_fallback = (mode == VarianceMode::Prime) || !(rep.V_combined > 0.0);
  rep.V_used = rep.used_fallback ? rep.V_prime : rep.V_combined;
  if (!(rep.V_used > 0.0))
    throw DegenerateStatistic(
        "compute_report: no positive variance estimate available");

  for (int r = 0; r <= d; ++r)
    rep.standardized[r] = standardized_gap(rep.r_hat, r, rep.V_used, plan.u_n);
  return rep;
}

inline nlohmann::json report_to_json(const RankTestReport& r) {
  nlohmann::json j{{"d", r.d},
                   {"delta_n", r.delta_n},
                   {"T", r.T},
                   {"theta", r.theta},
                   {"k_n", r.k_n},
                   {"u_n", r.u_n},
                   {"n_blocks", r.n_blocks},
                   {"S1", r.S1},
                   {"S2", r.S2},
                   {"r_hat", r.r_hat},
                   {"r_hat_int", r.r_hat_int},
                   {"V11", r.V11},
                   {"V22", r.V22},
                   {"V12", r.V12},
                   {"V_combined", r.V_combined},
                   {"V_prime", r.V_prime},
                   {"used_fallback", r.used_fallback},
                   {"V_used", r.V_used}};
  nlohmann::json z = nlohmann::json::object();
  for (const auto& [rr, val] : r.standardized) z[std::to_string(rr)] = val;
  j["standardized"] = z;
  return j;
}

inline std::string report_to_csv(const RankTestReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "d,delta_n,T,theta,k_n,u_n,n_blocks,S1,S2,r_hat,r_hat_int,V11,V22,V12,"
        "V_combined,V_prime,used_fallback,V_used";
  for (const auto& [rr, val] : r.standardized) os << ",z_r" << rr;
  os << '\n';
  os << r.d << ',' << r.delta_n << ',' << r.T << ',' << r.theta << ','
     << r.k_n << ',' << r.u_n << ',' << r.n_blocks << ',' << r.S1 << ','
     << r.S2 << ',' << r.r_hat << ',' << r.r_hat_int << ',' << r.V11 << ','
     << r.V22 << ',' << r.V12 << ',' << r.V_combined << ',' << r.V_prime << ','
     << (r.used_fallback ? 1 : 0) << ',' << r.V_used;
  for (const auto& [rr, val] : r.standardized) os << ',' << val;
  os << '\n';
  return os.str();
}

}  // namespace volrank
