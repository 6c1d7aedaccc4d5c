#pragma once

// Pre-averaging of noisy series.
//
// With window k_n and spacing kappa in {1,2}, the weighted increment sum
//
//   Vbar(w)_i = sum_{j=1}^{k_n-1} w(j/k_n) (V_{i+kappa j} - V_{i+kappa(j-1)})
//
// suppresses iid measurement noise by ~1/sqrt(k_n) while retaining the local
// diffusion movement.  The window k_n = floor(theta * delta_n^{-2/3}) balances
// the two error sources; u_n = k_n * delta_n is the effective window length in
// time, and every block/statistic layout below is expressed in units of k_n.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "volrank/common.hpp"
#include "volrank/weights.hpp"

namespace volrank {

struct PreAvgPlan {
  int k_n = 0;        // observations per window
  double u_n = 0.0;   // k_n * delta_n
  double theta = 0.0;
  double delta_n = 0.0;
};

// Window-size rule with an optional explicit override (some published
// configurations use a hand-picked k_n that the floor rule does not hit).
inline PreAvgPlan make_plan(double delta_n, double theta,
                            std::optional<int> override_k = std::nullopt) {
  if (!(delta_n > 0.0) || !(delta_n < 1.0))
    throw std::invalid_argument("make_plan: delta_n must lie in (0,1)");
  if (!(theta > 0.0))
    throw std::invalid_argument("make_plan: theta must be positive");
  int k;
  if (override_k) {
    k = *override_k;
  } else {
    k = static_cast<int>(floor_snap(theta * std::pow(delta_n, -2.0 / 3.0)));
  }
  if (k < 2)
    throw std::invalid_argument(
        "make_plan: window k_n < 2; increase theta or sampling frequency");
  return PreAvgPlan{k, k * delta_n, theta, delta_n};
}

// Weighted increment sum starting at column i.  `samples` holds
// w(j/k_n), j = 1..k_n-1 (see sample_grid); the last column touched is
// i + kappa (k_n - 1), which must stay inside the series.
inline Eigen::VectorXd preavg_at(const Eigen::MatrixXd& series,
                                 const std::vector<double>& samples, int kappa,
                                 std::int64_t i) {
  if (kappa != 1 && kappa != 2)
    throw std::invalid_argument("preavg_at: kappa must be 1 or 2");
  if (samples.empty())
    throw std::invalid_argument("preavg_at: empty weight samples");
  const std::int64_t last =
      i + static_cast<std::int64_t>(kappa) *
              static_cast<std::int64_t>(samples.size());
  if (i < 0 || last >= series.cols())
    throw std::out_of_range("preavg_at: window [" + std::to_string(i) + ", " +
                            std::to_string(last) + "] exceeds series length " +
                            std::to_string(series.cols()));
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(series.rows());
  std::int64_t prev = i;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const std::int64_t cur = prev + kappa;
    acc.noalias() += samples[j] * (series.col(cur) - series.col(prev));
    prev = cur;
  }
  return acc;
}

// d pre-averaged vectors assembled as matrix columns, each scaled by
// 1/sqrt(kappa u_n); `starts[j]` is the observation index where column j's
// window begins.
inline Eigen::MatrixXd scaled_block(const Eigen::MatrixXd& series,
                                    const std::vector<double>& samples,
                                    int kappa, double u_n,
                                    const std::vector<std::int64_t>& starts) {
  if (!(u_n > 0.0))
    throw std::invalid_argument("scaled_block: u_n must be positive");
  const int d = static_cast<int>(series.rows());
  if (static_cast<int>(starts.size()) != d)
    throw std::invalid_argument("scaled_block: need one start per dimension");
  const double scale = 1.0 / std::sqrt(kappa * u_n);
  Eigen::MatrixXd M(d, d);
  for (int j = 0; j < d; ++j)
    M.col(j) = scale * preavg_at(series, samples, kappa, starts[j]);
  return M;
}

// Column starts of block i in the main-statistic layout:
//   column j (1-based) starts at ((3 i + kappa - 1) d + kappa (j-1)) k_n.
// Successive blocks i and kappa arms tile disjoint stretches of the grid:
// the kappa=1 block of round i spans [3 i d k_n, (3 i + 1) d k_n] and the
// kappa=2 block spans [(3 i + 1) d k_n, (3 i + 3) d k_n].
inline std::vector<std::int64_t> main_block_starts(int d, int k_n, int kappa,
                                                   std::int64_t i) {
  std::vector<std::int64_t> starts(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j)
    starts[static_cast<std::size_t>(j)] =
        ((3 * i + kappa - 1) * d + static_cast<std::int64_t>(kappa) * j) * k_n;
  return starts;
}

inline Eigen::MatrixXd block_matrix(const Eigen::MatrixXd& series,
                                    const PreAvgPlan& plan,
                                    const std::vector<double>& samples,
                                    int kappa, std::int64_t i) {
  if (static_cast<int>(samples.size()) != plan.k_n - 1)
    throw std::invalid_argument(
        "block_matrix: weight samples do not match window size");
  const int d = static_cast<int>(series.rows());
  return scaled_block(series, samples, kappa, plan.u_n,
                      main_block_starts(d, plan.k_n, kappa, i));
}

}  // namespace volrank
