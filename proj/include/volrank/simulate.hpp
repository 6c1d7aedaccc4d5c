#pragma once

// Path simulation on the regular observation grid t_i = i * delta_n.
//
// A dataset bundles what the statistics need: the noisy observations
// Y = X + eps and the artificial perturbation path X' = sigma_tilde W',
// where W' is a Brownian motion independent of everything else.  The scaled
// combination Z = Y + sqrt(kappa u_n) X' is formed lazily per kappa.

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "volrank/common.hpp"
#include "volrank/models.hpp"
#include "volrank/rng.hpp"

namespace volrank {

struct PathDataset {
  Eigen::MatrixXd Y;       // d x n_obs noisy observations
  Eigen::MatrixXd Xprime;  // d x n_obs perturbation component (unscaled)
  Eigen::MatrixXd X;       // d x n_obs latent path; empty unless requested
  double delta_n = 0.0;
  double T = 0.0;
  std::uint64_t seed = 0;
  std::string model_label;

  int dim() const { return static_cast<int>(Y.rows()); }
  std::int64_t n_obs() const { return Y.cols(); }
};

// Euler scheme with left-point coefficients, exact for the piecewise-constant
// and constant-coefficient zoo models.  Three decoupled generator streams
// drive the diffusion increments, the measurement noise and the perturbation
// increments, so any component can be reproduced in isolation.
inline PathDataset simulate_path(const ModelSpec& model,
                                 const PerturbationConfig& pert, double delta_n,
                                 double T, std::uint64_t seed,
                                 bool store_latent = false) {
  if (!(delta_n > 0.0) || !(T > 0.0))
    throw std::invalid_argument("simulate_path: delta_n and T must be positive");
  if (!(delta_n <= T))
    throw std::invalid_argument("simulate_path: need delta_n <= T");
  pert.validate(model.d);

  const std::int64_t n_obs = floor_snap(T / delta_n) + 1;
  const int d = model.d;
  const int q = model.q;
  const double sqrt_dt = std::sqrt(delta_n);

  // Matrix square root of the noise covariance (PSD; tiny negative
  // eigenvalues from rounding are clamped).
  Eigen::MatrixXd noise_sqrt;
  {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.noise_cov);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    noise_sqrt = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
                 es.eigenvectors().transpose();
  }

  NormalSource diffusion_draws(seed, 0);
  NormalSource noise_draws(seed, 1);
  NormalSource pert_draws(seed, 2);

  PathDataset out;
  out.Y.resize(d, n_obs);
  out.Xprime.resize(d, n_obs);
  if (store_latent) out.X.resize(d, n_obs);
  out.delta_n = delta_n;
  out.T = T;
  out.seed = seed;
  out.model_label = model.label;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd wp = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd b(d), eta(d), xi(q), xip(d);
  Eigen::MatrixXd s(d, q);

  for (std::int64_t i = 0; i < n_obs; ++i) {
    for (int m = 0; m < d; ++m) eta(m) = noise_draws();
    out.Y.col(i) = x + noise_sqrt * eta;
    out.Xprime.col(i) = pert.sigma_tilde * wp;
    if (store_latent) out.X.col(i) = x;
    if (i + 1 == n_obs) break;
    const double t = static_cast<double>(i) * delta_n;
    model.drift(t, b);
    model.vol(t, s);
    for (int m = 0; m < q; ++m) xi(m) = diffusion_draws();
    x += b * delta_n + s * (sqrt_dt * xi);
    for (int m = 0; m < d; ++m) xip(m) = pert_draws();
    wp += sqrt_dt * xip;
  }
  return out;
}

// Z^{n,kappa} = Y + sqrt(kappa u_n) X'.
inline Eigen::MatrixXd perturbed_series(const PathDataset& path, int kappa,
                                        double u_n) {
  if (kappa != 1 && kappa != 2)
    throw std::invalid_argument("perturbed_series: kappa must be 1 or 2");
  if (!(u_n > 0.0))
    throw std::invalid_argument("perturbed_series: u_n must be positive");
  return path.Y + std::sqrt(kappa * u_n) * path.Xprime;
}

// Column layout: t, Y_1..Y_d, Xprime_1..Xprime_d [, X_1..X_d].
// import_csv below reads the same layout back.
inline void export_csv(const PathDataset& path, std::ostream& os) {
  const int d = path.dim();
  const bool latent = path.X.size() > 0;
  os << "t";
  for (int m = 1; m <= d; ++m) os << ",Y" << m;
  for (int m = 1; m <= d; ++m) os << ",Xprime" << m;
  if (latent)
    for (int m = 1; m <= d; ++m) os << ",X" << m;
  os << '\n';
  os.precision(17);
  for (std::int64_t i = 0; i < path.n_obs(); ++i) {
    os << static_cast<double>(i) * path.delta_n;
    for (int m = 0; m < d; ++m) os << ',' << path.Y(m, i);
    for (int m = 0; m < d; ++m) os << ',' << path.Xprime(m, i);
    if (latent)
      for (int m = 0; m < d; ++m) os << ',' << path.X(m, i);
    os << '\n';
  }
}

inline PathDataset import_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header))
    throw std::invalid_argument("import_csv: empty input");
  int d = 0, extra = 0;
  {
    std::istringstream hs(header);
    std::string cell;
    std::vector<std::string> cols;
    while (std::getline(hs, cell, ',')) cols.push_back(cell);
    if (cols.empty() || cols[0] != "t")
      throw std::invalid_argument("import_csv: first column must be 't'");
    for (std::size_t c = 1; c < cols.size(); ++c) {
      if (cols[c].rfind("Y", 0) == 0 && c == static_cast<std::size_t>(d) + 1)
        ++d;
      else
        ++extra;
    }
    if (d < 1 || (extra != d && extra != 2 * d))
      throw std::invalid_argument("import_csv: unexpected column layout '" +
                                  header + "'");
  }
  const bool latent = extra == 2 * d;
  std::vector<double> flat;
  std::string line;
  std::int64_t rows = 0;
  const int per_row = 1 + d + d + (latent ? d : 0);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    int got = 0;
    while (std::getline(ls, cell, ',')) {
      flat.push_back(std::stod(cell));
      ++got;
    }
    if (got != per_row)
      throw std::invalid_argument("import_csv: row " + std::to_string(rows) +
                                  " has " + std::to_string(got) +
                                  " cells, expected " + std::to_string(per_row));
    ++rows;
  }
  if (rows < 2)
    throw std::invalid_argument("import_csv: need at least two observations");

  PathDataset path;
  path.Y.resize(d, rows);
  path.Xprime.resize(d, rows);
  if (latent) path.X.resize(d, rows);
  for (std::int64_t i = 0; i < rows; ++i) {
    const double* row = flat.data() + i * per_row;
    for (int m = 0; m < d; ++m) path.Y(m, i) = row[1 + m];
    for (int m = 0; m < d; ++m) path.Xprime(m, i) = row[1 + d + m];
    if (latent)
      for (int m = 0; m < d; ++m) path.X(m, i) = row[1 + 2 * d + m];
  }
  path.delta_n = flat[static_cast<std::size_t>(per_row)] - flat[0];
  if (!(path.delta_n > 0.0))
    throw std::invalid_argument("import_csv: nonincreasing time column");
  path.T = flat[static_cast<std::size_t>((rows - 1) * per_row)];
  path.model_label = "imported";
  return path;
}

}  // namespace volrank
