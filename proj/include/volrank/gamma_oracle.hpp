#pragma once

// Monte Carlo oracle for the limiting block law.
//
// The large-sample behaviour of one pre-averaged block is captured by 2d-
// dimensional Gaussian-functional variables Psi_j, j = 1..d, built from a
// global q-dim Brownian motion Wbar on [0, kappa d], an independent d-dim
// Brownian motion Wbar', and an iid sequence Theta_i of d-dim standard
// normals shared between the kappa arms:
//
//   x_j = (1/sqrt(kappa)) alpha int_{B_j} w(s/kappa - (j-1)) dWbar_s
//
//   y_j = a psi3(w)                                          (exact)
//       + (1/kappa) sum_{k,m} gamma[.](k,m)
//                       int_{B_j} w(s/kappa - (j-1)) Wbar^k_s dWbar^m_s
//       + (1/sqrt(kappa)) beta int_{B_j} w(s/kappa - (j-1)) dWbar'_s
//       + (1/kappa) sqrt(psi1(w)/theta^3) phi^(1/2) Theta_{kappa j}
//
// over blocks B_j = [kappa (j-1), kappa j].  With F = gamma_r(mat x, mat y)^2,
// the target constants are Gamma_r = E[F] and Gamma'_r = Var[F].  Wbar is one
// path across blocks, which is what makes later blocks' iterated integrals
// grow like psi4 + (j-1) psi2 and keeps distinct blocks uncorrelated but not
// independent.  Stochastic integrals use left-point (Ito) sums on a substep
// grid; since the integrands vanish at both block ends, the discretization
// bias in second moments is O(substeps^-2).

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "volrank/common.hpp"
#include "volrank/matperturb.hpp"
#include "volrank/rng.hpp"
#include "volrank/weights.hpp"

namespace volrank {

// Coefficient bundle of the limiting block law: alpha plays the spot
// volatility, beta the artificial perturbation scale, gamma the vol-of-vol,
// a the drift and phi the noise covariance.
struct LimitParams {
  Eigen::MatrixXd alpha;               // d x q
  Eigen::MatrixXd beta;                // d x d
  std::vector<Eigen::MatrixXd> gamma;  // d entries, each q x q
  Eigen::VectorXd a;                   // d
  Eigen::MatrixXd phi;                 // d x d, symmetric PSD
  double theta = 1.0 / 3.0;

  int d() const { return static_cast<int>(alpha.rows()); }
  int q() const { return static_cast<int>(alpha.cols()); }

  static LimitParams zeros(int d, int q, double theta = 1.0 / 3.0) {
    LimitParams u;
    u.alpha = Eigen::MatrixXd::Zero(d, q);
    u.beta = Eigen::MatrixXd::Zero(d, d);
    u.gamma.assign(static_cast<std::size_t>(d), Eigen::MatrixXd::Zero(q, q));
    u.a = Eigen::VectorXd::Zero(d);
    u.phi = Eigen::MatrixXd::Zero(d, d);
    u.theta = theta;
    return u;
  }

  void validate() const {
    const int dd = d(), qq = q();
    if (dd < 1 || qq < 1)
      throw std::invalid_argument("limit params: empty dimensions");
    if (beta.rows() != dd || beta.cols() != dd)
      throw std::invalid_argument("limit params: beta must be d x d");
    if (static_cast<int>(gamma.size()) != dd)
      throw std::invalid_argument("limit params: need d gamma matrices");
    for (const auto& gm : gamma)
      if (gm.rows() != qq || gm.cols() != qq)
        throw std::invalid_argument("limit params: gamma entries must be q x q");
    if (a.size() != dd)
      throw std::invalid_argument("limit params: a must have length d");
    if (phi.rows() != dd || phi.cols() != dd)
      throw std::invalid_argument("limit params: phi must be d x d");
    if (!phi.isApprox(phi.transpose(), 1e-12))
      throw std::invalid_argument("limit params: phi must be symmetric");
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(phi);
    if (es.eigenvalues().minCoeff() < -1e-12)
      throw std::invalid_argument("limit params: phi must be PSD");
    if (!(theta > 0.0))
      throw std::invalid_argument("limit params: theta must be positive");
  }
};

// One joint draw of the block variables: column j of X / Y holds the x- /
// y-part of Psi_j.
struct PsiDraw {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Y;
};

namespace detail {

// Immutable per-configuration state shared by all draws.
struct PsiSimContext {
  const LimitParams* u = nullptr;
  int kappa = 1;
  int substeps = 0;
  double dt = 0.0;       // kappa / substeps
  double sqrt_dt = 0.0;
  std::vector<double> w_grid;  // w(i/substeps), left endpoints
  double psi3 = 0.0;
  Eigen::MatrixXd noise_coef;  // (1/kappa) sqrt(psi1/theta^3) phi^(1/2)
  bool need_wbar = false;      // alpha != 0 or some gamma != 0
  bool need_iter = false;      // some gamma != 0
  bool need_wprime = false;    // beta != 0
  bool need_theta = false;     // phi != 0

  PsiSimContext(const LimitParams& params, const WeightFunction& w, int kap,
                int steps)
      : u(&params), kappa(kap), substeps(steps) {
    params.validate();
    if (kap != 1 && kap != 2)
      throw std::invalid_argument("psi block: kappa must be 1 or 2");
    if (steps < 100)
      throw std::invalid_argument("psi block: need at least 100 substeps");
    dt = static_cast<double>(kap) / steps;
    sqrt_dt = std::sqrt(dt);
    w_grid.resize(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i)
      w_grid[static_cast<std::size_t>(i)] =
          w(static_cast<double>(i) / steps);
    const PsiMoments m = psi_moments(w);
    psi3 = m.psi3;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(params.phi);
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    const Eigen::MatrixXd phi_sqrt = es.eigenvectors() *
                                     ev.cwiseSqrt().asDiagonal() *
                                     es.eigenvectors().transpose();
    noise_coef = std::sqrt(m.psi1 / std::pow(params.theta, 3)) / kap * phi_sqrt;
    for (const auto& gm : params.gamma)
      need_iter = need_iter || gm.squaredNorm() > 0.0;
    need_wbar = need_iter || params.alpha.squaredNorm() > 0.0;
    need_wprime = params.beta.squaredNorm() > 0.0;
    need_theta = params.phi.squaredNorm() > 0.0;
  }
};

// Decoupled stream ids inside one draw; unused sources are simply never
// sampled, which cannot perturb the others.
enum : std::uint64_t { kStreamWbar = 0, kStreamWprime = 1, kStreamTheta = 2 };

inline PsiDraw simulate_psi_block(const PsiSimContext& ctx,
                                  std::uint64_t draw_seed) {
  const LimitParams& u = *ctx.u;
  const int d = u.d(), q = u.q();
  const double inv_sqrt_kappa = 1.0 / std::sqrt(static_cast<double>(ctx.kappa));
  const double inv_kappa = 1.0 / ctx.kappa;

  PsiDraw out;
  out.X = Eigen::MatrixXd::Zero(d, d);
  out.Y = Eigen::MatrixXd::Zero(d, d);

  NormalSource wbar_draws(draw_seed, kStreamWbar);
  NormalSource wprime_draws(draw_seed, kStreamWprime);
  RandomStream theta_stream(draw_seed, kStreamTheta);

  Eigen::VectorXd wbar = Eigen::VectorXd::Zero(q);  // global path level
  Eigen::VectorXd dw(q), dwp(d);
  Eigen::VectorXd int_w(q), int_wp(d), theta(d), iter(d);
  Eigen::MatrixXd int_ww(q, q);

  for (int j = 1; j <= d; ++j) {
    int_w.setZero();
    int_wp.setZero();
    int_ww.setZero();
    for (int i = 0; i < ctx.substeps; ++i) {
      const double w = ctx.w_grid[static_cast<std::size_t>(i)];
      if (ctx.need_wbar) {
        for (int m = 0; m < q; ++m) dw(m) = ctx.sqrt_dt * wbar_draws();
        int_w.noalias() += w * dw;
        if (ctx.need_iter) int_ww.noalias() += w * (wbar * dw.transpose());
        wbar += dw;
      }
      if (ctx.need_wprime) {
        for (int m = 0; m < d; ++m) dwp(m) = ctx.sqrt_dt * wprime_draws();
        int_wp.noalias() += w * dwp;
      }
    }
    out.X.col(j - 1).noalias() = inv_sqrt_kappa * (u.alpha * int_w);

    // Drift contribution is deterministic and known in closed form.
    out.Y.col(j - 1) = ctx.psi3 * u.a;
    if (ctx.need_iter) {
      for (int l = 0; l < d; ++l)
        iter(l) = u.gamma[static_cast<std::size_t>(l)]
                      .cwiseProduct(int_ww)
                      .sum();
      out.Y.col(j - 1).noalias() += inv_kappa * iter;
    }
    if (ctx.need_wprime)
      out.Y.col(j - 1).noalias() += inv_sqrt_kappa * (u.beta * int_wp);
    if (ctx.need_theta) {
      // Theta index kappa*j keyed absolutely, so both arms read the same
      // underlying sequence.
      const std::uint64_t idx =
          static_cast<std::uint64_t>(ctx.kappa) * static_cast<std::uint64_t>(j);
      for (int m = 0; m < d; ++m)
        theta(m) = theta_stream.normal_at((idx - 1) * static_cast<std::uint64_t>(d) +
                                          static_cast<std::uint64_t>(m));
      out.Y.col(j - 1).noalias() += ctx.noise_coef * theta;
    }
  }
  return out;
}

}  // namespace detail

inline PsiDraw simulate_psi_block(const LimitParams& u, const WeightFunction& w,
                                  int kappa, int substeps,
                                  std::uint64_t seed) {
  const detail::PsiSimContext ctx(u, w, kappa, substeps);
  return detail::simulate_psi_block(ctx, seed);
}

struct GammaEstimate {
  double gamma = 0.0;        // mean of F
  double gamma_prime = 0.0;  // variance of F
  double se_gamma = 0.0;
  double se_gamma_prime = 0.0;
  std::int64_t n_draws = 0;
  int r = 0;
  int kappa = 1;
};

// Monte Carlo estimate of (Gamma_r, Gamma'_r) with standard errors.  Draw i
// is a pure function of (seed, i), so results are identical for any worker
// count; aggregation is two-pass compensated in draw order.
inline GammaEstimate estimate_gamma(const LimitParams& u,
                                    const WeightFunction& w, int kappa, int r,
                                    std::int64_t n_draws, int substeps,
                                    std::uint64_t seed, int workers = 0) {
  if (n_draws < 2)
    throw std::invalid_argument("estimate_gamma: need at least 2 draws");
  const detail::PsiSimContext ctx(u, w, kappa, substeps);
  std::vector<double> f(static_cast<std::size_t>(n_draws));
  parallel_for(n_draws, resolve_workers(workers), [&](std::int64_t i) {
    const PsiDraw draw = detail::simulate_psi_block(
        ctx, mix_seed(seed, static_cast<std::uint64_t>(i)));
    const double g = gamma_r(draw.X, draw.Y, r);
    f[static_cast<std::size_t>(i)] = g * g;
  });

  CompensatedSum mean_acc;
  for (double v : f) mean_acc.add(v);
  const double mean = mean_acc.value() / static_cast<double>(n_draws);

  CompensatedSum m2_acc, m4_acc;
  for (double v : f) {
    const double c = v - mean;
    m2_acc.add(c * c);
    m4_acc.add(c * c * c * c);
  }
  const double n = static_cast<double>(n_draws);
  const double var = m2_acc.value() / (n - 1.0);
  const double m4 = m4_acc.value() / n;

  GammaEstimate est;
  est.gamma = mean;
  est.gamma_prime = var;
  est.se_gamma = std::sqrt(var / n);
  // Standard error of the sample variance from the fourth central moment.
  est.se_gamma_prime =
      std::sqrt(std::max(0.0, m4 - var * var * (n - 3.0) / (n - 1.0)) / n);
  est.n_draws = n_draws;
  est.r = r;
  est.kappa = kappa;
  return est;
}

struct PairDiagnostics {
  GammaEstimate first;   // (g, kappa = 1)
  GammaEstimate second;  // (h, kappa = 2)
  double z_gamma = 0.0;
  double z_gamma_prime = 0.0;
};

// Checks the calibration identity Gamma_r(u,g,1) = Gamma_r(u,h,2) (and its
// Gamma' counterpart) by comparing two independent estimates.  A matched pair
// should give |z| of order one; a mismatched pair drifts away at sqrt(n).
inline PairDiagnostics check_pair_consistency(const LimitParams& u,
                                              const WeightFunction& g,
                                              const WeightFunction& h, int r,
                                              std::int64_t n_draws,
                                              int substeps, std::uint64_t seed,
                                              int workers = 0) {
  PairDiagnostics diag;
  diag.first =
      estimate_gamma(u, g, 1, r, n_draws, substeps, mix_seed(seed, 1), workers);
  diag.second =
      estimate_gamma(u, h, 2, r, n_draws, substeps, mix_seed(seed, 2), workers);
  const double se_g = std::hypot(diag.first.se_gamma, diag.second.se_gamma);
  const double se_gp =
      std::hypot(diag.first.se_gamma_prime, diag.second.se_gamma_prime);
  diag.z_gamma = (diag.first.gamma - diag.second.gamma) / se_g;
  diag.z_gamma_prime =
      (diag.first.gamma_prime - diag.second.gamma_prime) / se_gp;
  return diag;
}

}  // namespace volrank
