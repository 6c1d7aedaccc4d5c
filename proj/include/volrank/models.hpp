#pragma once

// Diffusion model descriptions and the benchmark model zoo.
//
// A model is dX_t = b_t dt + sigma_t dW_t observed as Y = X + eps with iid
// N(0, noise_cov) measurement errors.  The quantity under test is the maximal
// rank over [0,1) of the spot covolatility c_t = sigma_t sigma_t^T; every
// ModelSpec carries its declared maximal rank and is cross-checked against a
// dense numerical rank scan on construction, so a mislabeled model fails fast.

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace volrank {

// Time-varying coefficients write into caller-provided storage; the
// simulation loop calls them once per grid point and must not allocate.
using DriftFn = std::function<void(double, Eigen::VectorXd&)>;
using VolFn = std::function<void(double, Eigen::MatrixXd&)>;

struct ModelSpec {
  int d = 1;  // observed dimension
  int q = 1;  // driving Brownian dimension
  DriftFn drift;
  VolFn vol;
  Eigen::MatrixXd noise_cov;  // d x d, positive semidefinite
  int true_max_rank = 0;      // sup over [0,1) of rank(sigma sigma^T)
  std::string label;
};

namespace detail {

inline int numerical_rank(const Eigen::MatrixXd& sigma) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(sigma);
  const auto& sv = svd.singularValues();
  const double cutoff = 1e-10 * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank;
  return rank;
}

}  // namespace detail

// Validates dimensions, noise covariance and the declared maximal rank
// (scanned on a dense grid over [0,1)).  Returns the spec unchanged.
inline ModelSpec make_model(ModelSpec spec, int rank_scan_points = 10000) {
  if (spec.d < 1 || spec.q < 1)
    throw std::invalid_argument("model: dimensions must be positive");
  if (!spec.drift || !spec.vol)
    throw std::invalid_argument("model: drift and volatility must be set");
  if (spec.noise_cov.rows() != spec.d || spec.noise_cov.cols() != spec.d)
    throw std::invalid_argument("model: noise covariance must be d x d");
  if (!spec.noise_cov.isApprox(spec.noise_cov.transpose(), 1e-12))
    throw std::invalid_argument("model: noise covariance must be symmetric");
  {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spec.noise_cov);
    if (es.eigenvalues().minCoeff() < -1e-12)
      throw std::invalid_argument(
          "model: noise covariance must be positive semidefinite");
  }
  Eigen::VectorXd b(spec.d);
  Eigen::MatrixXd s(spec.d, spec.q);
  int max_rank = 0;
  for (int i = 0; i < rank_scan_points; ++i) {
    const double t = static_cast<double>(i) / rank_scan_points;
    spec.drift(t, b);
    spec.vol(t, s);
    if (b.size() != spec.d || s.rows() != spec.d || s.cols() != spec.q)
      throw std::invalid_argument("model: coefficient dimensions changed");
    max_rank = std::max(max_rank, detail::numerical_rank(s));
  }
  if (max_rank != spec.true_max_rank)
    throw std::invalid_argument(
        "model '" + spec.label + "': declared maximal rank " +
        std::to_string(spec.true_max_rank) + " but rank scan found " +
        std::to_string(max_rank));
  return spec;
}

// Benchmark zoo: for each dimension d in {1,2,3} four models exercising the
// full rank range, all with noise covariance 0.0005 I_d.
//   m1: zero drift, identity volatility       (full rank d)
//   m2: pure noise                            (rank 0)
//   m3: constant drift, indicator volatility switching at t = 0.5 (rank 1);
//       the volatility path is discontinuous on purpose
//   m4: oscillating drift and volatility      (rank 1 for d<=2, rank 2 for d=3)
inline ModelSpec model_zoo(int d, int model_id) {
  if (d < 1 || d > 3)
    throw std::invalid_argument("model_zoo: d must be 1, 2 or 3");
  if (model_id < 1 || model_id > 4)
    throw std::invalid_argument("model_zoo: model id must be in 1..4");
  constexpr double two_pi = 2.0 * std::numbers::pi_v<double>;

  ModelSpec m;
  m.d = d;
  m.q = d;
  m.noise_cov = 0.0005 * Eigen::MatrixXd::Identity(d, d);
  m.label = "d" + std::to_string(d) + "m" + std::to_string(model_id);

  switch (model_id) {
    case 1:
      m.true_max_rank = d;
      m.drift = [](double, Eigen::VectorXd& b) { b.setZero(); };
      m.vol = [](double, Eigen::MatrixXd& s) { s.setIdentity(); };
      break;
    case 2:
      m.true_max_rank = 0;
      m.drift = [](double, Eigen::VectorXd& b) { b.setZero(); };
      m.vol = [](double, Eigen::MatrixXd& s) { s.setZero(); };
      break;
    case 3: {
      m.true_max_rank = 1;
      m.drift = [d](double, Eigen::VectorXd& b) {
        b(0) = 1.0;
        if (d >= 2) b(1) = -1.0;
        if (d >= 3) b(2) = 5.0;
      };
      // diag(1{t<=0.5}, 1{t>0.5}, 0): exactly one active coordinate at a time.
      m.vol = [d](double t, Eigen::MatrixXd& s) {
        s.setZero();
        if (t <= 0.5) {
          s(0, 0) = 1.0;
        } else if (d >= 2) {
          s(1, 1) = 1.0;
        }
      };
      break;
    }
    case 4: {
      m.true_max_rank = d >= 3 ? 2 : 1;
      m.drift = [d](double t, Eigen::VectorXd& b) {
        b(0) = 1.0 + std::sin(two_pi * t);
        if (d >= 2) b(1) = 1.0 + std::cos(two_pi * t);
        if (d >= 3) b(2) = 0.0;
      };
      // Two identical oscillating columns (rank one); d = 3 adds an
      // independent unit column in the third coordinate.
      m.vol = [d](double t, Eigen::MatrixXd& s) {
        const double c = std::cos(two_pi * t);
        const double sn = std::sin(two_pi * t);
        if (d == 1) {
          s(0, 0) = c;
          return;
        }
        s.setZero();
        s(0, 0) = c;
        s(0, 1) = c;
        s(1, 0) = sn;
        s(1, 1) = sn;
        if (d >= 3) s(2, 2) = 1.0;
      };
      break;
    }
  }
  return make_model(std::move(m));
}

inline ModelSpec model_by_label(const std::string& label) {
  if (label.size() == 4 && label[0] == 'd' && label[2] == 'm') {
    const int d = label[1] - '0';
    const int id = label[3] - '0';
    if (d >= 1 && d <= 3 && id >= 1 && id <= 4) return model_zoo(d, id);
  }
  throw std::invalid_argument("unknown model label '" + label +
                              "' (expected d{1..3}m{1..4})");
}

// Artificial diffusion added before pre-averaging.  sigma_tilde must be
// symmetric positive definite so the perturbation has full rank; the default
// doubles the identity.
struct PerturbationConfig {
  Eigen::MatrixXd sigma_tilde;

  static PerturbationConfig scaled_identity(int d, double scale = 2.0) {
    if (d < 1) throw std::invalid_argument("perturbation: d must be positive");
    if (!(scale > 0.0))
      throw std::invalid_argument("perturbation: scale must be positive");
    return PerturbationConfig{scale * Eigen::MatrixXd::Identity(d, d)};
  }

  void validate(int d) const {
    if (sigma_tilde.rows() != d || sigma_tilde.cols() != d)
      throw std::invalid_argument("perturbation: sigma_tilde must be d x d");
    if (!sigma_tilde.isApprox(sigma_tilde.transpose(), 1e-12))
      throw std::invalid_argument("perturbation: sigma_tilde must be symmetric");
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma_tilde);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument(
          "perturbation: sigma_tilde must be positive definite");
  }
};

}  // namespace volrank
