#pragma once

// Piecewise-linear weight functions on [0,1] and their moment functionals
//
//   psi1 = int (w')^2,  psi2 = int w^2,  psi3 = int w,  psi4 = int x w(x)^2.
//
// All four moments are evaluated exactly per linear segment (no quadrature),
// so the canonical pair below reproduces its closed-form moments to rounding
// error.  The pair (g, h) is calibrated so that
//
//   psi1(h) = 4 psi1(g),   psi_l(h) = psi_l(g) for l = 2, 3, 4,
//
// which is the matching condition the two-scale estimators depend on.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace volrank {

struct PsiMoments {
  double psi1 = 0.0;  // int_0^1 w'(x)^2 dx
  double psi2 = 0.0;  // int_0^1 w(x)^2 dx
  double psi3 = 0.0;  // int_0^1 w(x) dx
  double psi4 = 0.0;  // int_0^1 x w(x)^2 dx
};

// Continuous piecewise-linear function on [0,1] vanishing at both endpoints
// and not identically zero.  Represented by its breakpoint list.
class WeightFunction {
 public:
  explicit WeightFunction(std::vector<std::pair<double, double>> breakpoints) {
    if (breakpoints.size() < 2)
      throw std::invalid_argument("weight function needs >= 2 breakpoints");
    xs_.reserve(breakpoints.size());
    ys_.reserve(breakpoints.size());
    for (const auto& [x, y] : breakpoints) {
      if (!std::isfinite(x) || !std::isfinite(y))
        throw std::invalid_argument("weight breakpoint is not finite");
      if (!xs_.empty() && x <= xs_.back())
        throw std::invalid_argument(
            "weight breakpoints must be strictly increasing in x");
      xs_.push_back(x);
      ys_.push_back(y);
    }
    if (xs_.front() != 0.0 || xs_.back() != 1.0)
      throw std::invalid_argument("weight breakpoints must span [0,1]");
    if (ys_.front() != 0.0 || ys_.back() != 0.0)
      throw std::invalid_argument("weight function must vanish at 0 and 1");
    bool nonzero = false;
    for (double y : ys_) nonzero = nonzero || y != 0.0;
    if (!nonzero)
      throw std::invalid_argument("weight function is identically zero");
  }

  // Value at x in [0,1] (linear interpolation between breakpoints).
  double operator()(double x) const {
    // Tolerate rounding just outside the interval; reject anything else.
    if (x < 0.0 || x > 1.0) {
      if (x > -1e-12 && x < 1.0 + 1e-12) {
        x = std::clamp(x, 0.0, 1.0);
      } else {
        throw std::domain_error("weight function evaluated outside [0,1]");
      }
    }
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    const std::size_t hi =
        std::min<std::size_t>(xs_.size() - 1,
                              static_cast<std::size_t>(it - xs_.begin()));
    const std::size_t lo = hi - 1;
    const double t = (x - xs_[lo]) / (xs_[hi] - xs_[lo]);
    return ys_[lo] + t * (ys_[hi] - ys_[lo]);
  }

  std::size_t segment_count() const { return xs_.size() - 1; }
  const std::vector<double>& knots_x() const { return xs_; }
  const std::vector<double>& knots_y() const { return ys_; }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
};

// Exact moment functionals, accumulated segment by segment.  On a segment
// [x0,x1] with values (y0,y1), slope s and width h:
//   int (w')^2  = s^2 h
//   int w^2     = h (y0^2 + y0 y1 + y1^2) / 3
//   int w       = h (y0 + y1) / 2
//   int x w^2   = x0 * h (y0^2 + y0 y1 + y1^2) / 3
//                 + y0^2 h^2 / 2 + (2/3) y0 s h^3 + s^2 h^4 / 4.
inline PsiMoments psi_moments(const WeightFunction& w) {
  const auto& xs = w.knots_x();
  const auto& ys = w.knots_y();
  PsiMoments m;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double x0 = xs[i], y0 = ys[i], y1 = ys[i + 1];
    const double h = xs[i + 1] - x0;
    const double s = (y1 - y0) / h;
    const double sq = (y0 * y0 + y0 * y1 + y1 * y1) / 3.0;
    m.psi1 += s * s * h;
    m.psi2 += h * sq;
    m.psi3 += h * (y0 + y1) / 2.0;
    m.psi4 += x0 * h * sq + 0.5 * y0 * y0 * h * h +
              (2.0 / 3.0) * y0 * s * h * h * h + 0.25 * s * s * h * h * h * h;
  }
  return m;
}

// Riemann-sum counterpart of psi1 on the observation grid:
//   k_n * sum_{i=0}^{k_n-1} (w((i+1)/k_n) - w(i/k_n))^2.
// Converges to psi1 as k_n grows; the finite-sample value is what actually
// enters pre-averaged noise variances.
inline double psi1_discrete(const WeightFunction& w, int k_n) {
  if (k_n < 2) throw std::invalid_argument("psi1_discrete: k_n must be >= 2");
  double acc = 0.0;
  double prev = w(0.0);
  for (int i = 1; i <= k_n; ++i) {
    const double cur = w(static_cast<double>(i) / k_n);
    const double d = cur - prev;
    acc += d * d;
    prev = cur;
  }
  return acc * k_n;
}

// Weight samples used by the pre-averaging kernel: w(j/k_n), j = 1..k_n-1.
inline std::vector<double> sample_grid(const WeightFunction& w, int k_n) {
  if (k_n < 2) throw std::invalid_argument("sample_grid: k_n must be >= 2");
  std::vector<double> out(static_cast<std::size_t>(k_n) - 1);
  for (int j = 1; j < k_n; ++j)
    out[static_cast<std::size_t>(j) - 1] = w(static_cast<double>(j) / k_n);
  return out;
}

// Calibrated pair (g, h).  Both are compressed tent-type functions: with
//   c = (8 + sqrt(3)) / 8,
// g is the symmetric tent squeezed into [0, 1/c] and h is a skewed tent
// squeezed into [1 - 1/c, 1], with slopes chosen so that psi1 quadruples
// while psi2, psi3, psi4 coincide:
//   psi1(g) = c,  psi1(h) = 4c,
//   psi2 = 1/(12c),  psi3 = 1/(4c),  psi4 = 1/(24 c^2).
inline std::pair<WeightFunction, WeightFunction> canonical_pair() {
  const double s3 = std::sqrt(3.0);
  const double c = (8.0 + s3) / 8.0;
  WeightFunction g({{0.0, 0.0},
                    {1.0 / (2.0 * c), 0.5},
                    {1.0 / c, 0.0},
                    {1.0, 0.0}});
  // Peak of the skewed tent before compression sits at (2 - sqrt(3))/4.
  const double peak = 1.0 - (1.0 - (2.0 - s3) / 4.0) / c;
  WeightFunction h({{0.0, 0.0},
                    {1.0 - 1.0 / c, 0.0},
                    {peak, 0.5},
                    {1.0, 0.0}});
  return {std::move(g), std::move(h)};
}

// Verifies the moment-matching conditions a usable pair must satisfy.
// Throws std::invalid_argument naming the first violated condition.
inline void validate_pair(const WeightFunction& g, const WeightFunction& h,
                          double tol = 1e-12) {
  const PsiMoments mg = psi_moments(g);
  const PsiMoments mh = psi_moments(h);
  auto close = [tol](double a, double b) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
  };
  if (!close(mh.psi1, 4.0 * mg.psi1))
    throw std::invalid_argument("weight pair: psi1(h) != 4 psi1(g)");
  if (!close(mh.psi2, mg.psi2))
    throw std::invalid_argument("weight pair: psi2 mismatch");
  if (!close(mh.psi3, mg.psi3))
    throw std::invalid_argument("weight pair: psi3 mismatch");
  if (!close(mh.psi4, mg.psi4))
    throw std::invalid_argument("weight pair: psi4 mismatch");
}

// Text form: one "x y" breakpoint per line, full round-trip precision.
// Blank lines and lines starting with '#' are ignored on input.
inline std::string to_text(const WeightFunction& w) {
  std::ostringstream os;
  os.precision(17);
  const auto& xs = w.knots_x();
  const auto& ys = w.knots_y();
  for (std::size_t i = 0; i < xs.size(); ++i)
    os << xs[i] << ' ' << ys[i] << '\n';
  return os.str();
}

inline WeightFunction weight_from_text(std::istream& in) {
  std::vector<std::pair<double, double>> pts;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double x, y;
    if (!(ls >> x >> y))
      throw std::invalid_argument("weight text: expected 'x y' per line, got '" +
                                  line + "'");
    pts.emplace_back(x, y);
  }
  return WeightFunction(std::move(pts));
}

inline WeightFunction weight_from_text(const std::string& text) {
  std::istringstream in(text);
  return weight_from_text(in);
}

}  // namespace volrank
