#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "seqstop/analytics.hpp"
#include "seqstop/errors.hpp"
#include "seqstop/math/quadrature.hpp"

namespace seqstop {

// Symmetric state-dependent flow cost c(rho), bounded away from zero.
// Symmetry and the declared lower bound are spot-verified at construction on
// 64 golden-ratio points over [-probe_halfwidth, probe_halfwidth].
class CostFunction {
 public:
  CostFunction(std::function<double(double)> evaluator, double lower_bound,
               double probe_halfwidth = 8.0)
      : eval_(std::move(evaluator)), lower_(lower_bound) {
    if (!eval_) throw parameter_error("CostFunction: evaluator required");
    if (!(std::isfinite(lower_) && lower_ > 0.0))
      throw config_error("CostFunction: lower bound must be > 0");
    constexpr double kPhi = 0.6180339887498949;
    double frac = 0.0;
    for (int k = 0; k < 64; ++k) {
      frac += kPhi;
      frac -= std::floor(frac);
      const double z = probe_halfwidth * frac;
      const double cp = eval_(z), cm = eval_(-z);
      if (!std::isfinite(cp) || !std::isfinite(cm))
        throw config_error("CostFunction: non-finite cost at |z|=" + std::to_string(z));
      if (std::fabs(cp - cm) > 1e-9 * std::max(1.0, std::fabs(cp)))
        throw config_error("CostFunction: asymmetric cost at |z|=" + std::to_string(z));
      if (cp < lower_ * (1.0 - 1e-12))
        throw config_error("CostFunction: cost below declared lower bound at |z|=" +
                           std::to_string(z));
    }
  }

  double operator()(double z) const { return eval_(z); }
  double lower_bound() const { return lower_; }

  static CostFunction constant(double c) {
    if (!(std::isfinite(c) && c > 0.0)) throw config_error("CostFunction: constant must be > 0");
    return CostFunction([c](double) { return c; }, c);
  }

  // c(z) = sum_k coeffs[k] |z|^k with coeffs[0] > 0 and coeffs[k] >= 0.
  static CostFunction polynomial_abs(std::vector<double> coeffs) {
    if (coeffs.empty() || !(coeffs[0] > 0.0))
      throw config_error("CostFunction: polynomial needs a positive constant term");
    for (const double a : coeffs)
      if (!(std::isfinite(a) && a >= 0.0))
        throw config_error("CostFunction: polynomial coefficients must be >= 0");
    const double lower = coeffs[0];
    return CostFunction(
        [cs = std::move(coeffs)](double z) {
          const double a = std::fabs(z);
          double pow = 1.0, acc = 0.0;
          for (const double ck : cs) {
            acc += ck * pow;
            pow *= a;
          }
          return acc;
        },
        lower);
  }

  // Monotone cubic (Fritsch-Carlson) through (|z|_i, v_i); constant beyond
  // the last knot. Knots must start at 0 and increase.
  static CostFunction table(std::vector<double> z, std::vector<double> v);

 private:
  std::function<double(double)> eval_;
  double lower_;
};

namespace detail {

struct MonotoneCubic {
  std::vector<double> x, y, m;  // knots, values, tangents

  double operator()(double a) const {
    if (a <= x.front()) return y.front();
    if (a >= x.back()) return y.back();
    std::size_t hi = 1;
    while (x[hi] < a) ++hi;
    const std::size_t lo = hi - 1;
    const double h = x[hi] - x[lo];
    const double t = (a - x[lo]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return y[lo] * (2 * t3 - 3 * t2 + 1) + h * m[lo] * (t3 - 2 * t2 + t) +
           y[hi] * (-2 * t3 + 3 * t2) + h * m[hi] * (t3 - t2);
  }
};

inline MonotoneCubic fit_monotone_cubic(std::vector<double> x, std::vector<double> y) {
  const std::size_t n = x.size();
  std::vector<double> d(n - 1), m(n);
  for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
  m[0] = d[0];
  m[n - 1] = d[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i)
    m[i] = (d[i - 1] * d[i] <= 0.0) ? 0.0 : 0.5 * (d[i - 1] + d[i]);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (d[i] == 0.0) {
      m[i] = m[i + 1] = 0.0;
      continue;
    }
    const double a = m[i] / d[i], b = m[i + 1] / d[i];
    const double s = a * a + b * b;
    if (s > 9.0) {
      const double tau = 3.0 / std::sqrt(s);
      m[i] = tau * a * d[i];
      m[i + 1] = tau * b * d[i];
    }
  }
  return MonotoneCubic{std::move(x), std::move(y), std::move(m)};
}

}  // namespace detail

inline CostFunction CostFunction::table(std::vector<double> z, std::vector<double> v) {
  if (z.size() != v.size() || z.size() < 2)
    throw config_error("CostFunction: table needs >= 2 matching knots/values");
  if (z.front() != 0.0) throw config_error("CostFunction: table knots must start at 0");
  double lower = v[0];
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (i > 0 && !(z[i] > z[i - 1])) throw config_error("CostFunction: table knots must increase");
    if (!(std::isfinite(v[i]) && v[i] > 0.0))
      throw config_error("CostFunction: table values must be > 0");
    lower = std::min(lower, v[i]);
  }
  auto spline = detail::fit_monotone_cubic(std::move(z), std::move(v));
  // interpolation can dip below the knot minimum only between knots of a
  // non-monotone table; probe guard in the constructor re-checks positivity
  return CostFunction([sp = std::move(spline)](double a) { return sp(std::fabs(a)); },
                      0.999 * lower);
}

// zeta_D(x) = 2 int_0^x e^{-D y} int_0^y e^{D z} c(z) dz dy, the expected
// accumulated cost of reaching level x. Valid for either sign of x (signed
// limits); solves (1/2) zeta'' + (D/2) zeta' = c with zeta(0) = zeta'(0) = 0.
inline double zeta(const CostFunction& cost, double delta, double x, double rel_tol = 1e-8) {
  if (!(std::isfinite(delta) && delta > 0.0)) throw parameter_error("zeta: delta must be > 0");
  if (!std::isfinite(x)) throw parameter_error("zeta: x must be finite");
  if (x == 0.0) return 0.0;
  const auto inner = [&](double y) {
    return integrate([&](double z) { return std::exp(delta * z) * cost(z); }, 0.0, y,
                     0.1 * rel_tol);
  };
  const double outer =
      integrate([&](double y) { return std::exp(-delta * y) * inner(y); }, 0.0, x, rel_tol);
  return 2.0 * outer;
}

// Minimax objective for a general symmetric flow cost:
//   ((s1+s0)/2) D alpha + (1-alpha) zeta_D(gamma) + alpha zeta_D(-gamma),
// alpha = (1-e^{-Dg})/(e^{Dg}-e^{-Dg}). The mistake probability alpha weights
// the lower-barrier cost zeta_D(-gamma): under the favorable drift the lower
// barrier is the rare, expensive exit (constant cost then reduces exactly to
// the closed-form regret).
inline double general_objective(const CostFunction& cost, double sigma1, double sigma0,
                                double gamma, double delta) {
  if (!(std::isfinite(gamma) && gamma > 0.0))
    throw parameter_error("general_objective: gamma must be > 0");
  if (!(std::isfinite(delta) && delta > 0.0))
    throw parameter_error("general_objective: delta must be > 0");
  const double alpha = misid_prob(gamma, delta);
  const double ssum = sigma1 + sigma0;
  return 0.5 * ssum * delta * alpha + (1.0 - alpha) * zeta(cost, delta, gamma) +
         alpha * zeta(cost, delta, -gamma);
}

// Expected accumulated sampling cost of the gamma-threshold rule at
// standardized gap delta (the cost part of the objective).
inline double expected_general_cost(const CostFunction& cost, double gamma, double delta) {
  const double alpha = misid_prob(gamma, delta);
  return (1.0 - alpha) * zeta(cost, delta, gamma) + alpha * zeta(cost, delta, -gamma);
}

struct GeneralEquilibrium {
  double gamma_star = 0.0;
  double delta_star = 0.0;
  double value = 0.0;
  double residual = 0.0;          // best-response self-consistency
  double multistart_spread = 0.0; // disagreement between outer starts
};

namespace detail {

struct InnerMax {
  double delta;
  double value;
};

inline InnerMax general_inner_max(const CostFunction& cost, double s1, double s0, double gamma,
                                  double delta_guess) {
  const auto f = [&](double d) { return general_objective(cost, s1, s0, gamma, d); };
  const Bracket br = bracket_max_by_doubling(f, delta_guess, 1e8);
  const double d = golden_max(f, br.lo, br.hi, 1e-10);
  return {d, f(d)};
}

inline double general_outer_min(const CostFunction& cost, double s1, double s0, double g_lo,
                                double g_hi, double delta_guess) {
  return golden_min(
      [&](double g) { return general_inner_max(cost, s1, s0, g, delta_guess).value; }, g_lo, g_hi,
      1e-9);
}

}  // namespace detail

// Nested min over gamma of max over delta. Two outer starts guard against a
// bad initial bracket; their disagreement is reported, not certified away.
inline GeneralEquilibrium solve_general_equilibrium(const CostFunction& cost, double sigma1,
                                                    double sigma0) {
  if (!(sigma1 > 0.0 && sigma0 > 0.0))
    throw parameter_error("solve_general_equilibrium: sigmas must be > 0");
  // scale guesses from the constant-cost equilibrium at the cost floor
  const DesignParams scale_params(cost.lower_bound(), sigma1, sigma0);
  const double g_scale = universal_constants().gamma0 / scale_params.eta();
  const double d_scale = universal_constants().delta0 * scale_params.eta();

  const double g1 = detail::general_outer_min(cost, sigma1, sigma0, g_scale / 16.0,
                                              g_scale * 16.0, d_scale);
  const double g2 = detail::general_outer_min(cost, sigma1, sigma0, g_scale / 64.0,
                                              g_scale * 4.0, d_scale);
  GeneralEquilibrium out;
  out.multistart_spread = std::fabs(g1 - g2) / std::max(1.0, std::fabs(g1));

  // polish by alternating exact 1-D solves
  double g = g1;
  detail::InnerMax inner = detail::general_inner_max(cost, sigma1, sigma0, g, d_scale);
  for (int round = 0; round < 4; ++round) {
    const auto along_gamma = [&](double gg) {
      return general_objective(cost, sigma1, sigma0, gg, inner.delta);
    };
    g = golden_min(along_gamma, 0.25 * g, 4.0 * g, 1e-11);
    inner = detail::general_inner_max(cost, sigma1, sigma0, g, inner.delta);
  }
  const auto along_gamma = [&](double gg) {
    return general_objective(cost, sigma1, sigma0, gg, inner.delta);
  };
  const double g_check = golden_min(along_gamma, 0.25 * g, 4.0 * g, 1e-11);
  const double d_check = detail::general_inner_max(cost, sigma1, sigma0, g, inner.delta).delta;
  out.residual = std::fabs(g - g_check) / std::max(1.0, g) +
                 std::fabs(inner.delta - d_check) / std::max(1.0, inner.delta);
  if (out.residual > 1e-6)
    throw solver_error("solve_general_equilibrium: saddle residual " +
                       std::to_string(out.residual));
  out.gamma_star = g;
  out.delta_star = inner.delta;
  out.value = inner.value;
  return out;
}

}  // namespace seqstop
