#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "seqstop/errors.hpp"
#include "seqstop/math/normal.hpp"
#include "seqstop/math/optimize.hpp"

namespace seqstop {

// Problem primitives: flow sampling cost and the two outcome standard
// deviations. The scale eta = (2c/(sigma1+sigma0))^(1/3) is always recomputed.
struct DesignParams {
  double c;
  double sigma1;
  double sigma0;

  DesignParams(double c_, double sigma1_, double sigma0_)
      : c(c_), sigma1(sigma1_), sigma0(sigma0_) {
    if (!(std::isfinite(c) && c > 0.0))
      throw parameter_error("DesignParams: c must be finite and > 0");
    if (!(std::isfinite(sigma1) && sigma1 > 0.0) ||
        !(std::isfinite(sigma0) && sigma0 > 0.0))
      throw parameter_error("DesignParams: sigmas must be finite and > 0");
  }

  double sigma_sum() const { return sigma1 + sigma0; }
  double eta() const { return std::cbrt(2.0 * c / sigma_sum()); }
};

// Dimensionless equilibrium of the unit-scale game (eta = 1).
struct UniversalConstants {
  double gamma0;      // ~0.536397
  double delta0;      // ~2.196132
  double alpha_star;  // ~0.235412
};

struct EquilibriumSolution {
  double gamma_star;  // stopping threshold in rho units
  double delta_star;  // least-favorable standardized gap
  double value;       // minimax regret
  double alpha;       // mis-identification probability at equilibrium
};

struct BaiSolution {
  double delta_bar;  // least-favorable standardized gap, fixed-horizon game
  double value;      // minimax regret at unit scale
};

namespace detail {

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw parameter_error(std::string(what) + " must be finite");
}

}  // namespace detail

// P(wrong arm implemented) for threshold gamma and standardized gap delta:
// (1 - e^{-dg}) / (e^{dg} - e^{-dg}), which reduces to the logistic tail
// 1/(1 + e^{dg}). Decreasing in gamma, equal to 1/2 at gamma = 0.
inline double misid_prob(double gamma, double delta) {
  detail::require_finite(gamma, "misid_prob: gamma");
  detail::require_finite(delta, "misid_prob: delta");
  if (gamma < 0.0) throw parameter_error("misid_prob: gamma must be >= 0");
  if (delta <= 0.0) throw parameter_error("misid_prob: delta must be > 0");
  const double x = delta * gamma;
  const double e = std::exp(-x);
  return e / (1.0 + e);
}

// E[hitting time of +-gamma] for drift delta/2, unit variance:
// (2/d^2) * dg * (e^{dg} + e^{-dg} - 2)/(e^{dg} - e^{-dg}) = (2g/d) tanh(dg/2),
// with limit gamma^2 as delta -> 0.
inline double expected_stopping_time(double gamma, double delta) {
  detail::require_finite(gamma, "expected_stopping_time: gamma");
  detail::require_finite(delta, "expected_stopping_time: delta");
  if (gamma < 0.0) throw parameter_error("expected_stopping_time: gamma must be >= 0");
  if (delta < 0.0) throw parameter_error("expected_stopping_time: delta must be >= 0");
  const double x = delta * gamma;
  if (x < 1e-6) {
    // series for tanh(x/2)/(x/2) = 1 - t^2/3 + 2 t^4/15, t = x/2
    const double t = 0.5 * x;
    return gamma * gamma * (1.0 - t * t / 3.0 + 2.0 * t * t * t * t / 15.0);
  }
  return (2.0 * gamma / delta) * std::tanh(0.5 * x);
}

// Frequentist regret of the gamma-threshold rule at reward gap |mu1 - mu0|:
// ((s1+s0)/2) d misid(g,d) + c E[tau], d = 2 gap/(s1+s0).
// Explicit limit branches keep closed_form_regret(0, g) = g/2 and
// closed_form_regret(g=0) = c g^2 exact.
inline double closed_form_regret(const DesignParams& params, double gamma, double abs_gap) {
  detail::require_finite(gamma, "closed_form_regret: gamma");
  detail::require_finite(abs_gap, "closed_form_regret: abs_gap");
  if (gamma < 0.0) throw parameter_error("closed_form_regret: gamma must be >= 0");
  if (abs_gap < 0.0) throw parameter_error("closed_form_regret: abs_gap must be >= 0");
  if (gamma == 0.0) return 0.5 * abs_gap;
  if (abs_gap == 0.0) return params.c * gamma * gamma;
  const double half_sum = 0.5 * params.sigma_sum();
  const double delta = abs_gap / half_sum;
  return half_sum * delta * misid_prob(gamma, delta) +
         params.c * expected_stopping_time(gamma, delta);
}

// Same objective parameterized by the standardized gap; the surface whose
// saddle is the equilibrium.
inline double regret_objective(const DesignParams& params, double gamma, double delta) {
  return closed_form_regret(params, gamma, 0.5 * params.sigma_sum() * delta);
}

namespace detail {

// Derivative in alpha of (s/2) d a + (2c/d^2)(1-2a) ln((1-a)/a).
inline double stop_cost_tradeoff_deriv(double alpha, double delta, double c, double ssum) {
  const double L = std::log((1.0 - alpha) / alpha);
  const double Lp = -1.0 / (alpha * (1.0 - alpha));
  return 0.5 * ssum * delta + (2.0 * c / (delta * delta)) * (-2.0 * L + (1.0 - 2.0 * alpha) * Lp);
}

// argmin over (0, 1/2) of the stop/cost tradeoff; convex with an interior
// minimum, so the derivative brackets a unique root.
inline double optimal_alpha(double delta, double c, double ssum) {
  double lo = 1e-15, hi = 0.5 - 1e-15;
  // derivative is -inf near 0 and positive at 1/2; shrink lo until finite
  double dlo = stop_cost_tradeoff_deriv(lo, delta, c, ssum);
  while (!std::isfinite(dlo)) {
    lo *= 10.0;
    if (lo > 0.4) throw solver_error("optimal_alpha: no bracket");
    dlo = stop_cost_tradeoff_deriv(lo, delta, c, ssum);
  }
  if (dlo >= 0.0) {
    // minimum pinned against alpha -> 0; cannot happen for delta > 0 finite
    throw solver_error("optimal_alpha: derivative positive at lower end");
  }
  return brent_root([&](double a) { return stop_cost_tradeoff_deriv(a, delta, c, ssum); },
                    lo, hi, 1e-15);
}

inline double d_regret_d_delta(const DesignParams& p, double gamma, double delta) {
  const double x = gamma * delta;
  const double a = misid_prob(gamma, delta);
  const double th = std::tanh(0.5 * x);
  const double sech2 = 1.0 - th * th;
  const double half_sum = 0.5 * p.sigma_sum();
  return half_sum * (a - x * a * (1.0 - a)) +
         p.c * (-(2.0 * gamma / (delta * delta)) * th + (gamma * gamma / delta) * sech2);
}

}  // namespace detail

// Best stopping threshold against the two-point state at standardized gap
// delta: gamma(delta) = ln((1-alpha)/alpha)/delta at the optimal error level.
inline double gamma_best_response(const DesignParams& params, double delta) {
  detail::require_finite(delta, "gamma_best_response: delta");
  if (delta <= 0.0) throw parameter_error("gamma_best_response: delta must be > 0");
  const double alpha = detail::optimal_alpha(delta, params.c, params.sigma_sum());
  return std::log((1.0 - alpha) / alpha) / delta;
}

// Adversarial standardized gap against a fixed threshold: the unique interior
// maximizer of the regret surface. Golden section on a doubling bracket,
// polished on the analytic derivative.
inline double delta_best_response(const DesignParams& params, double gamma) {
  detail::require_finite(gamma, "delta_best_response: gamma");
  if (gamma <= 0.0) throw parameter_error("delta_best_response: gamma must be > 0");
  const auto objective = [&](double d) { return regret_objective(params, gamma, d); };
  const Bracket br = bracket_max_by_doubling(objective, params.eta());
  double d = golden_max(objective, br.lo, br.hi, 1e-10);
  const double w = std::max(1e-6, 1e-5 * d);
  return polish_extremum(
      [&](double x) { return detail::d_regret_d_delta(params, gamma, x); },
      std::max(br.lo, d - w), std::min(br.hi, d + w), d);
}

namespace detail {

struct EquilibriumCore {
  double gamma;
  double delta;
  double residual;
};

// Damped alternating best responses; falls back to a nested min-max search
// when the alternation cycles instead of contracting.
inline EquilibriumCore solve_equilibrium_core(const DesignParams& params) {
  const double eta = params.eta();
  double gamma = 0.5 / eta;
  double delta = 2.0 * eta;
  double residual = std::numeric_limits<double>::infinity();
  constexpr int kMaxIter = 2000;
  for (int it = 0; it < kMaxIter; ++it) {
    const double g_br = gamma_best_response(params, delta);
    gamma = 0.5 * gamma + 0.5 * g_br;
    const double d_br = delta_best_response(params, gamma);
    delta = 0.5 * delta + 0.5 * d_br;
    if (it % 8 == 7 || it > 200) {
      residual = std::fabs(gamma - gamma_best_response(params, delta)) / std::max(1.0, gamma) +
                 std::fabs(delta - delta_best_response(params, gamma)) / std::max(1.0, delta);
      if (residual < 1e-11) break;
    }
  }
  if (residual < 1e-9) return {gamma, delta, residual};

  // fallback: outer minimization over gamma of the inner max over delta
  const auto upper_envelope = [&](double g) {
    return regret_objective(params, g, delta_best_response(params, g));
  };
  const double g_star = golden_min(upper_envelope, 1e-3 / eta, 20.0 / eta, 1e-12);
  const double d_star = delta_best_response(params, g_star);
  const double res = std::fabs(g_star - gamma_best_response(params, d_star)) / std::max(1.0, g_star) +
                     std::fabs(d_star - delta_best_response(params, g_star)) / std::max(1.0, d_star);
  return {g_star, d_star, res};
}

}  // namespace detail

inline EquilibriumSolution solve_equilibrium(const DesignParams& params, bool cross_check = true);

// Unit-scale equilibrium constants, solved once on first use and cached.
// The textbook decimals (0.536357, 2.19613, 0.235) live in tests only.
inline const UniversalConstants& universal_constants() {
  static const UniversalConstants cached = [] {
    const DesignParams unit(1.0, 1.0, 1.0);  // eta(1, 1, 1) = 1
    const detail::EquilibriumCore core = detail::solve_equilibrium_core(unit);
    if (core.residual > 1e-8)
      throw solver_error("universal_constants: unit-scale solve residual " +
                         std::to_string(core.residual));
    return UniversalConstants{core.gamma, core.delta, misid_prob(core.gamma, core.delta)};
  }();
  return cached;
}

// Scale map for the equilibrium threshold: gamma* = gamma0 / eta.
inline double gamma_star_for(double c, double sigma1, double sigma0) {
  return universal_constants().gamma0 / DesignParams(c, sigma1, sigma0).eta();
}

inline EquilibriumSolution solve_equilibrium(const DesignParams& params, bool cross_check) {
  const detail::EquilibriumCore core = detail::solve_equilibrium_core(params);
  if (core.residual > 1e-8)
    throw solver_error("solve_equilibrium: best-response residual " +
                       std::to_string(core.residual) + " exceeds 1e-8");
  if (cross_check) {
    const UniversalConstants& u = universal_constants();
    const double eta = params.eta();
    const double g_scaled = u.gamma0 / eta;
    const double d_scaled = u.delta0 * eta;
    if (std::fabs(core.gamma - g_scaled) > 1e-6 * std::max(1.0, g_scaled) ||
        std::fabs(core.delta - d_scaled) > 1e-6 * std::max(1.0, d_scaled))
      throw solver_error("solve_equilibrium: solution violates the eta scale map; got gamma=" +
                         std::to_string(core.gamma) + " delta=" + std::to_string(core.delta));
  }
  const double value = regret_objective(params, core.gamma, core.delta);
  return {core.gamma, core.delta, value, misid_prob(core.gamma, core.delta)};
}

// Fixed-horizon (best-arm identification) regret at reward gap |mu1 - mu0|:
// ((s1+s0)/2) d Phi(-d/2).
inline double bai_regret(const DesignParams& params, double abs_gap) {
  detail::require_finite(abs_gap, "bai_regret: abs_gap");
  if (abs_gap < 0.0) throw parameter_error("bai_regret: abs_gap must be >= 0");
  const double half_sum = 0.5 * params.sigma_sum();
  const double delta = abs_gap / half_sum;
  return half_sum * delta * norm_cdf(-0.5 * delta);
}

// Stationary point of d Phi(-d): Phi(-d) = d phi(d). Parameter free.
inline BaiSolution solve_bai_equilibrium() {
  const double d = brent_root(
      [](double x) { return norm_cdf(-x) - x * norm_pdf(x); }, 1e-8, 10.0, 1e-15);
  return {2.0 * d, 2.0 * d * norm_cdf(-d)};
}

// Mean experiment length of the adaptive rule relative to the fixed-length
// experiment matching its error rate: (1-2a) ln((1-a)/a) / (2 (PhiInv(1-a))^2)
// at the equilibrium mis-identification level. Parameter free, ~0.6.
inline double efficiency_ratio() {
  const double a = universal_constants().alpha_star;
  const double q = norm_quantile(1.0 - a);
  return (1.0 - 2.0 * a) * std::log((1.0 - a) / a) / (2.0 * q * q);
}

}  // namespace seqstop
