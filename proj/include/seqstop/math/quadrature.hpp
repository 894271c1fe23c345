#pragma once

#include <cmath>
#include <string>

#include "seqstop/errors.hpp"

namespace seqstop {
namespace detail {

// Gauss-Kronrod 7-15 nodes/weights on [-1,1] (positive half; node 0 last).
inline constexpr double kGK15Nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr double kGK15Weights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
// Gauss-7 weights aligned with odd Kronrod nodes (indices 1,3,5,7).
inline constexpr double kG7Weights[4] = {0.129484966168870, 0.279705391489277,
                                         0.381830050505119, 0.417959183673469};

template <class F>
void gk15(F&& f, double a, double b, double& kronrod, double& err) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double resk = 0.0, resg = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double dx = half * kGK15Nodes[i];
    const double fsum = (i == 7) ? f(mid) : f(mid - dx) + f(mid + dx);
    resk += kGK15Weights[i] * fsum;
    if (i % 2 == 1 || i == 7) resg += kG7Weights[i / 2] * fsum;
  }
  kronrod = resk * half;
  err = std::fabs((resk - resg) * half);
}

template <class F>
double gk_adaptive(F&& f, double a, double b, double tol, int depth, double* achieved) {
  double val, err;
  gk15(f, a, b, val, err);
  if (err <= tol || depth <= 0) {
    if (achieved) *achieved += err;
    return val;
  }
  const double mid = 0.5 * (a + b);
  return gk_adaptive(f, a, mid, 0.5 * tol, depth - 1, achieved) +
         gk_adaptive(f, mid, b, 0.5 * tol, depth - 1, achieved);
}

}  // namespace detail

// Adaptive Gauss-Kronrod integral of f over [a, b] (signed when b < a).
// Tolerance is relative to the integral magnitude with an absolute floor;
// throws numerical_error when the error estimate cannot be met.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-10,
                 double abs_floor = 1e-300, int max_depth = 40) {
  if (a == b) return 0.0;
  const double sign = (b >= a) ? 1.0 : -1.0;
  const double lo = std::min(a, b), hi = std::max(a, b);
  double coarse, coarse_err;
  detail::gk15(f, lo, hi, coarse, coarse_err);
  const double scale = std::max(std::fabs(coarse), abs_floor);
  double achieved = 0.0;
  const double val =
      detail::gk_adaptive(f, lo, hi, rel_tol * scale, max_depth, &achieved);
  const double budget = rel_tol * std::max(std::fabs(val), scale);
  if (achieved > 50.0 * budget && achieved > 1e-12 * std::fabs(val))
    throw numerical_error("integrate: adaptive quadrature reached depth limit, error estimate " +
                          std::to_string(achieved));
  return sign * val;
}

}  // namespace seqstop
