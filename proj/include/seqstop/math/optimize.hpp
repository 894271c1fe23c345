#pragma once

#include <cmath>
#include <functional>
#include <utility>

#include "seqstop/errors.hpp"

namespace seqstop {

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
};

// Golden-section minimization on [lo, hi]; f must be unimodal there.
// Stops when the interval shrinks below rel_tol * |x| + abs_tol.
template <class F>
double golden_min(F&& f, double lo, double hi, double rel_tol = 1e-10,
                  double abs_tol = 1e-14, int max_iter = 240) {
  constexpr double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < max_iter; ++it) {
    if (b - a <= rel_tol * (std::fabs(x1) + std::fabs(x2)) * 0.5 + abs_tol) break;
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

template <class F>
double golden_max(F&& f, double lo, double hi, double rel_tol = 1e-10,
                  double abs_tol = 1e-14, int max_iter = 240) {
  return golden_min([&](double x) { return -f(x); }, lo, hi, rel_tol, abs_tol, max_iter);
}

// Expands [x0/2, x0, 2*x0] by doubling until f(mid) dominates both ends,
// i.e. a maximizer is bracketed. Throws solver_error when the objective keeps
// rising past hi_cap (no interior maximum within reach).
template <class F>
Bracket bracket_max_by_doubling(F&& f, double x0, double hi_cap = 1e10,
                                double lo_floor = 1e-14) {
  double a = 0.5 * x0, b = x0, c = 2.0 * x0;
  double fa = f(a), fb = f(b), fc = f(c);
  while (fc >= fb) {
    a = b;
    fa = fb;
    b = c;
    fb = fc;
    c *= 2.0;
    if (c > hi_cap)
      throw solver_error("bracket_max_by_doubling: objective still increasing at " +
                         std::to_string(c) + "; diverging bracket");
    fc = f(c);
  }
  while (fa > fb) {
    c = b;
    fc = fb;
    b = a;
    fb = fa;
    a *= 0.5;
    if (a < lo_floor)
      throw solver_error("bracket_max_by_doubling: no interior maximum above " +
                         std::to_string(lo_floor));
    fa = f(a);
  }
  return {a, c};
}

// Brent's method for a root of f on [a, b]; requires a sign change.
template <class F>
double brent_root(F&& f, double a, double b, double tol = 1e-14, int max_iter = 200) {
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0))
    throw solver_error("brent_root: endpoints do not bracket a root");
  double c = a, fc = fa, d = b - a, e = d;
  for (int it = 0; it < max_iter; ++it) {
    if (std::fabs(fc) < std::fabs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * 2.220446049250313e-16 * std::fabs(b) + 0.5 * tol;
    const double xm = 0.5 * (c - b);
    if (std::fabs(xm) <= tol1 || fb == 0.0) return b;
    if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
      double p, q, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::fabs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::fabs(tol1 * q), std::fabs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::fabs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = f(b);
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      e = d = b - a;
    }
  }
  return b;
}

// Locates the root of a derivative inside [lo, hi] when it changes sign
// there; otherwise returns the golden estimate unchanged. Used to polish
// bracketed extrema past the ~sqrt(eps) flatness limit of section search.
template <class Deriv>
double polish_extremum(Deriv&& dfdx, double lo, double hi, double fallback) {
  double dlo = dfdx(lo), dhi = dfdx(hi);
  if (!std::isfinite(dlo) || !std::isfinite(dhi)) return fallback;
  if ((dlo > 0.0) == (dhi > 0.0)) return fallback;
  return brent_root(dfdx, lo, hi);
}

}  // namespace seqstop
