#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "seqstop/analytics.hpp"
#include "seqstop/errors.hpp"

namespace seqstop {

// Posterior probability of the favorable state given the score difference:
// logistic map, evaluated one-sided for stability at large |delta_star rho|.
inline double hjb_belief(double rho, double delta_star) {
  const double z = delta_star * rho;
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Regret of stopping at score rho: ((s1+s0) D*/2) min{e^{D* rho}, 1}/(1+e^{D* rho}).
// Symmetric, maximal at rho = 0 with value (s1+s0) D*/4.
inline double hjb_obstacle(double rho, double delta_star, double sigma_sum) {
  const double z = -std::fabs(delta_star * rho);
  const double e = std::exp(z);
  return 0.5 * sigma_sum * delta_star * (e / (1.0 + e));
}

struct HjbGrid {
  double rho_min = 0.0;
  double rho_max = 0.0;
  std::size_t n_rho = 0;
  double T = 6.0;
  std::size_t n_t = 0;  // 0: derived as 0.9x the monotonicity bound
  double delta_star = 0.0;
  double c = 1.0;
  double sigma_sum = 2.0;
  std::size_t keep_slices = 161;  // decimation of the stored surface

  double d_rho() const { return (rho_max - rho_min) / static_cast<double>(n_rho - 1); }
  double drift_max() const { return 0.5 * delta_star; }
  // explicit scheme keeps the update a convex combination only below this
  double stable_dt() const {
    const double h = d_rho();
    return h * h / (1.0 + drift_max() * h);
  }

  void validate() const {
    if (!(n_rho >= 3)) throw config_error("HjbGrid: n_rho must be >= 3");
    if (!(rho_min < 0.0 && rho_max > 0.0))
      throw config_error("HjbGrid: grid must straddle rho = 0");
    if (!(T > 0.0) || !(delta_star > 0.0) || !(c > 0.0) || !(sigma_sum > 0.0))
      throw config_error("HjbGrid: T, delta_star, c, sigma_sum must be > 0");
    const double gamma_star = gamma_star_for(c, 0.5 * sigma_sum, 0.5 * sigma_sum);
    if (rho_max < 3.0 * gamma_star || -rho_min < 3.0 * gamma_star)
      throw config_error("HjbGrid: spatial extent must reach 3x the stopping threshold " +
                         std::to_string(gamma_star));
    if (n_t > 0 && T / static_cast<double>(n_t) > stable_dt() * (1.0 + 1e-12))
      throw config_error("HjbGrid: requested n_t violates the stability bound");
  }

  // default grid for a given problem scale
  static HjbGrid for_params(double c, double sigma_sum, double delta_star, double d_rho,
                            double T = 6.0) {
    HjbGrid g;
    g.c = c;
    g.sigma_sum = sigma_sum;
    g.delta_star = delta_star;
    const double gamma_star = gamma_star_for(c, 0.5 * sigma_sum, 0.5 * sigma_sum);
    const double extent = 4.0 * gamma_star;
    g.n_rho = 2 * static_cast<std::size_t>(std::ceil(extent / d_rho)) + 1;
    g.rho_max = extent;
    g.rho_min = -extent;
    g.T = T;
    return g;
  }
};

struct HjbSolution {
  std::vector<double> rho;                  // spatial grid
  std::vector<double> times;                // kept time stamps, ascending from 0
  std::vector<std::vector<double>> values;  // values[k][i] = V(rho_i, times[k])
  std::vector<double> boundary_curve;       // per kept time: smallest rho > 0 stopped
  std::vector<std::uint8_t> stop_region;    // at t = 0
  double v00 = 0.0;                         // V(0, 0)
  double dV_dt_at0 = 0.0;                   // time derivative magnitude at t = 0
  double dt = 0.0;
  std::size_t n_t = 0;
};

namespace detail {

// First rho > 0 where stopping is active. The scheme's min() makes stopped
// values equal the obstacle exactly; the gap f = obstacle - V reaches zero at
// the first active node, so interpolating its sign change lands there.
inline double extract_boundary(const std::vector<double>& rho, const std::vector<double>& v,
                               const std::vector<double>& obstacle) {
  const std::size_t n = rho.size();
  std::size_t start = 0;
  while (start + 1 < n && rho[start] < 0.0) ++start;
  for (std::size_t i = start; i < n; ++i)
    if (v[i] == obstacle[i]) return rho[i];
  return rho[n - 1];
}

}  // namespace detail

// Backward march of the explicit monotone scheme
//   V <- min{ obstacle, V + dt (c + b upwind dV + 1/2 central d2V) },
// b(rho) = (D*/2)(2 m(rho) - 1), from V(., T) = obstacle, Dirichlet ends.
inline HjbSolution solve_hjb(const HjbGrid& grid) {
  grid.validate();
  const std::size_t n = grid.n_rho;
  const double h = grid.d_rho();
  std::size_t n_t = grid.n_t;
  if (n_t == 0) n_t = static_cast<std::size_t>(std::ceil(grid.T / (0.9 * grid.stable_dt())));
  const double dt = grid.T / static_cast<double>(n_t);

  HjbSolution sol;
  sol.dt = dt;
  sol.n_t = n_t;
  sol.rho.resize(n);
  std::vector<double> obstacle(n), b_pos(n), b_neg(n);
  for (std::size_t i = 0; i < n; ++i) {
    sol.rho[i] = grid.rho_min + static_cast<double>(i) * h;
    obstacle[i] = hjb_obstacle(sol.rho[i], grid.delta_star, grid.sigma_sum);
    const double b = 0.5 * grid.delta_star * (2.0 * hjb_belief(sol.rho[i], grid.delta_star) - 1.0);
    b_pos[i] = std::max(b, 0.0);
    b_neg[i] = std::max(-b, 0.0);
  }

  const std::size_t keep_every =
      std::max<std::size_t>(1, n_t / std::max<std::size_t>(1, grid.keep_slices - 1));
  std::vector<double> cur = obstacle;  // V(., T)
  std::vector<double> nxt(n);

  std::vector<std::pair<double, std::vector<double>>> kept;  // (time, layer), T first
  kept.emplace_back(grid.T, cur);

  const double inv_h = 1.0 / h;
  const double inv_h2 = inv_h * inv_h;
  std::vector<double> prev_layer;  // layer at t = dt, for the time derivative
  for (std::size_t k = 1; k <= n_t; ++k) {
    nxt[0] = obstacle[0];
    nxt[n - 1] = obstacle[n - 1];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double up = (cur[i + 1] - cur[i]) * inv_h;
      const double dn = (cur[i] - cur[i - 1]) * inv_h;
      const double d2 = (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]) * inv_h2;
      const double continuation =
          cur[i] + dt * (grid.c + b_pos[i] * up - b_neg[i] * dn + 0.5 * d2);
      nxt[i] = std::min(obstacle[i], continuation);
    }
    cur.swap(nxt);
    if ((k & 4095) == 0 && !std::isfinite(cur[n / 2]))
      throw numerical_error("solve_hjb: non-finite value at step " + std::to_string(k));
    if (k == n_t - 1) prev_layer = cur;
    if (k % keep_every == 0 || k == n_t)
      kept.emplace_back(grid.T - static_cast<double>(k) * dt, cur);
  }

  // order kept layers by ascending time (t = 0 first)
  sol.times.reserve(kept.size());
  sol.values.reserve(kept.size());
  sol.boundary_curve.reserve(kept.size());
  for (auto it = kept.rbegin(); it != kept.rend(); ++it) {
    sol.times.push_back(it->first);
    sol.boundary_curve.push_back(detail::extract_boundary(sol.rho, it->second, obstacle));
    sol.values.push_back(std::move(it->second));
  }

  const std::vector<double>& v0 = sol.values.front();
  sol.stop_region.resize(n);
  for (std::size_t i = 0; i < n; ++i) sol.stop_region[i] = (v0[i] == obstacle[i]) ? 1 : 0;

  // V at rho = 0 (grid point when symmetric, interpolated otherwise)
  const auto value_at_zero = [&](const std::vector<double>& v) {
    std::size_t i = 0;
    while (i + 1 < n && sol.rho[i + 1] <= 0.0) ++i;
    if (sol.rho[i] == 0.0) return v[i];
    const double w = (0.0 - sol.rho[i]) / (sol.rho[i + 1] - sol.rho[i]);
    return v[i] * (1.0 - w) + v[i + 1] * w;
  };
  sol.v00 = value_at_zero(v0);
  if (!prev_layer.empty())
    sol.dV_dt_at0 = std::fabs(value_at_zero(prev_layer) - sol.v00) / dt;
  return sol;
}

}  // namespace seqstop
