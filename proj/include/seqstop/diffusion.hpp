#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "seqstop/analytics.hpp"
#include "seqstop/errors.hpp"
#include "seqstop/parallel.hpp"
#include "seqstop/rng.hpp"
#include "seqstop/summary.hpp"

namespace seqstop {

// One continuous-time experiment: Euler-Maruyama on the score difference
// rho with drift (mu1-mu0)/(sigma1+sigma0), threshold stopping at |rho| >=
// gamma.
struct DiffusionSpec {
  DesignParams params;
  double mu1 = 0.0;
  double mu0 = 0.0;
  double gamma = 0.0;
  std::optional<double> horizon;  // time cap; must be a positive multiple of dt
  double dt = 1e-3;
  // Optional compensation for the O(sqrt(dt)) upward bias of grid-time
  // crossing detection: between grid points, each barrier is tested with the
  // Brownian-bridge crossing probability (upper barrier first).
  bool bridge_correction = false;

  DiffusionSpec(DesignParams p, double mu1_, double mu0_, double gamma_,
                std::optional<double> horizon_ = std::nullopt, double dt_ = 1e-3,
                bool bridge = false)
      : params(p), mu1(mu1_), mu0(mu0_), gamma(gamma_), horizon(horizon_), dt(dt_),
        bridge_correction(bridge) {
    if (!(std::isfinite(dt) && dt > 0.0)) throw parameter_error("DiffusionSpec: dt must be > 0");
    if (!(std::isfinite(gamma) && gamma >= 0.0))
      throw parameter_error("DiffusionSpec: gamma must be >= 0");
    if (!std::isfinite(mu1) || !std::isfinite(mu0))
      throw parameter_error("DiffusionSpec: means must be finite");
    if (horizon) {
      const double steps = *horizon / dt;
      if (!(*horizon > 0.0) || std::fabs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
        throw parameter_error("DiffusionSpec: horizon must be a positive multiple of dt");
    }
  }

  double gap() const { return mu1 - mu0; }
  double drift() const { return gap() / params.sigma_sum(); }
};

struct PathOutcome {
  double tau = 0.0;
  bool chose_one = false;
  bool hit_boundary = false;
  double regret = 0.0;
};

inline double realized_regret(double gap, bool chose_one, double c, double tau) {
  return std::max(gap, 0.0) - gap * (chose_one ? 1.0 : 0.0) + c * tau;
}

// Ties at rho = 0 resolve to arm 1 so the path is a deterministic function of
// its stream.
inline PathOutcome simulate_path(const DiffusionSpec& spec, RngStream& rng) {
  PathOutcome out;
  const double gap = spec.gap();
  if (spec.gamma == 0.0) {
    out.tau = 0.0;
    out.chose_one = true;
    out.hit_boundary = true;
    out.regret = realized_regret(gap, out.chose_one, spec.params.c, out.tau);
    return out;
  }
  const double drift_dt = spec.drift() * spec.dt;
  const double sqrt_dt = std::sqrt(spec.dt);
  const std::uint64_t max_steps =
      spec.horizon ? static_cast<std::uint64_t>(std::llround(*spec.horizon / spec.dt))
                   : ~std::uint64_t{0};
  double rho = 0.0;
  std::uint64_t step = 0;
  bool hit = false;
  while (step < max_steps) {
    const double prev = rho;
    rho = prev + drift_dt + sqrt_dt * rng.next_normal();
    ++step;
    if (rho >= spec.gamma || rho <= -spec.gamma) {
      hit = true;
      break;
    }
    if (spec.bridge_correction) {
      const double pu = std::exp(-2.0 * (spec.gamma - prev) * (spec.gamma - rho) / spec.dt);
      const double pd = std::exp(-2.0 * (prev + spec.gamma) * (rho + spec.gamma) / spec.dt);
      const double u = rng.next_u01();
      if (u < pu) {
        rho = spec.gamma;
        hit = true;
        break;
      }
      if (u < pu + pd) {
        rho = -spec.gamma;
        hit = true;
        break;
      }
    }
  }
  out.tau = static_cast<double>(step) * spec.dt;
  out.hit_boundary = hit;
  out.chose_one = rho >= 0.0;
  out.regret = realized_regret(gap, out.chose_one, spec.params.c, out.tau);
  return out;
}

// reps independent paths on streams derive_stream_seed(master_seed, i);
// deterministic for fixed (spec, reps, master_seed) at any thread count.
inline RegretSummary estimate_regret(const DiffusionSpec& spec, std::size_t reps,
                                     std::uint64_t master_seed, unsigned threads = 0) {
  if (reps < 1) throw parameter_error("estimate_regret: reps must be >= 1");
  std::vector<double> regret(reps), tau(reps);
  std::vector<unsigned char> misid(reps), capped(reps);
  const double gap = spec.gap();
  parallel_for(reps, threads, [&](std::size_t i) {
    RngStream rng = RngStream::for_replication(master_seed, i);
    const PathOutcome p = simulate_path(spec, rng);
    regret[i] = p.regret;
    tau[i] = p.tau;
    misid[i] = (gap > 0.0 && !p.chose_one) || (gap < 0.0 && p.chose_one) ? 1 : 0;
    capped[i] = p.hit_boundary ? 0 : 1;
  });
  return summarize_replications(regret, tau, {}, misid, capped);
}

}  // namespace seqstop
