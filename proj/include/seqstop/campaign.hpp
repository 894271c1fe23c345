#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seqstop/analytics.hpp"
#include "seqstop/diffusion.hpp"
#include "seqstop/engine.hpp"
#include "seqstop/errors.hpp"
#include "seqstop/parallel.hpp"
#include "seqstop/rng.hpp"
#include "seqstop/summary.hpp"

namespace seqstop {

enum class CampaignMode { diffusion, discrete };

// Grid values are standardized gaps (Delta units) or raw sqrt(n)-localized
// reward gaps; the conversion factor is (sigma1+sigma0)/2 of the reference
// design.
enum class GapUnit { standardized, raw };

struct DiscreteModelSpec {
  OutcomeModel::Kind kind = OutcomeModel::Kind::gaussian;
  double p0 = 0.4;  // Bernoulli base rate
  double sd1 = 1.0, sd0 = 1.0;
};

struct CampaignSpec {
  CampaignMode mode = CampaignMode::diffusion;
  std::vector<double> grid;
  GapUnit gap_unit = GapUnit::standardized;
  std::size_t reps = 1000;
  std::uint64_t master_seed = 0;
  unsigned threads = 0;

  double c = 1.0;
  double sigma1 = 1.0, sigma0 = 1.0;  // diffusion-mode design sigmas
  double dt = 1e-3;
  std::optional<double> horizon;
  bool bridge_correction = false;
  std::optional<double> gamma_override;

  DiscreteConfig discrete;
  DiscreteModelSpec model;

  void validate() const {
    if (reps < 1) throw config_error("CampaignSpec: reps must be >= 1");
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (!(grid[i] > grid[i - 1]))
        throw config_error("CampaignSpec: gap grid must be strictly increasing");
  }

  // Reference design for equilibrium thresholds and closed-form overlays.
  // Bernoulli outcome scale is the base-rate sd on both arms (the localized
  // alternatives share it in the large-n limit).
  DesignParams design_params() const {
    if (mode == CampaignMode::diffusion) return DesignParams(c, sigma1, sigma0);
    if (model.kind == OutcomeModel::Kind::bernoulli) {
      const double s = std::sqrt(model.p0 * (1.0 - model.p0));
      return DesignParams(discrete.c, s, s);
    }
    return DesignParams(discrete.c, model.sd1, model.sd0);
  }

  double raw_gap(double grid_value) const {
    if (gap_unit == GapUnit::raw) return grid_value;
    return 0.5 * design_params().sigma_sum() * grid_value;
  }
};

namespace detail {

// Discrete outcome model for a signed localized gap h = sqrt(n)(mu1 - mu0),
// placed symmetrically around the reference.
inline OutcomeModel model_for_gap(const CampaignSpec& spec, double signed_local_gap) {
  const double shift = 0.5 * signed_local_gap / std::sqrt(static_cast<double>(spec.discrete.n));
  if (spec.model.kind == OutcomeModel::Kind::bernoulli) {
    const double p1 = spec.model.p0 + shift;
    const double p0 = spec.model.p0 - shift;
    if (!(p1 > 0.0 && p1 < 1.0 && p0 > 0.0 && p0 < 1.0))
      throw config_error("campaign: localized gap " + std::to_string(signed_local_gap) +
                         " pushes a Bernoulli rate outside (0,1) at n=" +
                         std::to_string(spec.discrete.n));
    return OutcomeModel::bernoulli(p1, p0);
  }
  return OutcomeModel::gaussian(shift, -shift, spec.model.sd1, spec.model.sd0);
}

struct RunAccumulator {
  std::vector<double> regret, tau, n_used;
  std::vector<unsigned char> misid, capped;
  explicit RunAccumulator(std::size_t reps)
      : regret(reps), tau(reps), n_used(reps), misid(reps), capped(reps) {}
};

// Replication i runs on stream derive(seed, i); a data-dependent estimation
// failure (degenerate exploration sample) redraws on derive(seed, i + k*reps),
// which no base replication uses, so determinism is preserved.
template <class Fn>
auto run_with_redraw(std::uint64_t seed, std::size_t i, std::size_t reps, Fn&& fn) {
  for (std::uint64_t k = 0;; ++k) {
    RngStream rng = RngStream::for_replication(seed, i + k * reps);
    try {
      return fn(rng);
    } catch (const estimation_error&) {
      if (k >= 64) throw;
    }
  }
}

inline RegretSummary run_discrete_batch(const CampaignSpec& spec, const OutcomeModel& model,
                                        std::uint64_t batch_seed) {
  RunAccumulator acc(spec.reps);
  const double gap = model.true_gap();
  parallel_for(spec.reps, spec.threads, [&](std::size_t i) {
    const ExperimentResult r = run_with_redraw(
        batch_seed, i, spec.reps,
        [&](RngStream& rng) { return run_experiment(spec.discrete, model, rng); });
    acc.regret[i] = r.regret;
    acc.tau[i] = r.tau;
    acc.n_used[i] = static_cast<double>(r.n_used);
    acc.misid[i] = (gap > 0.0 && !r.chose_one) || (gap < 0.0 && r.chose_one) ? 1 : 0;
    acc.capped[i] = r.hit_boundary ? 0 : 1;
  });
  return summarize_replications(acc.regret, acc.tau, acc.n_used, acc.misid, acc.capped);
}

}  // namespace detail

struct ProfilePoint {
  double gap = 0.0;  // grid value, in the campaign's own gap unit
  RegretSummary summary;
  double closed_form = 0.0;  // diffusion-limit regret at this gap
};

struct ProfileResult {
  std::vector<ProfilePoint> points;
  EquilibriumSolution equilibrium;  // reference-design equilibrium
  double v_star = 0.0;
  double gamma_used = 0.0;
};

// One summary per grid point. Point k draws its replication streams from
// derive_stream_seed(master_seed, k), so points are independent and the whole
// table is reproducible at any thread count.
inline ProfileResult regret_profile(const CampaignSpec& spec) {
  spec.validate();
  if (spec.grid.empty()) {
    ProfileResult out;
    const DesignParams params = spec.design_params();
    out.equilibrium = solve_equilibrium(params);
    out.v_star = out.equilibrium.value;
    out.gamma_used = spec.gamma_override.value_or(out.equilibrium.gamma_star);
    return out;
  }
  const DesignParams params = spec.design_params();
  ProfileResult out;
  out.equilibrium = solve_equilibrium(params);
  out.v_star = out.equilibrium.value;
  out.gamma_used = spec.gamma_override.value_or(out.equilibrium.gamma_star);
  out.points.reserve(spec.grid.size());
  for (std::size_t k = 0; k < spec.grid.size(); ++k) {
    const double h = spec.raw_gap(spec.grid[k]);
    const std::uint64_t point_seed = derive_stream_seed(spec.master_seed, k);
    ProfilePoint pt;
    pt.gap = spec.grid[k];
    if (spec.mode == CampaignMode::diffusion) {
      const DiffusionSpec dspec(params, 0.5 * h, -0.5 * h, out.gamma_used, spec.horizon, spec.dt,
                                spec.bridge_correction);
      pt.summary = estimate_regret(dspec, spec.reps, point_seed, spec.threads);
    } else {
      DiscreteConfig cfg = spec.discrete;
      if (spec.gamma_override) cfg.gamma = spec.gamma_override;
      CampaignSpec point_spec = spec;
      point_spec.discrete = cfg;
      pt.summary = detail::run_discrete_batch(point_spec, detail::model_for_gap(spec, h),
                                              point_seed);
    }
    pt.closed_form = closed_form_regret(params, out.gamma_used, std::fabs(h));
    out.points.push_back(pt);
  }
  return out;
}

struct LfpResult {
  RegretSummary summary;
  EquilibriumSolution equilibrium;
  double v_star = 0.0;
  double gap_magnitude = 0.0;  // |mu1 - mu0| at the two support points
  // conditional regret means given nature's draw
  double mean_plus = 0.0, se_plus = 0.0;
  double mean_minus = 0.0, se_minus = 0.0;
  std::size_t count_plus = 0, count_minus = 0;
};

// Nature draws the two-point state with probability 1/2 per replication
// (first uniform of the replication stream), then the experiment runs on the
// remainder of the stream.
inline LfpResult lfp_bayes_regret(const CampaignSpec& spec) {
  spec.validate();
  const DesignParams params = spec.design_params();
  LfpResult out;
  out.equilibrium = solve_equilibrium(params);
  out.v_star = out.equilibrium.value;
  const double h = 0.5 * params.sigma_sum() * out.equilibrium.delta_star;
  out.gap_magnitude = h;
  const double gamma = spec.gamma_override.value_or(out.equilibrium.gamma_star);

  detail::RunAccumulator acc(spec.reps);
  std::vector<unsigned char> plus(spec.reps);
  struct RepOut {
    double regret, tau, n_used;
    unsigned char misid, capped, plus;
  };
  parallel_for(spec.reps, spec.threads, [&](std::size_t i) {
    const RepOut r = detail::run_with_redraw(
        spec.master_seed, i, spec.reps, [&](RngStream& rng) -> RepOut {
          const double sign = rng.next_u01() < 0.5 ? 1.0 : -1.0;
          const unsigned char is_plus = sign > 0.0 ? 1 : 0;
          if (spec.mode == CampaignMode::diffusion) {
            const DiffusionSpec dspec(params, 0.5 * sign * h, -0.5 * sign * h, gamma,
                                      spec.horizon, spec.dt, spec.bridge_correction);
            const PathOutcome p = simulate_path(dspec, rng);
            const bool mis = (sign > 0.0 && !p.chose_one) || (sign < 0.0 && p.chose_one);
            return {p.regret, p.tau, 0.0, static_cast<unsigned char>(mis ? 1 : 0),
                    static_cast<unsigned char>(p.hit_boundary ? 0 : 1), is_plus};
          }
          DiscreteConfig cfg = spec.discrete;
          if (spec.gamma_override) cfg.gamma = spec.gamma_override;
          CampaignSpec point_spec = spec;
          point_spec.discrete = cfg;
          const OutcomeModel model = detail::model_for_gap(point_spec, sign * h);
          const ExperimentResult er = run_experiment(cfg, model, rng);
          const bool mis = (sign > 0.0 && !er.chose_one) || (sign < 0.0 && er.chose_one);
          return {er.regret, er.tau, static_cast<double>(er.n_used),
                  static_cast<unsigned char>(mis ? 1 : 0),
                  static_cast<unsigned char>(er.hit_boundary ? 0 : 1), is_plus};
        });
    acc.regret[i] = r.regret;
    acc.tau[i] = r.tau;
    acc.n_used[i] = r.n_used;
    acc.misid[i] = r.misid;
    acc.capped[i] = r.capped;
    plus[i] = r.plus;
  });
  out.summary = summarize_replications(acc.regret, acc.tau, acc.n_used, acc.misid, acc.capped);

  for (int side = 0; side < 2; ++side) {
    double sum = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < spec.reps; ++i)
      if (plus[i] == (side == 0 ? 1 : 0)) {
        sum += acc.regret[i];
        ++cnt;
      }
    const double mean = cnt ? sum / static_cast<double>(cnt) : 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < spec.reps; ++i)
      if (plus[i] == (side == 0 ? 1 : 0)) {
        const double d = acc.regret[i] - mean;
        ss += d * d;
      }
    const double se = cnt > 1 ? std::sqrt(ss / static_cast<double>(cnt - 1) /
                                          static_cast<double>(cnt))
                              : 0.0;
    if (side == 0) {
      out.mean_plus = mean;
      out.se_plus = se;
      out.count_plus = cnt;
    } else {
      out.mean_minus = mean;
      out.se_minus = se;
      out.count_minus = cnt;
    }
  }
  return out;
}

struct GainReport {
  EquilibriumSolution equilibrium;
  double e_tau_formula = 0.0;
  double e_tau_mc = 0.0;
  double e_tau_mc_se = 0.0;
  double t_fixed = 0.0;        // duration a fixed-length design needs
  double ratio_formula = 0.0;  // e_tau_formula / t_fixed
  double ratio_mc = 0.0;
  double reference = 0.0;  // parameter-free analytic constant (~0.6)
};

// Mean adaptive duration vs the fixed-duration benchmark matching its error
// rate: T_fixed = 4 (PhiInv(1-alpha*))^2 / Delta*^2. The Monte Carlo side
// uses bridge-corrected crossing detection so the comparison carries no
// discretization allowance.
inline GainReport adaptivity_gain_report(const DesignParams& params, std::size_t reps,
                                         std::uint64_t master_seed, double dt = 1e-3,
                                         unsigned threads = 0) {
  GainReport out;
  out.equilibrium = solve_equilibrium(params);
  const double gamma = out.equilibrium.gamma_star;
  const double delta = out.equilibrium.delta_star;
  out.e_tau_formula = expected_stopping_time(gamma, delta);
  const double q = norm_quantile(1.0 - out.equilibrium.alpha);
  out.t_fixed = 4.0 * q * q / (delta * delta);
  out.ratio_formula = out.e_tau_formula / out.t_fixed;
  out.reference = efficiency_ratio();

  const double h = 0.5 * params.sigma_sum() * delta;
  const DiffusionSpec dspec(params, 0.5 * h, -0.5 * h, gamma, std::nullopt, dt, true);
  const RegretSummary s = estimate_regret(dspec, reps, master_seed, threads);
  out.e_tau_mc = s.mean_tau;
  out.e_tau_mc_se = s.tau_std_error;
  out.ratio_mc = s.mean_tau / out.t_fixed;
  return out;
}

}  // namespace seqstop
