#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "seqstop/analytics.hpp"
#include "seqstop/errors.hpp"
#include "seqstop/rng.hpp"

namespace seqstop {

// Outcome generator for one discrete-time experiment. Custom samplers follow
// the contract (arm, uniform random source) -> real outcome; the optional
// influence transform is applied to outcomes before they enter the running
// sums (the welfare functional hook), never to the raw draws themselves.
struct OutcomeModel {
  enum class Kind { bernoulli, gaussian, custom };

  Kind kind = Kind::gaussian;
  double mean1 = 0.0, mean0 = 0.0;  // true per-observation means
  double sd1 = 1.0, sd0 = 1.0;      // true per-observation standard deviations
  double reference_mean = 0.0;      // centering used in known-variance mode
  double p1 = 0.0, p0 = 0.0;        // Bernoulli success probabilities
  std::function<double(int, RngStream&)> sampler;
  std::function<double(double)> influence;

  static OutcomeModel bernoulli(double p1, double p0) {
    if (!(p1 > 0.0 && p1 < 1.0 && p0 > 0.0 && p0 < 1.0))
      throw parameter_error("OutcomeModel::bernoulli: probabilities must lie in (0,1)");
    OutcomeModel m;
    m.kind = Kind::bernoulli;
    m.p1 = p1;
    m.p0 = p0;
    m.mean1 = p1;
    m.mean0 = p0;
    m.sd1 = std::sqrt(p1 * (1.0 - p1));
    m.sd0 = std::sqrt(p0 * (1.0 - p0));
    m.reference_mean = p0;
    return m;
  }

  static OutcomeModel gaussian(double mean1, double mean0, double sd1, double sd0,
                               double reference = 0.0) {
    if (!(sd1 > 0.0 && sd0 > 0.0))
      throw parameter_error("OutcomeModel::gaussian: sds must be > 0");
    OutcomeModel m;
    m.kind = Kind::gaussian;
    m.mean1 = mean1;
    m.mean0 = mean0;
    m.sd1 = sd1;
    m.sd0 = sd0;
    m.reference_mean = reference;
    return m;
  }

  static OutcomeModel custom(std::function<double(int, RngStream&)> sampler, double mean1,
                             double mean0, double sd1, double sd0, double reference = 0.0) {
    if (!sampler) throw parameter_error("OutcomeModel::custom: sampler required");
    OutcomeModel m = gaussian(mean1, mean0, sd1, sd0, reference);
    m.kind = Kind::custom;
    m.sampler = std::move(sampler);
    return m;
  }

  double draw(int arm, RngStream& rng) const {
    switch (kind) {
      case Kind::bernoulli:
        return rng.next_bernoulli(arm == 1 ? p1 : p0) ? 1.0 : 0.0;
      case Kind::gaussian:
        return (arm == 1 ? mean1 : mean0) + (arm == 1 ? sd1 : sd0) * rng.next_normal();
      case Kind::custom:
        return sampler(arm, rng);
    }
    return 0.0;
  }

  double statistic(double y) const { return influence ? influence(y) : y; }
  double true_gap() const { return mean1 - mean0; }
};

enum class VarianceMode { known, forced_exploration, conjugate_prior };

struct ExplorationConfig {
  std::size_t floor_obs = 50;  // minimum total exploration observations
  double fraction = 0.05;      // fraction of n explored
  std::optional<std::size_t> total_override;

  std::size_t total(std::size_t n) const {
    if (total_override) return *total_override;
    const auto frac = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
    return std::max(floor_obs, frac);
  }
};

struct PriorConfig {
  // Beta prior on each Bernoulli success probability.
  double beta_a0 = 2.0;
  double beta_b0 = 3.0;
  // Inverse-gamma prior on each outcome variance (outcomes treated as
  // Gaussian with known mean at the model reference).
  double ig_a0 = 2.0;
  double ig_b0 = 3.0;
};

struct DiscreteConfig {
  std::size_t n = 1;                // observations per unit of time
  double c = 1.0;                   // cost constant; per-period cost c n^{-3/2}
  std::optional<double> horizon_T;  // time cap
  std::optional<double> gamma;      // threshold override; otherwise derived
  VarianceMode variance_mode = VarianceMode::known;
  ExplorationConfig exploration;
  PriorConfig prior;
  std::size_t batch_size = 1;  // observations per decision epoch
  std::size_t max_periods = 100000000;

  double per_period_cost() const {
    return c / (static_cast<double>(n) * std::sqrt(static_cast<double>(n)));
  }

  void validate() const {
    if (n < 1) throw config_error("DiscreteConfig: n must be >= 1");
    if (!(std::isfinite(c) && c > 0.0)) throw config_error("DiscreteConfig: c must be > 0");
    if (batch_size < 1) throw config_error("DiscreteConfig: batch_size must be >= 1");
    if (horizon_T && !(*horizon_T > 0.0)) throw config_error("DiscreteConfig: horizon_T must be > 0");
    if (gamma && !(std::isfinite(*gamma) && *gamma >= 0.0))
      throw config_error("DiscreteConfig: gamma must be >= 0");
    if (variance_mode == VarianceMode::conjugate_prior) {
      if (!(prior.beta_a0 > 0.0 && prior.beta_b0 > 0.0))
        throw config_error("DiscreteConfig: Beta prior parameters must be > 0");
      if (!(prior.ig_a0 > 1.0 && prior.ig_b0 > 0.0))
        throw config_error("DiscreteConfig: inverse-gamma prior needs a0 > 1, b0 > 0");
    }
  }
};

// Running state of one experiment. rho is recomputable from the sums:
// rho = (sum1 - pulls1 * center)/(sd1 sqrt(n)) - (sum0 - pulls0 * center)/(sd0 sqrt(n)).
struct EngineState {
  std::size_t n = 1;
  long long pulls1 = 0, pulls0 = 0;
  double sum1 = 0.0, sum0 = 0.0;
  double sumsq1 = 0.0, sumsq0 = 0.0;
  double center = 0.0;
  double sigma_hat1 = 0.0, sigma_hat0 = 0.0;
  double gamma = 0.0;  // working threshold
  double rho = 0.0;
  // conjugate posterior parameters (Beta or inverse-gamma per arm)
  double post_a1 = 0.0, post_b1 = 0.0, post_a0 = 0.0, post_b0 = 0.0;

  std::size_t periods() const { return static_cast<std::size_t>(pulls1 + pulls0); }
  double t() const { return static_cast<double>(pulls1 + pulls0) / static_cast<double>(n); }
  double q1_frac() const {
    const auto m = pulls1 + pulls0;
    return m == 0 ? 0.0 : static_cast<double>(pulls1) / static_cast<double>(m);
  }

  void recompute_rho() {
    const double sqn = std::sqrt(static_cast<double>(n));
    rho = (sum1 - static_cast<double>(pulls1) * center) / (sigma_hat1 * sqn) -
          (sum0 - static_cast<double>(pulls0) * center) / (sigma_hat0 * sqn);
  }
};

// Deterministic Neyman tracking: pull arm 1 iff its share is not above the
// target sd1/(sd1+sd0). Keeps |q_a(t)/t - sigma_a/(sigma1+sigma0)| <= 1/(nt).
inline int neyman_tracking_arm(const EngineState& state) {
  if (!(state.sigma_hat1 > 0.0) && !(state.sigma_hat0 > 0.0))
    throw config_error("neyman_tracking_arm: both working sigmas are zero");
  if (!(state.sigma_hat1 > 0.0) || !(state.sigma_hat0 > 0.0))
    throw config_error("neyman_tracking_arm: working sigmas must be positive");
  const double w = state.sigma_hat1 / (state.sigma_hat1 + state.sigma_hat0);
  const double m = static_cast<double>(state.pulls1 + state.pulls0);
  return static_cast<double>(state.pulls1) <= m * w ? 1 : 0;
}

// Record one outcome and refresh the statistic in O(1).
inline void update_rho(EngineState& state, int arm, double outcome) {
  if (arm != 0 && arm != 1) throw parameter_error("update_rho: arm must be 0 or 1");
  if (!std::isfinite(outcome)) throw parameter_error("update_rho: outcome must be finite");
  if (arm == 1) {
    ++state.pulls1;
    state.sum1 += outcome;
    state.sumsq1 += outcome * outcome;
  } else {
    ++state.pulls0;
    state.sum0 += outcome;
    state.sumsq0 += outcome * outcome;
  }
  state.recompute_rho();
}

// Threshold/horizon predicate, evaluated by the run loop only at decision
// epochs (multiples of batch_size observations).
inline bool should_stop(const EngineState& state, const DiscreteConfig& config) {
  const double gamma = config.gamma ? *config.gamma : state.gamma;
  if (std::fabs(state.rho) >= gamma) return true;
  return config.horizon_T && state.t() >= *config.horizon_T;
}

struct ExplorationEstimate {
  double sigma_hat1 = 0.0;
  double sigma_hat0 = 0.0;
  std::size_t consumed = 0;
};

namespace detail {

// Alternating 1,0,1,0 exploration; outcomes enter the state sums and count
// toward cost and time.
inline ExplorationEstimate explore_into_state(EngineState& state, const DiscreteConfig& config,
                                              const OutcomeModel& model, RngStream& rng) {
  const std::size_t total = config.exploration.total(config.n);
  for (std::size_t i = 0; i < total; ++i) {
    const int arm = (i % 2 == 0) ? 1 : 0;
    const double y = model.statistic(model.draw(arm, rng));
    if (arm == 1) {
      ++state.pulls1;
      state.sum1 += y;
      state.sumsq1 += y * y;
    } else {
      ++state.pulls0;
      state.sum0 += y;
      state.sumsq0 += y * y;
    }
  }
  if (state.pulls1 < 2 || state.pulls0 < 2)
    throw config_error("forced exploration: need at least 2 observations per arm, got " +
                       std::to_string(state.pulls1) + "/" + std::to_string(state.pulls0));
  const auto sd = [](double sum, double sumsq, long long k) {
    const double kk = static_cast<double>(k);
    const double var = (sumsq - sum * sum / kk) / (kk - 1.0);
    return var > 0.0 ? std::sqrt(var) : 0.0;
  };
  ExplorationEstimate est;
  est.sigma_hat1 = sd(state.sum1, state.sumsq1, state.pulls1);
  est.sigma_hat0 = sd(state.sum0, state.sumsq0, state.pulls0);
  est.consumed = total;
  if (!(est.sigma_hat1 > 0.0) || !(est.sigma_hat0 > 0.0))
    throw estimation_error("forced exploration: degenerate outcomes, estimated sigma is zero");
  return est;
}

}  // namespace detail

// Exploration phase on a fresh state: sample standard deviations (n-1
// denominator) and the number of observations consumed.
inline ExplorationEstimate forced_exploration_estimate(const DiscreteConfig& config,
                                                       const OutcomeModel& model, RngStream& rng) {
  config.validate();
  EngineState state;
  state.n = config.n;
  return detail::explore_into_state(state, config, model, rng);
}

namespace detail {

inline void refresh_from_posterior(EngineState& state, const OutcomeModel& model) {
  if (model.kind == OutcomeModel::Kind::bernoulli) {
    const double pbar1 = state.post_a1 / (state.post_a1 + state.post_b1);
    const double pbar0 = state.post_a0 / (state.post_a0 + state.post_b0);
    state.sigma_hat1 = std::sqrt(pbar1 * (1.0 - pbar1));
    state.sigma_hat0 = std::sqrt(pbar0 * (1.0 - pbar0));
    state.center = 0.5 * (pbar1 + pbar0);
  } else {
    state.sigma_hat1 = std::sqrt(state.post_b1 / (state.post_a1 - 1.0));
    state.sigma_hat0 = std::sqrt(state.post_b0 / (state.post_a0 - 1.0));
    state.center = model.reference_mean;
  }
}

}  // namespace detail

// Posterior-mean plug-in refresh after one observation: Beta-Bernoulli on
// success probabilities, inverse-gamma on variances (known mean at the model
// reference) otherwise.
inline void conjugate_prior_update(EngineState& state, int arm, double outcome,
                                   const OutcomeModel& model) {
  if (model.kind == OutcomeModel::Kind::bernoulli) {
    if (arm == 1) {
      state.post_a1 += outcome;
      state.post_b1 += 1.0 - outcome;
    } else {
      state.post_a0 += outcome;
      state.post_b0 += 1.0 - outcome;
    }
  } else {
    const double dev = outcome - model.reference_mean;
    if (arm == 1) {
      state.post_a1 += 0.5;
      state.post_b1 += 0.5 * dev * dev;
    } else {
      state.post_a0 += 0.5;
      state.post_b0 += 0.5 * dev * dev;
    }
  }
  detail::refresh_from_posterior(state, model);
  state.recompute_rho();
}

// One realized run. tau is in time units (periods / n); regret carries the
// sqrt(n)-scaled implementation term plus the cost term c * tau.
struct ExperimentResult {
  double tau = 0.0;
  std::size_t n_used = 0;
  bool chose_one = false;
  double q1_frac = 0.0, q0_frac = 0.0;
  double implementation_regret = 0.0;
  double cost = 0.0;
  double regret = 0.0;
  bool hit_boundary = false;  // stopped by the threshold (vs horizon/cap)
  bool capped = false;        // terminated by the max_periods guard
  double sigma_hat1 = 0.0, sigma_hat0 = 0.0;
  double gamma_used = 0.0;
};

using EpochObserver = std::function<void(const EngineState&)>;

inline ExperimentResult run_experiment(const DiscreteConfig& config, const OutcomeModel& model,
                                       RngStream& rng, const EpochObserver& observer = {}) {
  config.validate();
  EngineState state;
  state.n = config.n;

  switch (config.variance_mode) {
    case VarianceMode::known:
      state.sigma_hat1 = model.sd1;
      state.sigma_hat0 = model.sd0;
      state.center = model.reference_mean;
      break;
    case VarianceMode::forced_exploration: {
      const ExplorationEstimate est = detail::explore_into_state(state, config, model, rng);
      state.sigma_hat1 = est.sigma_hat1;
      state.sigma_hat0 = est.sigma_hat0;
      // common centering frozen after the exploration phase
      state.center = (state.sum1 + state.sum0) / static_cast<double>(est.consumed);
      break;
    }
    case VarianceMode::conjugate_prior:
      if (model.kind == OutcomeModel::Kind::bernoulli) {
        state.post_a1 = state.post_a0 = config.prior.beta_a0;
        state.post_b1 = state.post_b0 = config.prior.beta_b0;
      } else {
        state.post_a1 = state.post_a0 = config.prior.ig_a0;
        state.post_b1 = state.post_b0 = config.prior.ig_b0;
      }
      detail::refresh_from_posterior(state, model);
      break;
  }
  if (!(state.sigma_hat1 > 0.0) || !(state.sigma_hat0 > 0.0))
    throw config_error("run_experiment: working sigmas must be positive");
  state.recompute_rho();

  const auto working_gamma = [&]() {
    return config.gamma ? *config.gamma
                        : gamma_star_for(config.c, state.sigma_hat1, state.sigma_hat0);
  };
  state.gamma = working_gamma();

  std::size_t periods_cap = config.max_periods;
  if (config.horizon_T) {
    const double cap = std::floor(*config.horizon_T * static_cast<double>(config.n));
    periods_cap = std::min<std::size_t>(periods_cap, static_cast<std::size_t>(cap));
  }

  ExperimentResult out;
  for (;;) {
    if (state.periods() % config.batch_size == 0) {
      if (observer && state.periods() > 0) observer(state);
      if (should_stop(state, config)) {
        out.hit_boundary = std::fabs(state.rho) >= (config.gamma ? *config.gamma : state.gamma);
        break;
      }
    }
    if (state.periods() >= periods_cap) {
      out.capped = state.periods() >= config.max_periods;
      break;
    }
    const int arm = neyman_tracking_arm(state);
    const double y = model.draw(arm, rng);
    update_rho(state, arm, model.statistic(y));
    if (config.variance_mode == VarianceMode::conjugate_prior) {
      conjugate_prior_update(state, arm, y, model);
      state.gamma = working_gamma();
    }
  }

  out.tau = state.t();
  out.n_used = state.periods();
  out.chose_one = state.rho >= 0.0;
  out.q1_frac = state.q1_frac();
  out.q0_frac = state.periods() == 0
                    ? 0.0
                    : static_cast<double>(state.pulls0) / static_cast<double>(state.periods());
  const double raw_gap = model.true_gap();
  const double local_gap = std::sqrt(static_cast<double>(config.n)) * raw_gap;
  out.implementation_regret =
      std::max(local_gap, 0.0) - local_gap * (out.chose_one ? 1.0 : 0.0);
  out.cost = config.c * out.tau;
  out.regret = out.implementation_regret + out.cost;
  out.sigma_hat1 = state.sigma_hat1;
  out.sigma_hat0 = state.sigma_hat0;
  out.gamma_used = config.gamma ? *config.gamma : state.gamma;
  return out;
}

}  // namespace seqstop
