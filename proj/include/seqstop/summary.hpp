#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "seqstop/errors.hpp"

namespace seqstop {

// Monte Carlo aggregate over replications. mean_n_used is zero for the
// continuous-time engine, which has no per-observation granularity.
struct RegretSummary {
  double mean_regret = 0.0;
  double std_error = 0.0;
  double q025 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q975 = 0.0;
  double mean_tau = 0.0;
  double tau_std_error = 0.0;
  double max_tau = 0.0;
  double mean_n_used = 0.0;
  double misid_rate = 0.0;
  double capped_fraction = 0.0;
  std::size_t reps = 0;
};

namespace detail {

// Type-7 quantile (linear interpolation) on a sorted copy.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) return sorted[n - 1];
  const double w = h - static_cast<double>(lo);
  return sorted[lo] * (1.0 - w) + sorted[lo + 1] * w;
}

}  // namespace detail

// Reduction is a fixed-order pass over replication-indexed arrays, so the
// result is bit-identical no matter how many threads produced the entries.
inline RegretSummary summarize_replications(const std::vector<double>& regret,
                                            const std::vector<double>& tau,
                                            const std::vector<double>& n_used,
                                            const std::vector<unsigned char>& misid,
                                            const std::vector<unsigned char>& capped) {
  const std::size_t n = regret.size();
  if (n == 0) throw parameter_error("summarize_replications: no replications");
  RegretSummary s;
  s.reps = n;
  double sum = 0.0, tau_sum = 0.0, used_sum = 0.0;
  double tau_max = tau[0];
  std::size_t misid_count = 0, capped_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += regret[i];
    tau_sum += tau[i];
    if (!n_used.empty()) used_sum += n_used[i];
    tau_max = std::max(tau_max, tau[i]);
    misid_count += misid[i];
    capped_count += capped[i];
  }
  s.mean_regret = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = regret[i] - s.mean_regret;
    ss += d * d;
  }
  s.std_error = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  s.mean_tau = tau_sum / static_cast<double>(n);
  double tau_ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = tau[i] - s.mean_tau;
    tau_ss += d * d;
  }
  s.tau_std_error =
      n > 1 ? std::sqrt(tau_ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  std::vector<double> sorted(regret);
  std::sort(sorted.begin(), sorted.end());
  s.q025 = detail::quantile_sorted(sorted, 0.025);
  s.q25 = detail::quantile_sorted(sorted, 0.25);
  s.q50 = detail::quantile_sorted(sorted, 0.50);
  s.q75 = detail::quantile_sorted(sorted, 0.75);
  s.q975 = detail::quantile_sorted(sorted, 0.975);
  s.max_tau = tau_max;
  s.mean_n_used = n_used.empty() ? 0.0 : used_sum / static_cast<double>(n);
  s.misid_rate = static_cast<double>(misid_count) / static_cast<double>(n);
  s.capped_fraction = static_cast<double>(capped_count) / static_cast<double>(n);
  return s;
}

}  // namespace seqstop
