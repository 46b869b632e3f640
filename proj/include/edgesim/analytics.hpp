#pragma once

#include <cstdint>
#include <span>

namespace edgesim {

/// Probability that contention with `n` contenders, each picking one of `m`
/// mini-slots uniformly at random, ends with a unique earliest pick:
/// sum_{k=1}^{M} (n/M) ((M-k)/M)^(n-1).
double success_probability(int n_contenders, int m_slots);

/// Probability of success with the earliest pick at slot k (one term of the
/// sum above).
double success_probability_at(int n_contenders, int m_slots, int k);

/// Guaranteed fraction of the expected maximum weight that uniform-mapping
/// contention schedules: (1 - (n/M)^n) / (1 + 1/(n-1))^(n-1), with the n = 1
/// limit 1 - 1/M. Requires M >= n (throws std::invalid_argument otherwise).
double alpha_bound(int n_contenders, int m_slots);

struct BetaEstimate {
  double beta = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// beta = mean(distributed) / mean(centralized) over paired per-slot logs of
/// the scheduled weight (the centralized one is the per-slot maximum), with a
/// paired percentile-bootstrap interval.
/// Throws std::invalid_argument on empty or mismatched logs.
BetaEstimate beta_estimate(std::span<const double> distributed_max,
                           std::span<const double> centralized_max,
                           double confidence = 0.95, int resamples = 1000,
                           std::uint64_t seed = 7);

}  // namespace edgesim
