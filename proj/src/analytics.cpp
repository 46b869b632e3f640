#include "edgesim/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "edgesim/rng.hpp"

namespace edgesim {

double success_probability_at(int n, int m, int k) {
  if (n < 1 || m < 1) throw std::invalid_argument("success_probability: n, M must be >= 1");
  if (k < 1 || k > m) return 0.0;
  const double frac = static_cast<double>(m - k) / m;
  // 0^0 = 1: a lone contender succeeds in any slot.
  const double tail = n == 1 ? 1.0 : std::pow(frac, n - 1);
  return static_cast<double>(n) / m * tail;
}

double success_probability(int n, int m) {
  double total = 0.0;
  for (int k = 1; k <= m; ++k) total += success_probability_at(n, m, k);
  return total;
}

double alpha_bound(int n, int m) {
  if (n < 1) throw std::invalid_argument("alpha_bound: n must be >= 1");
  if (m < n) throw std::invalid_argument("alpha_bound: requires M >= n");
  if (n == 1) return 1.0 - 1.0 / m;
  const double num = 1.0 - std::pow(static_cast<double>(n) / m, n);
  const double den = std::pow(1.0 + 1.0 / (n - 1), n - 1);
  return num / den;
}

BetaEstimate beta_estimate(std::span<const double> distributed_max,
                           std::span<const double> centralized_max, double confidence,
                           int resamples, std::uint64_t seed) {
  const std::size_t n = distributed_max.size();
  if (n == 0 || centralized_max.empty()) {
    throw std::invalid_argument("beta_estimate: empty log");
  }
  if (centralized_max.size() != n) {
    throw std::invalid_argument("beta_estimate: logs must be paired slot by slot");
  }
  auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
  double sd = 0.0, sc = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    sd += distributed_max[t];
    sc += centralized_max[t];
  }
  BetaEstimate est;
  est.beta = ratio(sd, sc);

  Rng rng(derive_seed(seed, StreamTag::Check));
  std::vector<double> boot(static_cast<std::size_t>(std::max(resamples, 1)));
  for (double& b : boot) {
    double bd = 0.0, bc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      auto k = static_cast<std::size_t>(rng.below(n));
      bd += distributed_max[k];
      bc += centralized_max[k];
    }
    b = ratio(bd, bc);
  }
  std::sort(boot.begin(), boot.end());
  const double tail = 0.5 * (1.0 - confidence);
  auto pick = [&](double p) {
    auto idx = static_cast<std::size_t>(std::floor(p * (boot.size() - 1) + 0.5));
    return boot[std::min(idx, boot.size() - 1)];
  };
  est.ci_low = std::min(pick(tail), est.beta);
  est.ci_high = std::max(pick(1.0 - tail), est.beta);
  return est;
}

}  // namespace edgesim
