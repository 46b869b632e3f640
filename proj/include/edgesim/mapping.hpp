#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace edgesim {

// Mini-slot association. Slots are numbered 1..M; M + 1 means "do not
// contend this slot".

/// Uniform (quantile) mapping from an empirical CDF value expressed as
/// counts: `at_or_below` of `total` nonnegative samples are <= w.
/// Returns clamp(M - floor(M * at_or_below / total), 1, M).
int minislot_from_counts(std::size_t at_or_below, std::size_t total, int m_slots);

/// Uniform mapping against a sorted set of nonnegative weight samples.
int minislot_uniform(double w, std::span<const double> sorted_samples, int m_slots);

/// Discrete linear mapping on [0, w_max). Weights at or above
/// w_max * (M - 1) / M fall into slot 1.
int minislot_linear(double w, double w_max, int m_slots);

/// Threshold policy in weight units: slot m iff a_m <= w < a_{m-1}, with
/// a_0 = +inf. Thresholds are non-increasing and a_M >= 0.
struct WeightMapper {
  std::vector<double> thresholds;  // a_1..a_M

  int m_slots() const { return static_cast<int>(thresholds.size()); }
  int slot(double w) const;
  bool valid() const;

  /// a_m = empirical quantile (M - m) / M of `sorted_samples`, a_M = 0.
  static WeightMapper uniform_quantiles(std::span<const double> sorted_samples,
                                       int m_slots);
};

struct FitOptions {
  int max_sweeps = 200;
  double tolerance = 1e-12;  // relative objective improvement per sweep
};

struct FitResult {
  WeightMapper mapper;
  double objective = 0.0;  // expected winner weight under the sample law
  int sweeps = 0;
  bool converged = true;
};

/// Expected weight of the contention winner when `n` contenders draw iid
/// weights from the empirical law of `samples` and use `mapper`, averaged
/// over n ~ contender_pmf (contender_pmf[n] = P{n contenders}).
double mapper_objective(const WeightMapper& mapper, std::span<const double> samples,
                        std::span<const double> contender_pmf);

/// Coordinate ascent over threshold vectors on the empirical weight grid,
/// starting from the uniform quantile thresholds. a_M is pinned at 0 so that
/// every nonnegative weight contends.
FitResult fit_optimal_mapper(std::span<const double> samples, int m_slots,
                             std::span<const double> contender_pmf,
                             const FitOptions& opts = {});

/// Convenience overload for a fixed contender count.
FitResult fit_optimal_mapper(std::span<const double> samples, int m_slots,
                             int n_contenders, const FitOptions& opts = {});

/// Threshold policy in CDF units: slot m iff F(w) >= level_m and
/// F(w) < level_{m-1}. Lets one fitted shape be applied to each device's
/// own conditional weight distribution.
class LevelMapper {
 public:
  static LevelMapper uniform(int m_slots);
  /// level_m = fraction of `samples` strictly below a_m.
  static LevelMapper from_mapper(const WeightMapper& mapper,
                                 std::span<const double> samples);

  int m_slots() const { return m_; }
  const std::vector<double>& levels() const { return levels_; }
  int slot_from_counts(std::size_t at_or_below, std::size_t total) const;
  /// Slot for a CDF level u in [0, 1].
  int slot_from_level(double u) const;

 private:
  int m_ = 1;
  bool uniform_ = true;
  std::vector<double> levels_;  // level_1..level_M
};

/// Randomized rank of a new observation among `past` earlier ones of which
/// `at_or_below` are <= it: (at_or_below + u) / (past + 1) with u ~ U[0, 1).
/// For exchangeable continuous draws the result is exactly Uniform(0, 1),
/// which removes the lattice effect of a small sample.
inline double randomized_rank(std::size_t at_or_below, std::size_t past, double u) {
  return (static_cast<double>(at_or_below) + u) / static_cast<double>(past + 1);
}

/// Bounded sliding window of a device's recent (rate, interference gain)
/// observations. Weights are recomputed from it for the current (Q, Z), so
/// the resulting empirical CDF is conditioned on the present queue state.
class ChannelReservoir {
 public:
  explicit ChannelReservoir(std::size_t capacity = 512);

  void push(double rate, double g);
  std::size_t size() const { return rates_.size(); }
  std::size_t capacity() const { return capacity_; }

  struct Counts {
    std::size_t at_or_below = 0;  // samples with 0 <= W <= w
    std::size_t nonnegative = 0;  // samples with W >= 0
  };
  Counts count(double w, double q, double z, double power) const;

  /// Appends all nonnegative weights q*R - P*z*g to `out`.
  void nonnegative_weights(double q, double z, double power,
                           std::vector<double>& out) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<double> rates_;
  std::vector<double> gains_;
};

}  // namespace edgesim
