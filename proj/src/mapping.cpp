#include "edgesim/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace edgesim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Sorted sample law compressed to distinct values.
struct EmpiricalLaw {
  std::vector<double> values;      // distinct, ascending
  std::vector<std::size_t> below;  // below[j] = #samples < values[j]; below[K] = n
  std::vector<double> mass_below;  // sum of samples < values[j]; [K] = total
  std::size_t n = 0;

  explicit EmpiricalLaw(std::span<const double> samples) {
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    n = sorted.size();
    double mass = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (i == 0 || sorted[i] != sorted[i - 1]) {
        values.push_back(sorted[i]);
        below.push_back(i);
        mass_below.push_back(mass);
      }
      mass += sorted[i];
    }
    below.push_back(n);
    mass_below.push_back(mass);
  }

  std::size_t distinct() const { return values.size(); }

  /// Smallest distinct index whose value is >= a (K when a exceeds all).
  std::size_t index_of(double a) const {
    return static_cast<std::size_t>(
        std::lower_bound(values.begin(), values.end(), a) - values.begin());
  }

  double threshold_value(std::size_t k) const {
    return k >= values.size() ? kInf : values[k];
  }
};

/// sum_n pmf[n] * n * F^(n-1): probability weight that one tagged contender
/// beats everyone else when all others fall below a threshold at CDF F.
double win_factor(double f, std::span<const double> pmf) {
  double total = 0.0;
  for (std::size_t n = 1; n < pmf.size(); ++n) {
    if (pmf[n] == 0.0) continue;
    total += pmf[n] * static_cast<double>(n) * std::pow(f, static_cast<double>(n - 1));
  }
  return total;
}

}  // namespace

int minislot_from_counts(std::size_t at_or_below, std::size_t total, int m_slots) {
  if (total == 0) return m_slots + 1;
  const auto m = static_cast<long long>(m_slots);
  long long slot = m - (m * static_cast<long long>(at_or_below)) /
                           static_cast<long long>(total);
  return static_cast<int>(std::clamp(slot, 1LL, m));
}

int minislot_uniform(double w, std::span<const double> sorted_samples, int m_slots) {
  if (w < 0.0) return m_slots + 1;
  if (sorted_samples.empty()) {
    throw std::invalid_argument("minislot_uniform: empty sample set");
  }
  auto at_or_below = static_cast<std::size_t>(
      std::upper_bound(sorted_samples.begin(), sorted_samples.end(), w) -
      sorted_samples.begin());
  return minislot_from_counts(at_or_below, sorted_samples.size(), m_slots);
}

int minislot_linear(double w, double w_max, int m_slots) {
  if (w < 0.0) return m_slots + 1;
  if (!(w_max > 0.0)) throw std::invalid_argument("minislot_linear: w_max must be > 0");
  // (M - m - 1) * Wmax / M <= w < (M - m) * Wmax / M  =>  m = M - 1 - bin.
  double bin = std::floor(w * m_slots / w_max);
  double slot = static_cast<double>(m_slots) - 1.0 - bin;
  return static_cast<int>(std::clamp(slot, 1.0, static_cast<double>(m_slots)));
}

int WeightMapper::slot(double w) const {
  const int m = m_slots();
  if (w < 0.0) return m + 1;
  for (int k = 0; k < m; ++k) {
    if (w >= thresholds[k]) return k + 1;
  }
  return m + 1;
}

bool WeightMapper::valid() const {
  if (thresholds.empty() || thresholds.back() < 0.0) return false;
  return std::is_sorted(thresholds.rbegin(), thresholds.rend());
}

WeightMapper WeightMapper::uniform_quantiles(std::span<const double> sorted_samples,
                                             int m_slots) {
  if (m_slots < 1) throw std::invalid_argument("m_slots must be >= 1");
  WeightMapper mapper;
  mapper.thresholds.assign(m_slots, 0.0);
  if (sorted_samples.empty()) return mapper;
  const std::size_t n = sorted_samples.size();
  for (int m = 1; m < m_slots; ++m) {
    // Smallest sample x with #(<= x) / n >= (M - m) / M.
    std::size_t need = (static_cast<std::size_t>(m_slots - m) * n + m_slots - 1) /
                       static_cast<std::size_t>(m_slots);
    need = std::clamp<std::size_t>(need, 1, n);
    mapper.thresholds[m - 1] = sorted_samples[need - 1];
  }
  return mapper;
}

double mapper_objective(const WeightMapper& mapper, std::span<const double> samples,
                        std::span<const double> contender_pmf) {
  if (samples.empty()) return 0.0;
  EmpiricalLaw law(samples);
  const double n = static_cast<double>(law.n);
  double total = 0.0;
  double upper = kInf;
  for (double a : mapper.thresholds) {
    std::size_t lo = law.index_of(a);
    std::size_t hi = std::isinf(upper) ? law.distinct() : law.index_of(upper);
    if (hi > lo) {
      double bin_mass = (law.mass_below[hi] - law.mass_below[lo]) / n;
      total += bin_mass * win_factor(static_cast<double>(law.below[lo]) / n, contender_pmf);
    }
    upper = a;
  }
  return total;
}

FitResult fit_optimal_mapper(std::span<const double> samples, int m_slots,
                             std::span<const double> contender_pmf,
                             const FitOptions& opts) {
  if (samples.empty()) throw std::invalid_argument("fit_optimal_mapper: empty sample set");
  if (m_slots < 1) throw std::invalid_argument("fit_optimal_mapper: m_slots must be >= 1");
  for (double s : samples) {
    if (s < 0.0 || !std::isfinite(s)) {
      throw std::invalid_argument("fit_optimal_mapper: samples must be finite and >= 0");
    }
  }

  EmpiricalLaw law(samples);
  const std::size_t k_top = law.distinct();
  const double n = static_cast<double>(law.n);

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  WeightMapper init = WeightMapper::uniform_quantiles(sorted, m_slots);

  // idx[0] = K (a_0 = inf), idx[m] = distinct index of a_m, idx[M] = 0.
  std::vector<std::size_t> idx(m_slots + 1);
  idx[0] = k_top;
  for (int m = 1; m < m_slots; ++m) idx[m] = law.index_of(init.thresholds[m - 1]);
  idx[m_slots] = 0;

  std::vector<double> factor(k_top + 1);
  for (std::size_t k = 0; k <= k_top; ++k) {
    factor[k] = win_factor(static_cast<double>(law.below[k]) / n, contender_pmf);
  }
  auto term = [&](std::size_t upper, std::size_t lower) {
    return (law.mass_below[upper] - law.mass_below[lower]) / n * factor[lower];
  };
  auto objective = [&] {
    double j = 0.0;
    for (int m = 1; m <= m_slots; ++m) j += term(idx[m - 1], idx[m]);
    return j;
  };

  FitResult result;
  double current = objective();
  bool converged = m_slots == 1;
  int sweeps = 0;
  while (!converged && sweeps < opts.max_sweeps) {
    ++sweeps;
    for (int m = 1; m < m_slots; ++m) {
      std::size_t upper = idx[m - 1], lower = idx[m + 1];
      std::size_t best = idx[m];
      double best_val = term(upper, best) + term(best, lower);
      for (std::size_t k = lower; k <= upper; ++k) {
        double val = term(upper, k) + term(k, lower);
        if (val > best_val) {
          best_val = val;
          best = k;
        }
      }
      idx[m] = best;
    }
    double next = objective();
    double gain = next - current;
    current = next;
    if (gain <= opts.tolerance * std::max(std::abs(current), 1e-300)) converged = true;
  }

  result.mapper.thresholds.resize(m_slots);
  for (int m = 1; m < m_slots; ++m) {
    result.mapper.thresholds[m - 1] = law.threshold_value(idx[m]);
  }
  result.mapper.thresholds[m_slots - 1] = 0.0;
  result.objective = current;
  result.sweeps = sweeps;
  result.converged = converged;
  return result;
}

FitResult fit_optimal_mapper(std::span<const double> samples, int m_slots,
                             int n_contenders, const FitOptions& opts) {
  if (n_contenders < 1) throw std::invalid_argument("n_contenders must be >= 1");
  std::vector<double> pmf(static_cast<std::size_t>(n_contenders) + 1, 0.0);
  pmf[n_contenders] = 1.0;
  return fit_optimal_mapper(samples, m_slots, pmf, opts);
}

LevelMapper LevelMapper::uniform(int m_slots) {
  if (m_slots < 1) throw std::invalid_argument("m_slots must be >= 1");
  LevelMapper lm;
  lm.m_ = m_slots;
  lm.uniform_ = true;
  lm.levels_.resize(m_slots);
  for (int m = 1; m <= m_slots; ++m) {
    lm.levels_[m - 1] = static_cast<double>(m_slots - m) / m_slots;
  }
  return lm;
}

LevelMapper LevelMapper::from_mapper(const WeightMapper& mapper,
                                     std::span<const double> samples) {
  LevelMapper lm;
  lm.m_ = mapper.m_slots();
  lm.uniform_ = false;
  lm.levels_.resize(lm.m_);
  EmpiricalLaw law(samples);
  const double n = static_cast<double>(std::max<std::size_t>(law.n, 1));
  for (int m = 0; m < lm.m_; ++m) {
    double a = mapper.thresholds[m];
    lm.levels_[m] = std::isinf(a) ? 2.0 : static_cast<double>(law.below[law.index_of(a)]) / n;
  }
  lm.levels_.back() = 0.0;
  return lm;
}

int LevelMapper::slot_from_counts(std::size_t at_or_below, std::size_t total) const {
  if (total == 0) return m_ + 1;
  if (uniform_) return minislot_from_counts(at_or_below, total, m_);
  const double u = static_cast<double>(at_or_below) / static_cast<double>(total);
  for (int m = 0; m < m_; ++m) {
    if (u >= levels_[m]) return m + 1;
  }
  return m_;
}

int LevelMapper::slot_from_level(double u) const {
  if (uniform_) {
    auto slot = static_cast<long long>(m_) - static_cast<long long>(std::floor(m_ * u));
    return static_cast<int>(std::clamp(slot, 1LL, static_cast<long long>(m_)));
  }
  for (int m = 0; m < m_; ++m) {
    if (u >= levels_[m]) return m + 1;
  }
  return m_;
}

ChannelReservoir::ChannelReservoir(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("reservoir capacity must be >= 1");
  rates_.reserve(capacity);
  gains_.reserve(capacity);
}

void ChannelReservoir::push(double rate, double g) {
  if (rates_.size() < capacity_) {
    rates_.push_back(rate);
    gains_.push_back(g);
    return;
  }
  rates_[head_] = rate;
  gains_[head_] = g;
  head_ = (head_ + 1) % capacity_;
}

ChannelReservoir::Counts ChannelReservoir::count(double w, double q, double z,
                                                 double power) const {
  Counts c;
  const double cost = power * z;
  const std::size_t n = rates_.size();
  for (std::size_t k = 0; k < n; ++k) {
    double wk = q * rates_[k] - cost * gains_[k];
    c.nonnegative += wk >= 0.0;
    c.at_or_below += (wk >= 0.0) & (wk <= w);
  }
  return c;
}

void ChannelReservoir::nonnegative_weights(double q, double z, double power,
                                           std::vector<double>& out) const {
  const double cost = power * z;
  for (std::size_t k = 0; k < rates_.size(); ++k) {
    double wk = q * rates_[k] - cost * gains_[k];
    if (wk >= 0.0) out.push_back(wk);
  }
}

}  // namespace edgesim
