#include "edgesim/schedulers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace edgesim {

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Centralized: return "centralized";
    case PolicyKind::CadsUniform: return "cads_uniform";
    case PolicyKind::CadsOptimal: return "cads_optimal";
    case PolicyKind::CadsLinear: return "cads_linear";
    case PolicyKind::Irds: return "irds";
  }
  return "centralized";
}

PolicyKind parse_policy_kind(std::string_view name) {
  for (auto k : {PolicyKind::Centralized, PolicyKind::CadsUniform, PolicyKind::CadsOptimal,
                 PolicyKind::CadsLinear, PolicyKind::Irds}) {
    if (name == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown policy kind '" + std::string(name) + "'");
}

void PolicyConfig::validate() const {
  if (m_slots < 1) throw std::invalid_argument("m_slots must be >= 1");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  if (!(m_slots * tau < 1.0)) {
    throw std::invalid_argument("m_slots * tau must be < 1 (contention would fill the slot)");
  }
  if (!(nu > 0.0)) throw std::invalid_argument("nu must be > 0");
  if (w_max < 0.0 || !std::isfinite(w_max)) {
    throw std::invalid_argument("w_max must be >= 0 (0 = automatic)");
  }
  if (reservoir_size < 1) throw std::invalid_argument("reservoir_size must be >= 1");
  if (refit_interval < 1) throw std::invalid_argument("refit_interval must be >= 1");
}

double PolicyConfig::airtime() const {
  switch (kind) {
    case PolicyKind::Centralized: return 1.0;
    case PolicyKind::Irds: return 1.0 - tau;  // one contention mini-slot
    default: return 1.0 - m_slots * tau;
  }
}

std::vector<double> compute_weights(const SlotView& view) {
  const std::size_t n = view.state.q.size();
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = weight(view.state.q[i], view.rates[i], view.state.z, view.channel.g[i], view.power);
  }
  return w;
}

ScheduleDecision schedule_centralized(const SlotView& view, const PolicyConfig& config) {
  ScheduleDecision d;
  d.weights = compute_weights(view);
  d.airtime = 1.0;
  std::optional<std::size_t> best;
  for (std::size_t j = 0; j < d.weights.size(); ++j) {
    if (d.weights[j] < 0.0 || !nu_feasible(view.channel.g[j], view.power, config.nu)) continue;
    ++d.contenders;
    if (!best || d.weights[j] > d.weights[*best]) best = j;
  }
  if (best) {
    d.scheduled = best;
    d.outcome = Outcome::Success;
  }
  return d;
}

ScheduleDecision resolve_contention(std::span<const int> picks, int m_slots,
                                    double airtime) {
  ScheduleDecision d;
  d.airtime = airtime;
  int earliest = m_slots + 1;
  int holders = 0;
  std::size_t holder = 0;
  for (std::size_t i = 0; i < picks.size(); ++i) {
    int p = picks[i];
    if (p > m_slots) continue;
    ++d.contenders;
    if (p < earliest) {
      earliest = p;
      holders = 1;
      holder = i;
    } else if (p == earliest) {
      ++holders;
    }
  }
  if (holders == 0) return d;
  d.winning_minislot = earliest;
  if (holders == 1) {
    d.outcome = Outcome::Success;
    d.scheduled = holder;
  } else {
    d.outcome = Outcome::Collision;
  }
  return d;
}

std::optional<std::size_t> irds_rule(std::span<const std::uint8_t> contend,
                                     std::span<const std::uint8_t> transmit,
                                     std::optional<std::size_t> previous) {
  const std::size_t n = contend.size();
  std::size_t contenders = 0, lone = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (contend[i]) {
      ++contenders;
      lone = i;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    bool cond1 = contenders == 1 && lone == i;
    bool cond2 = !previous || *previous == i;  // no *other* pair held the slot
    bool cond3 = transmit[i] != 0;
    if (cond1 && cond2 && cond3) return i;                          // case 1
    if (!cond1 && cond3 && previous && *previous == i) return i;    // case 2
  }
  return std::nullopt;  // case 3 for everyone
}

double irds_transmit_probability(double w) {
  if (w >= 0.0) return 1.0 / (1.0 + std::exp(-w));
  double e = std::exp(w);
  return e / (1.0 + e);
}

ScheduleDecision schedule_irds(const SlotView& view, const PolicyConfig& config,
                               std::optional<std::size_t> previous, Rng& rng) {
  const std::size_t n = view.state.q.size();
  ScheduleDecision d;
  d.weights = compute_weights(view);
  d.airtime = config.airtime();
  std::vector<std::uint8_t> contend(n), transmit(n);
  const double p_contend = 1.0 / static_cast<double>(n);
  // Draw both variables for every device so stream consumption is fixed.
  for (std::size_t i = 0; i < n; ++i) {
    contend[i] = rng.bernoulli(p_contend);
    bool p = rng.bernoulli(irds_transmit_probability(d.weights[i]));
    transmit[i] = p && nu_feasible(view.channel.g[i], view.power, config.nu);
    d.contenders += contend[i];
  }
  d.scheduled = irds_rule(contend, transmit, previous);
  if (d.scheduled) {
    d.outcome = Outcome::Success;
  } else {
    d.outcome = d.contenders >= 2 ? Outcome::Collision : Outcome::Idle;
  }
  return d;
}

namespace {

class CentralizedScheduler final : public Scheduler {
 public:
  explicit CentralizedScheduler(const PolicyConfig& config) : config_(config) {}
  ScheduleDecision schedule(const SlotView& view) override {
    return schedule_centralized(view, config_);
  }
  std::string_view name() const override { return "centralized"; }

 private:
  PolicyConfig config_;
};

class IrdsScheduler final : public Scheduler {
 public:
  IrdsScheduler(const PolicyConfig& config, std::uint64_t seed)
      : config_(config), rng_(derive_seed(seed, StreamTag::Policy)) {}
  ScheduleDecision schedule(const SlotView& view) override {
    ScheduleDecision d = schedule_irds(view, config_, previous_, rng_);
    previous_ = d.scheduled;
    return d;
  }
  std::string_view name() const override { return "irds"; }

 private:
  PolicyConfig config_;
  Rng rng_;
  std::optional<std::size_t> previous_;
};

bool is_refit_slot(std::uint64_t t, std::uint64_t interval) {
  if (t % interval == 0) return true;
  // Geometric warm-up refits before the first full interval.
  return t < interval && (t & (t - 1)) == 0;
}

}  // namespace

CadsScheduler::CadsScheduler(const PolicyConfig& config, std::size_t n_links,
                             std::uint64_t seed)
    : config_(config),
      reservoirs_(n_links, ChannelReservoir(config.reservoir_size)),
      levels_(LevelMapper::uniform(config.m_slots)),
      w_max_(config.w_max),
      contender_hist_(n_links + 1, 0.0),
      picks_(n_links),
      rng_(derive_seed(seed, StreamTag::Policy)) {
  if (!config_.is_cads()) throw std::invalid_argument("CadsScheduler needs a CADS policy");
}

void CadsScheduler::refit(const SlotView& view) {
  const std::size_t n = reservoirs_.size();
  const double z = view.state.z;

  if (config_.kind == PolicyKind::CadsOptimal) {
    scratch_.clear();
    for (std::size_t i = 0; i < n; ++i) {
      reservoirs_[i].nonnegative_weights(view.state.q[i], z, view.power, scratch_);
    }
    double hist_total = 0.0;
    for (double c : contender_hist_) hist_total += c;
    std::vector<double> pmf(n + 1, 0.0);
    if (hist_total > 0.0) {
      for (std::size_t k = 0; k <= n; ++k) pmf[k] = contender_hist_[k] / hist_total;
    } else {
      pmf[n] = 1.0;
    }
    if (!scratch_.empty()) {
      FitResult fit = fit_optimal_mapper(scratch_, config_.m_slots, pmf);
      levels_ = LevelMapper::from_mapper(fit.mapper, scratch_);
    }
    std::fill(contender_hist_.begin(), contender_hist_.end(), 0.0);
  }

  if (config_.kind == PolicyKind::CadsLinear && config_.w_max == 0.0) {
    // Calibrate W_max so that, at the largest backlog seen this window,
    // P{W > W_max | W >= 0} is about 1/M.
    scratch_.clear();
    for (std::size_t i = 0; i < n; ++i) {
      reservoirs_[i].nonnegative_weights(window_q_max_, z, view.power, scratch_);
    }
    if (!scratch_.empty()) {
      const double level = 1.0 - 1.0 / config_.m_slots;
      auto k = static_cast<std::size_t>(std::floor(level * (scratch_.size() - 1)));
      std::nth_element(scratch_.begin(), scratch_.begin() + k, scratch_.end());
      if (scratch_[k] > 0.0) w_max_ = scratch_[k];
    }
    if (!(w_max_ > 0.0)) w_max_ = 1.0;
    window_q_max_ = 0.0;
  }
}

ScheduleDecision CadsScheduler::schedule(const SlotView& view) {
  const std::size_t n = reservoirs_.size();
  const double z = view.state.z;
  for (std::size_t i = 0; i < n; ++i) window_q_max_ = std::max(window_q_max_, view.state.q[i]);
  if (is_refit_slot(slots_seen_, config_.refit_interval)) refit(view);
  ++slots_seen_;

  std::vector<double> weights = compute_weights(view);
  const int m = config_.m_slots;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights[i];
    if (w < 0.0 || !nu_feasible(view.channel.g[i], view.power, config_.nu)) {
      picks_[i] = m + 1;
      continue;
    }
    if (config_.kind == PolicyKind::CadsLinear) {
      picks_[i] = minislot_linear(w, w_max_, m);
    } else {
      auto c = reservoirs_[i].count(w, view.state.q[i], z, view.power);
      picks_[i] = levels_.slot_from_level(randomized_rank(c.at_or_below, c.nonnegative, rng_.uniform()));
    }
  }
  for (std::size_t i = 0; i < n; ++i) reservoirs_[i].push(view.rates[i], view.channel.g[i]);
  ScheduleDecision d = resolve_contention(picks_, m, config_.airtime());
  d.weights = std::move(weights);
  if (config_.kind == PolicyKind::CadsOptimal) {
    contender_hist_[static_cast<std::size_t>(d.contenders)] += 1.0;
  }
  return d;
}

std::unique_ptr<Scheduler> make_scheduler(const PolicyConfig& config, std::size_t n_links,
                                          std::uint64_t seed) {
  config.validate();
  switch (config.kind) {
    case PolicyKind::Centralized: return std::make_unique<CentralizedScheduler>(config);
    case PolicyKind::Irds: return std::make_unique<IrdsScheduler>(config, seed);
    default: return std::make_unique<CadsScheduler>(config, n_links, seed);
  }
}

}  // namespace edgesim
