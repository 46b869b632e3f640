#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "edgesim/channel.hpp"
#include "edgesim/queueing.hpp"
#include "edgesim/schedulers.hpp"

namespace edgesim {

struct RunConfig {
  FadingSpec fading;
  PolicyConfig policy;
  FlowParams flow;
  double gamma = 0.1;
  std::uint64_t horizon = 100000;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> warmup;  // default: horizon / 10
  double tx_power = 1.0;
  std::uint64_t network_seed = 1;  // draws fixed per-link / external means

  // Non-iid mode: per-link means drawn from these ranges at setup. Kept so
  // the link count can change (N sweeps) without disturbing existing links.
  std::optional<std::pair<double, double>> direct_range;
  std::optional<std::pair<double, double>> interference_range;

  std::uint64_t effective_warmup() const { return warmup.value_or(horizon / 10); }
  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
  /// Changes N, extending per-link means consistently with how they were made.
  void resize_links(std::size_t n);
};

/// Time averages over the slots after warmup.
struct RunSummary {
  std::string policy;
  std::size_t n_links = 0;
  std::uint64_t horizon = 0;
  std::uint64_t warmup = 0;
  std::uint64_t seed = 0;

  std::vector<double> avg_admitted;
  double sum_rate = 0.0;         // sum_i avg_admitted[i]
  double sum_utility = 0.0;      // sum_i U(avg_admitted[i])
  double avg_queue = 0.0;        // time average of sum_i Q_i
  double avg_interference = 0.0; // time average of scheduled airtime * P * g
  double avg_service = 0.0;      // bits served per slot, all devices
  double idle_frac = 0.0;
  double collision_frac = 0.0;
  double success_frac = 0.0;
  double avg_scheduled_weight = 0.0;
  double avg_max_weight = 0.0;
  std::optional<double> beta;
  std::optional<double> beta_ci_low;
  std::optional<double> beta_ci_high;
  double final_z = 0.0;
  double max_z = 0.0;
  std::uint64_t nu_violations = 0;  // counted over every slot, warmup included
  double queue_slope = 0.0;         // LS slope of sum_i Q_i over the last decile
};

struct RunOptions {
  std::ostream* trace = nullptr;  // per-slot CSV when set
  std::size_t trace_queues = std::numeric_limits<std::size_t>::max();
  bool keep_weight_log = false;   // per-slot scheduled weight after warmup
};

struct RunResult {
  RunSummary summary;
  std::vector<double> weight_log;  // airtime-scaled scheduled weight, post-warmup
};

/// Column order of the per-slot trace: t,scheduled,outcome,w_sched,z,q_1..q_K.
/// `scheduled` is the 1-based device number, 0 when nobody transmits.
std::string trace_header(std::size_t queue_columns);

RunResult run(const RunConfig& config, const RunOptions& options = {});

/// Runs `config` and a centralized twin on the same seed (identical channel
/// sequences) and fills the distributed summary's beta fields. `options`
/// apply to the distributed run.
struct PairedResult {
  RunResult distributed;
  RunResult centralized;
};
PairedResult run_paired(const RunConfig& config, const RunOptions& options = {});

/// Axis names accepted by sweep: V, gamma, N, M, tau, policy.
bool is_sweep_axis(std::string_view axis);
/// Applies one axis value to a config; throws std::invalid_argument on an
/// unknown axis or unparsable value.
void apply_axis(RunConfig& config, std::string_view axis, std::string_view value);

/// Independent runs, one per value, with seeds derived from the base seed and
/// the value's position. Results keep the input order. Runs fan out over
/// up to EDGESIM_THREADS worker threads.
std::vector<RunSummary> sweep(const RunConfig& base, std::string_view axis,
                              std::span<const std::string> values);

/// Thread cap for sweeps (EDGESIM_THREADS, else hardware concurrency).
unsigned sweep_threads();

}  // namespace edgesim
