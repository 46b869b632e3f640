#include "edgesim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "edgesim/analytics.hpp"

namespace edgesim {

void RunConfig::validate() const {
  fading.validate();
  policy.validate();
  flow.validate();
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  if (!(tx_power > 0.0) || !std::isfinite(tx_power)) {
    throw std::invalid_argument("tx_power must be positive");
  }
  if (horizon == 0) throw std::invalid_argument("horizon must be > 0");
  if (effective_warmup() >= horizon) {
    throw std::invalid_argument("horizon must exceed warmup");
  }
}

void RunConfig::resize_links(std::size_t n) {
  if (n < 1) throw std::invalid_argument("n_links must be >= 1");
  auto extend = [n](std::vector<double>& means, const std::optional<std::pair<double, double>>& range,
                    std::uint64_t seed, StreamTag tag) {
    if (range) {
      means = draw_link_means(seed, tag, n, *range);
    } else {
      double fill = means.empty() ? 1.0 : means.front();
      means.resize(n, fill);
    }
  };
  extend(fading.direct_mean, direct_range, network_seed, StreamTag::DeviceSetup);
  extend(fading.interference_mean, interference_range, network_seed ^ 0x5bd1e995ULL,
         StreamTag::DeviceSetup);
  fading.n_links = n;
}

std::string trace_header(std::size_t queue_columns) {
  std::string h = "t,scheduled,outcome,w_sched,z";
  for (std::size_t i = 0; i < queue_columns; ++i) h += fmt::format(",q_{}", i + 1);
  return h;
}

namespace {

/// Largest weight a scheduler could have served this slot, scaled by the
/// data-phase airtime: max over {W_j >= 0, P g_j <= nu}, or 0.
double max_feasible_weight(const ScheduleDecision& d, const ChannelState& ch,
                           double power, double nu) {
  double best = 0.0;
  for (std::size_t j = 0; j < d.weights.size(); ++j) {
    if (d.weights[j] >= 0.0 && nu_feasible(ch.g[j], power, nu)) best = std::max(best, d.weights[j]);
  }
  return d.airtime * best;
}

}  // namespace

RunResult run(const RunConfig& config, const RunOptions& options) {
  config.validate();
  const std::size_t n = config.fading.n_links;
  const double power = config.tx_power;
  const double noise = config.fading.noise_power;
  const std::uint64_t horizon = config.horizon;
  const std::uint64_t warmup = config.effective_warmup();

  ChannelSource source(config.fading, config.seed);
  auto scheduler = make_scheduler(config.policy, n, config.seed);

  NetworkState state(n);
  ChannelState channel;
  std::vector<double> rates(n), admitted(n);

  RunResult result;
  RunSummary& s = result.summary;
  s.policy = std::string(to_string(config.policy.kind));
  s.n_links = n;
  s.horizon = horizon;
  s.warmup = warmup;
  s.seed = config.seed;
  s.avg_admitted.assign(n, 0.0);
  if (options.keep_weight_log) result.weight_log.reserve(horizon - warmup);

  const std::size_t trace_q = std::min(options.trace_queues, n);
  if (options.trace) *options.trace << trace_header(trace_q) << '\n';

  // Least-squares slope of total backlog over the final decile.
  const std::uint64_t decile_start = horizon - std::max<std::uint64_t>(horizon / 10, 2);
  double st = 0, stt = 0, sq = 0, stq = 0, cnt = 0;

  std::uint64_t idle = 0, collisions = 0, successes = 0;
  double sum_q = 0.0, sum_interf = 0.0, sum_served = 0.0, sum_w = 0.0, sum_wmax = 0.0;
  fmt::memory_buffer line;

  for (std::uint64_t t = 0; t < horizon; ++t) {
    source.next(channel);
    for (std::size_t i = 0; i < n; ++i) {
      rates[i] = rate(channel.h[i], channel.i_ext[i], power, noise);
      admitted[i] = flow_control(state.q[i], config.flow);
    }
    SlotView view{state, channel, rates, power};
    ScheduleDecision d = scheduler->schedule(view);

    if (d.scheduled && !nu_feasible(channel.g[*d.scheduled], power, config.policy.nu)) {
      ++s.nu_violations;
    }

    if (options.trace) {
      line.clear();
      fmt::format_to(std::back_inserter(line), "{},{},{},", t,
                     d.scheduled ? *d.scheduled + 1 : std::size_t{0},
                     to_string(d.outcome));
      if (d.scheduled) fmt::format_to(std::back_inserter(line), "{}", d.weights[*d.scheduled]);
      fmt::format_to(std::back_inserter(line), ",{}", state.z);
      for (std::size_t i = 0; i < trace_q; ++i) {
        fmt::format_to(std::back_inserter(line), ",{}", state.q[i]);
      }
      line.push_back('\n');
      options.trace->write(line.data(), static_cast<std::streamsize>(line.size()));
    }

    double total_q = 0.0;
    for (double q : state.q) total_q += q;

    SlotFlows flows;
    NetworkState next = advance_queues(state, d, rates, admitted, channel.g, power,
                                       config.gamma, &flows);

    if (t >= warmup) {
      for (std::size_t i = 0; i < n; ++i) s.avg_admitted[i] += admitted[i];
      sum_q += total_q;
      sum_interf += flows.interference;
      sum_served += flows.served;
      switch (d.outcome) {
        case Outcome::Idle: ++idle; break;
        case Outcome::Collision: ++collisions; break;
        case Outcome::Success: ++successes; break;
      }
      const double w_sched = d.scheduled ? d.airtime * d.weights[*d.scheduled] : 0.0;
      sum_w += w_sched;
      sum_wmax += max_feasible_weight(d, channel, power, config.policy.nu);
      if (options.keep_weight_log) result.weight_log.push_back(w_sched);
    }
    if (t >= decile_start) {
      double x = static_cast<double>(t);
      st += x;
      stt += x * x;
      sq += total_q;
      stq += x * total_q;
      cnt += 1;
    }
    s.max_z = std::max(s.max_z, next.z);
    state = std::move(next);
  }

  const double slots = static_cast<double>(horizon - warmup);
  double sum_rate = 0.0, utility = 0.0;
  for (double& a : s.avg_admitted) {
    a /= slots;
    sum_rate += a;
    utility += config.flow.utility.value(a);
  }
  s.sum_rate = sum_rate;
  s.sum_utility = utility;
  s.avg_queue = sum_q / slots;
  s.avg_interference = sum_interf / slots;
  s.avg_service = sum_served / slots;
  s.idle_frac = static_cast<double>(idle) / slots;
  s.collision_frac = static_cast<double>(collisions) / slots;
  s.success_frac = static_cast<double>(successes) / slots;
  s.avg_scheduled_weight = sum_w / slots;
  s.avg_max_weight = sum_wmax / slots;
  s.final_z = state.z;
  double denom = cnt * stt - st * st;
  s.queue_slope = denom > 0.0 ? (cnt * stq - st * sq) / denom : 0.0;
  return result;
}

PairedResult run_paired(const RunConfig& config, const RunOptions& options) {
  PairedResult out;
  RunOptions opts = options;
  opts.keep_weight_log = true;
  out.distributed = run(config, opts);
  RunConfig twin = config;
  twin.policy.kind = PolicyKind::Centralized;
  RunOptions twin_opts;
  twin_opts.keep_weight_log = true;
  out.centralized = run(twin, twin_opts);
  BetaEstimate b = beta_estimate(out.distributed.weight_log, out.centralized.weight_log, 0.95, 200, config.seed);
  out.distributed.summary.beta = b.beta;
  out.distributed.summary.beta_ci_low = b.ci_low;
  out.distributed.summary.beta_ci_high = b.ci_high;
  return out;
}

bool is_sweep_axis(std::string_view axis) {
  return axis == "V" || axis == "gamma" || axis == "N" || axis == "M" || axis == "tau" ||
         axis == "policy";
}

namespace {

double parse_double(std::string_view text) {
  std::string s(text);
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  return v;
}

long long parse_int(std::string_view text) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("not an integer: '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

void apply_axis(RunConfig& config, std::string_view axis, std::string_view value) {
  if (axis == "V") {
    config.flow.v = parse_double(value);
  } else if (axis == "gamma") {
    config.gamma = parse_double(value);
  } else if (axis == "N") {
    long long n = parse_int(value);
    if (n < 1) throw std::invalid_argument("N must be >= 1");
    config.resize_links(static_cast<std::size_t>(n));
  } else if (axis == "M") {
    long long m = parse_int(value);
    if (m < 1) throw std::invalid_argument("M must be >= 1");
    config.policy.m_slots = static_cast<int>(m);
  } else if (axis == "tau") {
    config.policy.tau = parse_double(value);
  } else if (axis == "policy") {
    config.policy.kind = parse_policy_kind(value);
  } else {
    throw std::invalid_argument("unknown sweep axis '" + std::string(axis) + "'");
  }
}

unsigned sweep_threads() {
  if (const char* env = std::getenv("EDGESIM_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<RunSummary> sweep(const RunConfig& base, std::string_view axis,
                              std::span<const std::string> values) {
  if (!is_sweep_axis(axis)) {
    throw std::invalid_argument("unknown sweep axis '" + std::string(axis) + "'");
  }
  std::vector<RunConfig> configs;
  configs.reserve(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    RunConfig c = base;
    c.seed = derive_seed(base.seed, StreamTag::Sweep, k);
    apply_axis(c, axis, values[k]);
    c.validate();
    configs.push_back(std::move(c));
  }

  std::vector<RunSummary> out(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < configs.size(); k = next++) {
      try {
        out[k] = run(configs[k]).summary;
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const unsigned threads =
      std::min<unsigned>(sweep_threads(), static_cast<unsigned>(std::max<std::size_t>(configs.size(), 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace edgesim
