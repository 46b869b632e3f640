#include "edgesim/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "edgesim/checks.hpp"
#include "edgesim/config.hpp"
#include "edgesim/engine.hpp"
#include "edgesim/stability.hpp"

namespace edgesim {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSimulateFooter = R"(Files written to --out:
  summary.json           time averages after warmup: policy, n_links, horizon,
                         warmup, seed, avg_admitted, sum_rate, sum_utility,
                         avg_queue, avg_interference, avg_service, idle_frac,
                         collision_frac, success_frac, avg_scheduled_weight,
                         avg_max_weight, beta, beta_ci_low, beta_ci_high,
                         final_z, max_z, nu_violations, queue_slope
  effective_config.json  fully explicit config; reproduces this run
  trace.csv              with --trace; columns:
                         t,scheduled,outcome,w_sched,z,q_1..q_K
                         scheduled is the 1-based device number (0 = none),
                         outcome is success|collision|idle, w_sched is empty
                         when nobody transmits, K = --trace-queues (default N))";

constexpr const char* kSweepFooter = R"(Files written to --out:
  sweep.csv   columns: value,policy,seed,sum_rate,sum_utility,avg_queue,
              avg_interference,avg_service,idle_frac,collision_frac,
              success_frac,final_z,max_z,nu_violations
  sweep.json  array of RunSummary objects in input order
Axes: V, gamma, N, M, tau, policy. EDGESIM_THREADS caps parallel runs.)";

constexpr const char* kBoundaryFooter = R"(CSV columns (one row per grid value, devices numbered 1..N):
  alpha_target,status,rate_1..rate_N,interference,mu,lambda_1..lambda_N,
  res_rate,res_interference,res_slack,res_gap,iterations
status is converged|infeasible|max_iters; infeasible rows are not on the
curve. lambda of the pivot is always 1. res_* are the largest relative
residuals. --grid accepts "a,b,c" or "from:to:points".)";

struct SimulateArgs {
  std::string config, out = ".";
  std::optional<std::uint64_t> seed, horizon;
  std::optional<std::string> policy, gamma;
  bool trace = false, beta = false;
  std::optional<std::size_t> trace_queues;
};

struct SweepArgs {
  SimulateArgs base;
  std::string axis;
  std::vector<std::string> values;
};

struct BoundaryArgs {
  std::string config, out = "boundary.csv";
  std::optional<std::string> gamma, grid;
  std::optional<std::uint64_t> seed;
  bool unconstrained = false;
};

struct CheckArgs {
  std::string suite = "all";
  std::size_t trials = 100000;
  std::uint64_t seed = 1;
};

double parse_real_or_inf(const std::string& s, const char* what) {
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw std::invalid_argument(fmt::format("{}: not a number: '{}'", what, s));
  }
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::vector<double> parse_grid(const std::string& s) {
  if (s.find(':') != std::string::npos) {
    auto parts = split(s, ':');
    if (parts.size() != 3) throw std::invalid_argument("--grid: expected from:to:points");
    double a = parse_real_or_inf(parts[0], "--grid"), b = parse_real_or_inf(parts[1], "--grid");
    double k = parse_real_or_inf(parts[2], "--grid");
    if (!(k >= 1) || std::floor(k) != k) throw std::invalid_argument("--grid: points must be >= 1");
    std::vector<double> out;
    auto n = static_cast<std::size_t>(k);
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    return out;
  }
  std::vector<double> out;
  for (auto& p : split(s, ',')) out.push_back(parse_real_or_inf(p, "--grid"));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] >= 0.0) || (i > 0 && out[i] < out[i - 1])) {
      throw std::invalid_argument("--grid: values must be nonnegative and increasing");
    }
  }
  return out;
}

RunConfig load_with_overrides(const SimulateArgs& a) {
  RunConfig c = a.config.empty() ? default_run_config() : load_run_config(a.config);
  if (a.seed) c.seed = *a.seed;
  if (a.horizon) {
    c.horizon = *a.horizon;
    // An explicit warmup longer than the new horizon falls back to the default.
    if (c.warmup && *c.warmup >= c.horizon) c.warmup.reset();
  }
  if (a.policy) c.policy.kind = parse_policy_kind(*a.policy);
  if (a.gamma) c.gamma = parse_real_or_inf(*a.gamma, "--gamma");
  c.validate();
  return c;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  f << content;
  if (!f) throw std::runtime_error(fmt::format("error writing {}", path.string()));
}

void print_summary(std::ostream& out, const RunSummary& s) {
  auto row = [&](const char* k, const std::string& v) { fmt::print(out, "  {:<22}{}\n", k, v); };
  fmt::print(out, "run summary ({} slots, {} warmup, seed {})\n", s.horizon, s.warmup, s.seed);
  row("policy", s.policy);
  row("n_links", fmt::format("{}", s.n_links));
  row("sum_rate", fmt::format("{:.6g}", s.sum_rate));
  row("sum_utility", fmt::format("{:.6g}", s.sum_utility));
  row("avg_queue", fmt::format("{:.6g}", s.avg_queue));
  row("avg_interference", fmt::format("{:.6g}", s.avg_interference));
  row("avg_service", fmt::format("{:.6g}", s.avg_service));
  row("success_frac", fmt::format("{:.4f}", s.success_frac));
  row("collision_frac", fmt::format("{:.4f}", s.collision_frac));
  row("idle_frac", fmt::format("{:.4f}", s.idle_frac));
  row("final_z", fmt::format("{:.6g}", s.final_z));
  row("nu_violations", fmt::format("{}", s.nu_violations));
  if (s.beta) {
    row("beta", fmt::format("{:.4f} [{:.4f}, {:.4f}]", *s.beta, s.beta_ci_low.value_or(0.0),
                            s.beta_ci_high.value_or(0.0)));
  }
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  RunConfig c = load_with_overrides(a);
  fs::create_directories(a.out);
  std::ofstream trace;
  RunOptions opts;
  if (a.trace) {
    trace.open(fs::path(a.out) / "trace.csv", std::ios::binary);
    if (!trace) throw std::runtime_error("cannot write trace.csv");
    opts.trace = &trace;
    if (a.trace_queues) opts.trace_queues = *a.trace_queues;
  }
  RunSummary summary;
  if (a.beta && c.policy.kind != PolicyKind::Centralized) {
    summary = run_paired(c, opts).distributed.summary;
  } else {
    summary = run(c, opts).summary;
    if (a.beta) {
      summary.beta = 1.0;
      summary.beta_ci_low = 1.0;
      summary.beta_ci_high = 1.0;
    }
  }
  if (a.trace) {
    trace.close();
    if (!trace) throw std::runtime_error("error writing trace.csv");
  }
  write_file(fs::path(a.out) / "summary.json", to_json(summary).dump(2) + "\n");
  write_file(fs::path(a.out) / "effective_config.json", to_json(c).dump(2) + "\n");
  print_summary(out, summary);
  return kExitOk;
}

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  RunConfig base = load_with_overrides(a.base);
  if (!is_sweep_axis(a.axis)) throw std::invalid_argument("unknown sweep axis '" + a.axis + "'");
  std::vector<RunSummary> results = sweep(base, a.axis, a.values);
  fs::create_directories(a.base.out);
  std::string csv =
      "value,policy,seed,sum_rate,sum_utility,avg_queue,avg_interference,avg_service,"
      "idle_frac,collision_frac,success_frac,final_z,max_z,nu_violations\n";
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  fmt::print(out, "{:>12} {:>14} {:>12} {:>12} {:>12} {:>10}\n", a.axis, "policy", "sum_rate",
             "sum_utility", "avg_queue", "avg_interf");
  for (std::size_t k = 0; k < results.size(); ++k) {
    const RunSummary& s = results[k];
    csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", a.values[k], s.policy, s.seed,
                       s.sum_rate, s.sum_utility, s.avg_queue, s.avg_interference, s.avg_service,
                       s.idle_frac, s.collision_frac, s.success_frac, s.final_z, s.max_z,
                       s.nu_violations);
    auto j = to_json(s);
    arr.push_back(j);
    fmt::print(out, "{:>12} {:>14} {:>12.6g} {:>12.6g} {:>12.6g} {:>10.4g}\n", a.values[k], s.policy,
               s.sum_rate, s.sum_utility, s.avg_queue, s.avg_interference);
  }
  write_file(fs::path(a.base.out) / "sweep.csv", csv);
  write_file(fs::path(a.base.out) / "sweep.json", arr.dump(2) + "\n");
  return kExitOk;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

int cmd_boundary(const BoundaryArgs& a, std::ostream& out) {
  BoundaryConfig c = load_boundary_config(a.config);
  if (a.gamma) c.gamma = parse_real_or_inf(*a.gamma, "--gamma");
  if (!(c.gamma > 0.0)) throw std::invalid_argument("--gamma must be > 0");
  if (a.grid) c.grid = parse_grid(*a.grid);
  if (a.seed) c.solver.seed = *a.seed;
  if (a.unconstrained) c.unconstrained = true;

  const std::size_t n = c.fading.n_links;
  std::vector<TracedPoint> trace =
      c.unconstrained
          ? trace_boundary(c.fading, c.pivot, c.varied, c.grid,
                           std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity(), c.solver, false)
          : trace_boundary(c.fading, c.pivot, c.varied, c.grid, c.gamma, c.nu, c.solver, true);

  std::string csv = "alpha_target,status";
  for (std::size_t j = 0; j < n; ++j) csv += fmt::format(",rate_{}", j + 1);
  csv += ",interference,mu";
  for (std::size_t j = 0; j < n; ++j) csv += fmt::format(",lambda_{}", j + 1);
  csv += ",res_rate,res_interference,res_slack,res_gap,iterations\n";
  for (const auto& tp : trace) {
    const BoundaryPoint& p = tp.point;
    csv += fmt::format("{},{}", tp.alpha, to_string(p.status));
    for (std::size_t j = 0; j < n; ++j) {
      csv += fmt::format(",{}", j < p.achieved_rates.size() ? p.achieved_rates[j] : 0.0);
    }
    csv += fmt::format(",{},{}", p.interference, p.mu);
    for (std::size_t j = 0; j < n; ++j) {
      double l = j == c.pivot ? 1.0 : (j < p.lambda.size() ? p.lambda[j] : 0.0);
      csv += fmt::format(",{}", l);
    }
    double slack = std::max(max_abs(p.residuals.slack_rate), std::abs(p.residuals.slack_interference));
    csv += fmt::format(",{},{},{},{},{}\n", max_abs(p.residuals.rate), p.residuals.interference, slack,
                       p.residuals.gap, p.iterations);
    fmt::print(out, "alpha={:<10.5g} status={:<10} rate_{}={:.5g} rate_{}={:.5g} mu={:.4g}\n", tp.alpha,
               to_string(p.status), c.pivot + 1,
               c.pivot < p.achieved_rates.size() ? p.achieved_rates[c.pivot] : 0.0, c.varied + 1,
               c.varied < p.achieved_rates.size() ? p.achieved_rates[c.varied] : 0.0, p.mu);
  }
  fs::path dest(a.out);
  if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
  write_file(dest, csv);
  return kExitOk;
}

int cmd_check(const CheckArgs& a, std::ostream& out, std::ostream& err) {
  bool known = false;
  for (auto s : check_suites()) known = known || s == a.suite;
  if (!known) {
    fmt::print(err, "error: unknown suite '{}' (expected one of enumeration, theorem4, theorem5, "
               "uniformity, all)\n", a.suite);
    return kExitConfig;
  }
  CheckOptions opts;
  opts.trials = a.trials;
  opts.seed = a.seed;
  std::size_t failed = 0;
  auto results = run_checks(a.suite, opts);
  for (const auto& r : results) {
    fmt::print(out, "{} {:<10} {:<24} {}\n", r.pass ? "PASS" : "FAIL", r.suite, r.name, r.detail);
    failed += !r.pass;
  }
  fmt::print(out, "{} of {} checks passed\n", results.size() - failed, results.size());
  return failed == 0 ? kExitOk : kExitRuntime;
}

void add_run_overrides(CLI::App* cmd, SimulateArgs& a) {
  cmd->add_option("-c,--config", a.config, "Run configuration (JSON); defaults to the built-in setup");
  cmd->add_option("-o,--out", a.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", a.seed, "Override the master seed");
  cmd->add_option("--horizon", a.horizon, "Override the number of slots");
  cmd->add_option("--policy", a.policy,
                  "Override the policy: centralized, cads_uniform, cads_optimal, cads_linear, irds");
  cmd->add_option("--gamma", a.gamma, "Override the average interference budget (number or inf)");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Slotted-time simulator for interference-constrained edge scheduling"};
  app.name("edgesim");
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run one simulation");
  add_run_overrides(simulate, sim);
  simulate->add_flag("--trace", sim.trace, "Write the per-slot trace.csv");
  simulate->add_option("--trace-queues", sim.trace_queues, "Queue columns in the trace (default N)");
  simulate->add_flag("--beta", sim.beta, "Also run a matched-seed centralized twin and report beta");
  simulate->footer(kSimulateFooter);

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run one simulation per value of a parameter");
  add_run_overrides(sweep_cmd, sw.base);
  sweep_cmd->add_option("--axis", sw.axis, "Parameter to vary: V, gamma, N, M, tau, policy")->required();
  sweep_cmd->add_option("--values", sw.values, "Comma-separated values")->delimiter(',')->required();
  sweep_cmd->footer(kSweepFooter);

  BoundaryArgs bd;
  auto* boundary = app.add_subcommand("boundary", "Trace a two-device stability-region boundary");
  boundary->add_option("-c,--config", bd.config, "Boundary configuration (JSON)")->required();
  boundary->add_option("-o,--out", bd.out, "Output CSV path")->capture_default_str();
  boundary->add_option("--gamma", bd.gamma, "Override the interference budget (number or inf)");
  boundary->add_option("--grid", bd.grid, "Targets for the varied device");
  boundary->add_option("--seed", bd.seed, "Override the solver seed");
  boundary->add_flag("--unconstrained", bd.unconstrained, "Drop the interference constraints (mu = 0)");
  boundary->footer(kBoundaryFooter);

  CheckArgs ck;
  auto* check = app.add_subcommand("check", "Run analytical oracle suites");
  check->add_option("--suite", ck.suite, "enumeration, theorem4, theorem5, uniformity, or all")
      ->capture_default_str();
  check->add_option("--trials", ck.trials, "Monte Carlo trials per case")->capture_default_str();
  check->add_option("--seed", ck.seed, "Seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(sim, out);
    if (*sweep_cmd) return cmd_sweep(sw, out);
    if (*boundary) return cmd_boundary(bd, out);
    if (*check) return cmd_check(ck, out, err);
  } catch (const ConfigError& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace edgesim
