// Acceptance run: one PASS/FAIL line per criterion. Every oracle here is
// computed independently of the code path it checks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>

#include "edgesim/analytics.hpp"
#include "edgesim/cli.hpp"
#include "edgesim/config.hpp"
#include "edgesim/engine.hpp"
#include "edgesim/mapping.hpp"
#include "edgesim/schedulers.hpp"
#include "edgesim/stability.hpp"

using namespace edgesim;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kExactTol = 1e-12;
constexpr double kMcSigmas = 4.0;
constexpr std::size_t kTrials = 100000;
constexpr double kC1Seconds = 10.0;
constexpr double kC2Seconds = 30.0;
constexpr double kInterferenceSlack = 1.05;
constexpr double kC3NuCap = 2.0;
constexpr double kC3RunSeconds = 60.0;
constexpr double kUtilityNoise = 0.02;
constexpr double kQueueRatioMin = 5.0 * (1.0 - 0.30);
constexpr double kNestTol = 0.01;       // fraction of the max pivot rate
constexpr double kCoincideTol = 0.02;   // fraction of the max pivot rate
constexpr double kLowSegment = 0.5;     // pivot rate <= this fraction of its max
constexpr double kC5Seconds = 300.0;
constexpr double kOptRatioMin = 0.7;
constexpr double kUniRatioMin = 0.55;
constexpr double kIrdsRatioMax = 0.5;
constexpr double kC6Seconds = 300.0;
constexpr double kC7Tau = 2e-4;
constexpr double kChiSquareAlpha = 0.01;
constexpr std::uint64_t kSimHorizon = 200000;

const fs::path kConfigs = fs::path(EDGESIM_SOURCE_DIR) / "configs";

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Independent Pearson chi-square upper tail.
double chi_square_p(const std::vector<std::size_t>& counts) {
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  const double e = total / static_cast<double>(counts.size());
  double stat = 0.0;
  for (auto c : counts) stat += (c - e) * (c - e) / e;
  boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

// Recursive count of pick vectors with a unique earliest mini-slot.
std::size_t count_unique_min(int left, int m, int best, int holders) {
  if (left == 0) return holders == 1 ? 1 : 0;
  std::size_t total = 0;
  for (int p = 1; p <= m; ++p) {
    if (p < best) total += count_unique_min(left - 1, m, p, 1);
    else if (p == best) total += count_unique_min(left - 1, m, best, holders + 1);
    else total += count_unique_min(left - 1, m, best, holders);
  }
  return total;
}

RunConfig reduced_config() {
  RunConfig c = load_run_config(kConfigs / "reduced_n20.json");
  c.horizon = kSimHorizon;
  c.warmup.reset();
  return c;
}

Verdict criterion1() {
  auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int n = 1; n <= 4; ++n) {
    for (int m = 1; m <= 6; ++m) {
      const double exact = static_cast<double>(count_unique_min(n, m, m + 1, 0)) /
                           std::pow(static_cast<double>(m), n);
      worst = std::max(worst, std::abs(exact - success_probability(n, m)));
    }
  }
  Rng rng(derive_seed(101, StreamTag::Check));
  double worst_z = 0.0;
  int cases = 0, misses = 0;
  std::vector<int> picks;
  for (int n : {1, 2, 3, 4, 5, 8, 12, 16, 20}) {
    for (int m : {1, 2, 3, 5, 10, 20, 30, 40}) {
      picks.assign(static_cast<std::size_t>(n), 0);
      std::size_t wins = 0;
      for (std::size_t t = 0; t < kTrials; ++t) {
        for (int& p : picks) p = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
        wins += resolve_contention(picks, m, 1.0).outcome == Outcome::Success;
      }
      const double p = success_probability(n, m);
      const double freq = static_cast<double>(wins) / kTrials;
      const double se = std::sqrt(p * (1.0 - p) / kTrials);
      const double dev = std::abs(freq - p);
      if (dev > kMcSigmas * se + kExactTol) ++misses;
      if (se > 0.0) worst_z = std::max(worst_z, dev / se);
      ++cases;
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= kExactTol && misses == 0 && secs < kC1Seconds,
          fmt::format("enum max err {:.1e}; MC {} cases, {} beyond {} se (max z {:.2f}); {:.1f} s",
                      worst, cases, misses, kMcSigmas, worst_z, secs)};
}

Verdict criterion2() {
  auto t0 = std::chrono::steady_clock::now();
  using Draw = std::function<double(Rng&)>;
  const std::pair<const char*, Draw> families[] = {
      {"exponential", [](Rng& r) { return r.exponential(1.0); }},
      {"uniform", [](Rng& r) { return r.uniform(); }},
  };
  int cases = 0, violations = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  std::string worst;
  std::uint64_t stream = 0;
  for (const auto& [name, draw] : families) {
    for (int n : {1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20}) {
      for (int m : {1, 2, 3, 5, 8, 10, 15, 20, 25, 30, 40, 50, 60}) {
        if (m < n) continue;
        Rng rng(derive_seed(202, StreamTag::Check, stream++));
        // Devices rank weights against a learned sample of the weight law.
        std::vector<double> reference(4096);
        for (double& x : reference) x = draw(rng);
        std::sort(reference.begin(), reference.end());
        std::vector<double> w(static_cast<std::size_t>(n));
        std::vector<int> picks(static_cast<std::size_t>(n));
        double sched = 0.0, best_sum = 0.0;
        for (std::size_t t = 0; t < kTrials; ++t) {
          double best = 0.0;
          for (int i = 0; i < n; ++i) {
            w[i] = draw(rng);
            best = std::max(best, w[i]);
            picks[i] = minislot_uniform(w[i], reference, m);
          }
          // Independent resolution: unique earliest pick wins.
          int earliest = m + 1, holders = 0, who = -1;
          for (int i = 0; i < n; ++i) {
            if (picks[i] < earliest) earliest = picks[i], holders = 1, who = i;
            else if (picks[i] == earliest) ++holders;
          }
          if (holders == 1 && earliest <= m) sched += w[who];
          best_sum += best;
        }
        const double ratio = sched / best_sum;
        const double margin = ratio - alpha_bound(n, m);
        if (margin < 0.0) ++violations;
        if (margin < min_margin) {
          min_margin = margin;
          worst = fmt::format("{} n={} M={}", name, n, m);
        }
        ++cases;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < kC2Seconds,
          fmt::format("{} cases, {} violations, tightest margin {:.4f} ({}); {:.1f} s", cases,
                      violations, min_margin, worst, secs)};
}

// Replays the channel sequence and the trace's scheduled column to recount
// nu violations and the post-warmup interference average.
struct Replay {
  std::uint64_t violations = 0;
  double avg_interference = 0.0;
};

Replay replay(const RunConfig& c, const std::string& trace) {
  ChannelSource source(c.fading, c.seed);
  ChannelState ch;
  std::istringstream in(trace);
  std::string line;
  std::getline(in, line);
  Replay r;
  double sum = 0.0;
  const double airtime = c.policy.airtime();
  const std::uint64_t warmup = c.effective_warmup();
  for (std::uint64_t t = 0; std::getline(in, line); ++t) {
    source.next(ch);
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    const std::size_t who = std::stoul(line.substr(a + 1, b - a - 1));
    if (who == 0) continue;
    const double g = ch.g[who - 1];
    if (c.tx_power * g > c.policy.nu) ++r.violations;
    if (t >= warmup) sum += airtime * c.tx_power * g;
  }
  r.avg_interference = sum / static_cast<double>(c.horizon - warmup);
  return r;
}

Verdict criterion3() {
  std::string detail;
  bool pass = true;
  for (PolicyKind kind : {PolicyKind::Centralized, PolicyKind::CadsOptimal,
                          PolicyKind::CadsUniform, PolicyKind::Irds}) {
    auto t0 = std::chrono::steady_clock::now();
    RunConfig c = reduced_config();
    c.policy.kind = kind;
    c.policy.nu = kC3NuCap;
    std::ostringstream trace;
    RunOptions o;
    o.trace = &trace;
    o.trace_queues = 0;
    RunSummary s = run(c, o).summary;
    const double secs = seconds_since(t0);
    Replay r = replay(c, trace.str());
    const bool ok = s.nu_violations == 0 && r.violations == 0 &&
                    r.avg_interference <= kInterferenceSlack * c.gamma &&
                    std::abs(r.avg_interference - s.avg_interference) <= 1e-9 &&
                    secs < kC3RunSeconds;
    pass &= ok;
    detail += fmt::format("{}{}: viol={} I={:.4f} ({:.1f} s)", detail.empty() ? "" : "; ",
                          to_string(kind), r.violations, r.avg_interference, secs);
  }
  return {pass, fmt::format("gamma=0.1 nu={} N=20 T={}: {}", kC3NuCap, kSimHorizon, detail)};
}

Verdict criterion4() {
  RunConfig c = reduced_config();
  c.policy.kind = PolicyKind::Centralized;
  // One seed for every V: common channel sequences isolate the V effect
  // from channel noise, which is larger than the O(1/V) utility gain.
  const std::vector<double> values{5, 10, 20, 50, 100};
  std::vector<RunSummary> out;
  for (double v : values) {
    c.flow.v = v;
    out.push_back(run(c).summary);
  }
  bool utility_ok = out.back().sum_utility > out.front().sum_utility;
  bool queue_monotone = true;
  std::string detail;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (k > 0) {
      utility_ok &= out[k].sum_utility >= out[k - 1].sum_utility * (1.0 - kUtilityNoise);
      queue_monotone &= out[k].avg_queue > out[k - 1].avg_queue;
    }
    detail += fmt::format("V={}: U={:.4f} Q={:.0f}  ", values[k], out[k].sum_utility,
                          out[k].avg_queue);
  }
  const double ratio = out[4].avg_queue / out[1].avg_queue;
  return {utility_ok && queue_monotone && ratio >= kQueueRatioMin,
          fmt::format("{}Q(100)/Q(10)={:.2f} (min {:.2f})", detail, ratio, kQueueRatioMin)};
}

// Distance from p to the polyline through `pts`.
double polyline_distance(std::pair<double, double> p,
                         const std::vector<std::pair<double, double>>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    auto [ax, ay] = pts[k];
    auto [bx, by] = pts[k + 1];
    const double dx = bx - ax, dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((p.first - ax) * dx + (p.second - ay) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, std::hypot(p.first - ax - t * dx, p.second - ay - t * dy));
  }
  return best;
}

Verdict criterion5() {
  auto t0 = std::chrono::steady_clock::now();
  // (i) nesting in gamma.
  BoundaryConfig a = load_boundary_config(kConfigs / "two_pair.json");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<TracedPoint>> traces;
  for (double gamma : {0.05, 0.1, 0.2}) {
    traces.push_back(trace_boundary(a.fading, a.pivot, a.varied, a.grid, gamma, a.nu, a.solver));
  }
  double scale = 0.0;
  for (const auto& tp : traces[2]) scale = std::max(scale, tp.point.achieved_rates[a.pivot]);
  int compared = 0, broken = 0;
  for (std::size_t k = 0; k < a.grid.size(); ++k) {
    for (std::size_t g = 0; g + 1 < traces.size(); ++g) {
      const auto& tight = traces[g][k].point;
      const auto& loose = traces[g + 1][k].point;
      if (tight.status == SolveStatus::Infeasible) continue;
      ++compared;
      if (loose.status == SolveStatus::Infeasible ||
          tight.achieved_rates[a.pivot] > loose.achieved_rates[a.pivot] + kNestTol * scale) {
        ++broken;
      }
    }
  }
  std::string counts;
  for (const auto& t : traces) counts += fmt::format("{}/", feasible_points(t).size());
  counts.pop_back();

  // (ii) coincidence with the unconstrained boundary at low pivot rate.
  BoundaryConfig b = load_boundary_config(kConfigs / "two_pair_light_interference.json");
  auto constrained = trace_boundary(b.fading, b.pivot, b.varied, b.grid, 0.1, b.nu, b.solver);
  auto free = trace_boundary(b.fading, b.pivot, b.varied, b.grid, inf, inf, b.solver, false);
  StateBatch batch(b.fading, b.solver.batch, b.solver.seed, b.solver.power);
  std::vector<std::pair<double, double>> poly;
  for (const auto& tp : feasible_points(free)) {
    poly.emplace_back(tp.point.achieved_rates[b.varied], tp.point.achieved_rates[b.pivot]);
  }
  poly.emplace_back(batch.mean_rate(b.varied), 0.0);
  const double peak = poly.front().second;
  double cmax = 0.0;
  for (const auto& tp : feasible_points(constrained)) {
    cmax = std::max(cmax, tp.point.achieved_rates[b.pivot]);
  }
  int low_points = 0;
  double worst = 0.0;
  for (const auto& tp : feasible_points(constrained)) {
    const double r1 = tp.point.achieved_rates[b.pivot];
    if (r1 > kLowSegment * cmax) continue;
    ++low_points;
    worst = std::max(worst, polyline_distance({tp.point.achieved_rates[b.varied], r1}, poly) / peak);
  }
  const double gap_at_zero = (peak - constrained.front().point.achieved_rates[b.pivot]) / peak;
  const double secs = seconds_since(t0);
  const bool nested = broken == 0 && compared > 0;
  const bool coincide = low_points > 0 && worst <= kCoincideTol;
  return {nested && coincide && secs < kC5Seconds,
          fmt::format("(i) {} comparisons, {} not nested, feasible points {}; (ii) {} low-rate "
                      "points, max distance {:.2f}% of peak (tol {:.0f}%), gap at alpha=0 {:.1f}%; "
                      "{:.0f} s",
                      compared, broken, counts, low_points, 100 * worst, 100 * kCoincideTol,
                      100 * gap_at_zero,
                      secs)};
}

Verdict criterion6() {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<double> rates;
  for (PolicyKind kind : {PolicyKind::Centralized, PolicyKind::CadsOptimal,
                          PolicyKind::CadsUniform, PolicyKind::Irds}) {
    RunConfig c = reduced_config();
    c.policy.kind = kind;
    rates.push_back(run(c).summary.sum_rate);
  }
  const double secs = seconds_since(t0);
  const double opt = rates[1] / rates[0], uni = rates[2] / rates[0], irds = rates[3] / rates[0];
  const bool order = rates[0] > rates[1] && rates[1] > rates[2] && rates[2] > rates[3];
  return {order && opt >= kOptRatioMin && uni >= kUniRatioMin && irds <= kIrdsRatioMax &&
              secs < kC6Seconds,
          fmt::format("centralized {:.4f}, cads_optimal {:.4f} ({:.3f}x), cads_uniform {:.4f} "
                      "({:.3f}x), irds {:.4f} ({:.3f}x); {:.0f} s",
                      rates[0], rates[1], opt, rates[2], uni, rates[3], irds, secs)};
}

Verdict criterion7() {
  const int ms[] = {10, 40, 160, 640};
  std::vector<double> rates;
  std::string detail;
  for (int m : ms) {
    RunConfig c = reduced_config();
    c.policy.kind = PolicyKind::CadsUniform;
    c.policy.tau = kC7Tau;
    c.policy.m_slots = m;
    rates.push_back(run(c).summary.sum_rate);
    detail += fmt::format("M={}: {:.4f}  ", m, rates.back());
  }
  const auto top = static_cast<std::size_t>(std::max_element(rates.begin(), rates.end()) -
                                            rates.begin());
  return {top != 0 && top + 1 != rates.size(),
          fmt::format("tau={} {}argmax M={}", kC7Tau, detail, ms[top])};
}

Verdict criterion8() {
  bool pass = true;
  std::string detail;
  for (int m : {10, 40, 200}) {
    PolicyConfig cfg;
    cfg.kind = PolicyKind::CadsUniform;
    cfg.m_slots = m;
    cfg.tau = 1e-4;
    cfg.reservoir_size = 512;
    CadsScheduler sched(cfg, 1, 808);
    Rng rng(derive_seed(808, StreamTag::Check, static_cast<std::uint64_t>(m)));
    NetworkState state(1);
    state.q[0] = 5.0;
    state.z = 0.5;
    ChannelState ch{{0.0}, {0.0}, {0.0}};
    std::vector<double> r(1);
    std::vector<std::size_t> counts(static_cast<std::size_t>(m), 0);
    std::size_t events = 0, slots = 0;
    while (events < kTrials) {
      ch.h[0] = rng.exponential(2.0);
      ch.g[0] = rng.exponential(1.0);
      r[0] = std::log1p(ch.h[0]);
      ScheduleDecision d = sched.schedule(SlotView{state, ch, r, 1.0});
      if (++slots <= cfg.reservoir_size || !d.winning_minislot) continue;
      ++counts[static_cast<std::size_t>(*d.winning_minislot - 1)];
      ++events;
    }
    const double p = chi_square_p(counts);
    pass &= p >= kChiSquareAlpha;
    detail += fmt::format("M={}: p={:.3f}  ", m, p);
  }
  return {pass, fmt::format("{}events={} each", detail, kTrials)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Verdict criterion9() {
  bool pass = true;
  std::string detail;
  for (const char* policy : {"centralized", "cads_optimal", "cads_uniform", "irds"}) {
    std::string files[2][2];
    for (int k = 0; k < 2; ++k) {
      fs::path dir = fs::temp_directory_path() / fmt::format("edgesim_accept_{}_{}", policy, k);
      fs::remove_all(dir);
      std::vector<std::string> args{"edgesim", "simulate", "-c",
                                    (kConfigs / "reduced_n20.json").string(), "-o", dir.string(),
                                    "--horizon", "20000", "--seed", "42", "--policy", policy,
                                    "--trace"};
      std::vector<const char*> argv;
      for (auto& s : args) argv.push_back(s.c_str());
      std::ostringstream out, err;
      if (run_cli(static_cast<int>(argv.size()), argv.data(), out, err) != kExitOk) pass = false;
      files[k][0] = slurp(dir / "summary.json");
      files[k][1] = slurp(dir / "trace.csv");
      fs::remove_all(dir);
    }
    const bool same = !files[0][0].empty() && !files[0][1].empty() &&
                      files[0][0] == files[1][0] && files[0][1] == files[1][1];
    pass &= same;
    detail += fmt::format("{} {}  ", policy, same ? "identical" : "DIFFERENT");
  }
  return {pass, detail + "(summary.json, trace.csv; T=20000)"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Verdict (*fn)();
  };
  const Criterion criteria[] = {
      {"success probability exact and Monte Carlo", criterion1},
      {"scheduled weight bound, zero violations", criterion2},
      {"interference guarantees", criterion3},
      {"utility and backlog trends in V", criterion4},
      {"two-pair boundaries: nesting and coincidence", criterion5},
      {"policy ordering at reduced scale", criterion6},
      {"interior maximum in M", criterion7},
      {"mini-slot uniformity", criterion8},
      {"byte-identical reruns", criterion9},
  };
  int failed = 0, index = 0;
  for (const auto& c : criteria) {
    ++index;
    Verdict v;
    try {
      v = c.fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %d %s: %s\n", v.pass ? "PASS" : "FAIL", index, c.name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
