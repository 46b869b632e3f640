#include "edgesim/checks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>

#include "edgesim/analytics.hpp"
#include "edgesim/mapping.hpp"
#include "edgesim/rng.hpp"
#include "edgesim/schedulers.hpp"

namespace edgesim {

std::vector<std::string_view> check_suites() {
  return {"enumeration", "theorem4", "theorem5", "uniformity", "all"};
}

double enumerate_success(int n, int m, std::vector<double>* per_slot) {
  if (n < 1 || m < 1) throw std::invalid_argument("enumerate_success: n, M must be >= 1");
  std::vector<int> picks(static_cast<std::size_t>(n), 1);
  std::vector<std::size_t> wins(static_cast<std::size_t>(m), 0);
  std::size_t total = 0, success = 0;
  for (;;) {
    int earliest = m + 1, holders = 0;
    for (int p : picks) {
      if (p < earliest) {
        earliest = p;
        holders = 1;
      } else if (p == earliest) {
        ++holders;
      }
    }
    ++total;
    if (holders == 1) {
      ++success;
      ++wins[static_cast<std::size_t>(earliest - 1)];
    }
    // Odometer increment over {1..M}^n.
    std::size_t d = 0;
    while (d < picks.size() && picks[d] == m) picks[d++] = 1;
    if (d == picks.size()) break;
    ++picks[d];
  }
  if (per_slot) {
    per_slot->resize(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
      (*per_slot)[static_cast<std::size_t>(k)] =
          static_cast<double>(wins[static_cast<std::size_t>(k)]) / static_cast<double>(total);
    }
  }
  return static_cast<double>(success) / static_cast<double>(total);
}

double chi_square_uniform_pvalue(const std::vector<std::size_t>& counts) {
  if (counts.size() < 2) return 1.0;
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  if (total <= 0.0) return 1.0;
  const double expected = total / static_cast<double>(counts.size());
  double stat = 0.0;
  for (auto c : counts) {
    double d = static_cast<double>(c) - expected;
    stat += d * d / expected;
  }
  boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

namespace {

void enumeration_suite(std::vector<CheckResult>& out) {
  for (int n = 1; n <= 4; ++n) {
    for (int m = 1; m <= 6; ++m) {
      std::vector<double> per_slot;
      double exact = enumerate_success(n, m, &per_slot);
      double formula = success_probability(n, m);
      double worst = std::abs(exact - formula);
      for (int k = 1; k <= m; ++k) {
        worst = std::max(worst, std::abs(per_slot[static_cast<std::size_t>(k - 1)] -
                                         success_probability_at(n, m, k)));
      }
      out.push_back({"enumeration", fmt::format("n={} M={}", n, m), worst <= 1e-12,
                     fmt::format("exact={:.15f} formula={:.15f} max_err={:.2e}", exact, formula, worst)});
    }
  }
}

void theorem4_suite(const CheckOptions& opts, std::vector<CheckResult>& out) {
  Rng rng(derive_seed(opts.seed, StreamTag::Check, 4));
  std::vector<int> picks;
  for (int n : {1, 2, 3, 5, 8, 12, 20}) {
    for (int m : {1, 2, 5, 10, 20, 40}) {
      picks.assign(static_cast<std::size_t>(n), 0);
      std::size_t success = 0;
      for (std::size_t t = 0; t < opts.trials; ++t) {
        for (int& p : picks) p = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
        success += resolve_contention(picks, m, 1.0).outcome == Outcome::Success;
      }
      const double p = success_probability(n, m);
      const double freq = static_cast<double>(success) / static_cast<double>(opts.trials);
      const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(opts.trials));
      const bool pass = std::abs(freq - p) <= 4.0 * se + 1e-12;
      out.push_back({"theorem4", fmt::format("n={} M={}", n, m), pass,
                     fmt::format("formula={:.6f} mc={:.6f} z={:.2f}", p, freq,
                                 se > 0.0 ? (freq - p) / se : 0.0)});
    }
  }
}

void theorem5_suite(const CheckOptions& opts, std::vector<CheckResult>& out) {
  struct Family {
    const char* name;
    double (*draw)(Rng&);
  };
  const Family families[] = {
      {"exponential", [](Rng& r) { return r.exponential(1.0); }},
      {"uniform", [](Rng& r) { return r.uniform(); }},
  };
  std::vector<std::pair<int, int>> grid;
  for (int n : {1, 2, 3, 4, 5, 8, 10, 15, 20}) {
    for (int m : {n, n + 1, 2 * n, 3 * n, 40, 60}) {
      if (m >= n && m <= 60 && std::find(grid.begin(), grid.end(), std::pair{n, m}) == grid.end()) {
        grid.emplace_back(n, m);
      }
    }
  }
  std::uint64_t stream = 0;
  for (const auto& fam : families) {
    for (auto [n, m] : grid) {
      Rng rng(derive_seed(opts.seed, StreamTag::Check, 500 + stream++));
      // Each device maps against its own learned sample of the weight law.
      std::vector<double> reference(4096);
      for (double& x : reference) x = fam.draw(rng);
      std::sort(reference.begin(), reference.end());
      std::vector<double> w(static_cast<std::size_t>(n));
      std::vector<int> picks(static_cast<std::size_t>(n));
      double sum_sched = 0.0, sum_max = 0.0;
      for (std::size_t t = 0; t < opts.trials; ++t) {
        double best = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
          w[i] = fam.draw(rng);
          best = std::max(best, w[i]);
          picks[i] = minislot_uniform(w[i], reference, m);
        }
        ScheduleDecision d = resolve_contention(picks, m, 1.0);
        if (d.scheduled) sum_sched += w[*d.scheduled];
        sum_max += best;
      }
      const double bound = alpha_bound(n, m);
      const double ratio = sum_sched / sum_max;
      out.push_back({"theorem5", fmt::format("{} n={} M={}", fam.name, n, m), ratio >= bound,
                     fmt::format("E[sched]/E[max]={:.4f} alpha={:.4f}", ratio, bound)});
    }
  }
}

void uniformity_suite(const CheckOptions& opts, std::vector<CheckResult>& out) {
  for (int m : {10, 40, 200}) {
    PolicyConfig cfg;
    cfg.kind = PolicyKind::CadsUniform;
    cfg.m_slots = m;
    cfg.tau = 1e-4;
    cfg.reservoir_size = 512;
    CadsScheduler sched(cfg, 1);
    Rng rng(derive_seed(opts.seed, StreamTag::Check, 1000 + static_cast<std::uint64_t>(m)));
    NetworkState state(1);
    state.q[0] = 5.0;
    state.z = 0.5;
    ChannelState ch{{0.0}, {0.0}, {0.0}};
    std::vector<double> rates(1);
    std::vector<std::size_t> counts(static_cast<std::size_t>(m), 0);
    std::size_t events = 0;
    // Skip the events before the reservoir first fills.
    std::size_t slots = 0;
    while (events < opts.trials) {
      ch.h[0] = rng.exponential(2.0);
      ch.g[0] = rng.exponential(1.0);
      rates[0] = rate(ch.h[0], 0.0, 1.0, 1.0);
      ScheduleDecision d = sched.schedule(SlotView{state, ch, rates, 1.0});
      if (++slots <= cfg.reservoir_size || !d.winning_minislot) continue;
      ++counts[static_cast<std::size_t>(*d.winning_minislot - 1)];
      ++events;
    }
    double p = chi_square_uniform_pvalue(counts);
    out.push_back({"uniformity", fmt::format("M={} events={}", m, events), p >= 0.01,
                   fmt::format("chi-square p={:.4f}", p)});
  }
}

}  // namespace

std::vector<CheckResult> run_checks(std::string_view suite, const CheckOptions& opts) {
  std::vector<CheckResult> out;
  const bool all = suite == "all";
  bool known = all;
  if (all || suite == "enumeration") {
    enumeration_suite(out);
    known = true;
  }
  if (all || suite == "theorem4") {
    theorem4_suite(opts, out);
    known = true;
  }
  if (all || suite == "theorem5") {
    theorem5_suite(opts, out);
    known = true;
  }
  if (all || suite == "uniformity") {
    uniformity_suite(opts, out);
    known = true;
  }
  if (!known) throw std::invalid_argument("unknown suite '" + std::string(suite) + "'");
  return out;
}

}  // namespace edgesim
