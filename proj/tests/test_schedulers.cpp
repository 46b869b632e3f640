#include <stdexcept>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "edgesim/schedulers.hpp"

using namespace edgesim;

namespace {

struct Fixture {
  NetworkState state;
  ChannelState channel;
  std::vector<double> rates;

  explicit Fixture(std::size_t n) : state(n), rates(n, 1.0) {
    channel.h.assign(n, 1.0);
    channel.g.assign(n, 0.1);
    channel.i_ext.assign(n, 0.0);
  }
  SlotView view(double power = 1.0) const { return SlotView{state, channel, rates, power}; }
};

PolicyConfig policy(PolicyKind kind, int m = 10, double nu = std::numeric_limits<double>::infinity()) {
  PolicyConfig c;
  c.kind = kind;
  c.m_slots = m;
  c.tau = 1e-3;
  c.nu = nu;
  return c;
}

}  // namespace

TEST_CASE("weight examples") {
  CHECK(weight(10.0, 2.0, 4.0, 0.5, 1.0) == 18.0);
  CHECK(weight(3.0, 2.0, 0.0, 7.0, 1.0) == 6.0);
  CHECK(weight(1.0, 1.0, 1.0, 1.0, 2.0) == -1.0);
}

TEST_CASE("centralized picks the feasible argmax") {
  Fixture f(3);
  f.state.q = {5.0, 9.0, 2.0};
  ScheduleDecision d = schedule_centralized(f.view(), policy(PolicyKind::Centralized));
  REQUIRE(d.scheduled);
  CHECK(*d.scheduled == 1);
  CHECK(d.outcome == Outcome::Success);
  CHECK(d.contenders == 3);

  f.channel.g = {0.1, 2.0, 0.1};
  d = schedule_centralized(f.view(), policy(PolicyKind::Centralized, 10, 1.0));
  REQUIRE(d.scheduled);
  CHECK(*d.scheduled == 0);
}

TEST_CASE("centralized idles when every weight is negative") {
  Fixture f(3);
  f.state.q = {1.0, 1.0, 1.0};
  f.state.z = 100.0;
  ScheduleDecision d = schedule_centralized(f.view(), policy(PolicyKind::Centralized));
  CHECK_FALSE(d.scheduled);
  CHECK(d.outcome == Outcome::Idle);
}

TEST_CASE("centralized ties go to the lowest index") {
  Fixture f(4);
  f.state.q = {1.0, 3.0, 3.0, 2.0};
  ScheduleDecision d = schedule_centralized(f.view(), policy(PolicyKind::Centralized));
  CHECK(*d.scheduled == 1);
}

TEST_CASE("centralized choice is invariant to positive scaling of weights") {
  Rng rng(3);
  for (int k = 0; k < 1000; ++k) {
    Fixture f(6);
    for (std::size_t i = 0; i < 6; ++i) {
      f.state.q[i] = 10.0 * rng.uniform();
      f.rates[i] = rng.exponential(1.0);
      f.channel.g[i] = rng.exponential(1.0);
    }
    f.state.z = 2.0 * rng.uniform();
    ScheduleDecision a = schedule_centralized(f.view(), policy(PolicyKind::Centralized));
    // Scaling Q and Z by c scales every weight by c.
    const double c = 0.01 + 50.0 * rng.uniform();
    for (double& q : f.state.q) q *= c;
    f.state.z *= c;
    ScheduleDecision b = schedule_centralized(f.view(), policy(PolicyKind::Centralized));
    CHECK(a.scheduled == b.scheduled);
  }
}

TEST_CASE("contention resolution examples") {
  std::vector<int> p1{2, 5, 5};
  ScheduleDecision d = resolve_contention(p1, 10, 0.9);
  REQUIRE(d.scheduled);
  CHECK(*d.scheduled == 0);
  CHECK(*d.winning_minislot == 2);
  CHECK(d.airtime == 0.9);

  std::vector<int> p2{3, 3, 7};
  d = resolve_contention(p2, 10, 0.9);
  CHECK(d.outcome == Outcome::Collision);
  CHECK_FALSE(d.scheduled);
  CHECK(*d.winning_minislot == 3);

  std::vector<int> p3{11, 11};
  d = resolve_contention(p3, 10, 0.9);
  CHECK(d.outcome == Outcome::Idle);
  CHECK(d.contenders == 0);
}

TEST_CASE("contention winner holds the unique minimum pick") {
  Rng rng(8);
  for (int k = 0; k < 20000; ++k) {
    const int m = 1 + static_cast<int>(rng.below(8));
    std::vector<int> picks(1 + rng.below(6));
    for (int& p : picks) p = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(m + 1)));
    ScheduleDecision d = resolve_contention(picks, m, 1.0);
    int lo = m + 1, holders = 0;
    for (int p : picks) lo = std::min(lo, p);
    for (int p : picks) holders += p == lo && p <= m;
    if (d.outcome == Outcome::Success) {
      CHECK(picks[*d.scheduled] == lo);
      CHECK(holders == 1);
    } else if (d.outcome == Outcome::Collision) {
      CHECK(holders >= 2);
    } else {
      CHECK(lo == m + 1);
    }
  }
}

TEST_CASE("IRDS transmit probability") {
  CHECK(irds_transmit_probability(0.0) == 0.5);
  CHECK(irds_transmit_probability(-1e6) == 0.0);
  CHECK(irds_transmit_probability(1e6) == 1.0);
  CHECK(irds_transmit_probability(2.0) == doctest::Approx(std::exp(2.0) / (std::exp(2.0) + 1.0)));
}

TEST_CASE("IRDS rule cases") {
  using B = std::vector<std::uint8_t>;
  // Case 1: unique contender, nobody held the slot, p = 1.
  CHECK(irds_rule(B{0, 1, 0}, B{1, 1, 1}, std::nullopt) == std::optional<std::size_t>(1));
  // Case 1 blocked by another device's previous hold; device 0 persists instead.
  CHECK(irds_rule(B{0, 1, 0}, B{1, 1, 1}, 0) == std::optional<std::size_t>(0));
  // Case 2: contention failed (two contenders), previous holder with p = 1 keeps it.
  CHECK(irds_rule(B{1, 1, 0}, B{0, 0, 1}, 2) == std::optional<std::size_t>(2));
  // Case 3: previous holder draws p = 0 and contention failed.
  CHECK(irds_rule(B{1, 1, 0}, B{1, 1, 0}, 2) == std::nullopt);
  // Unique contender with p = 0 does not transmit.
  CHECK(irds_rule(B{0, 0, 1}, B{1, 1, 0}, std::nullopt) == std::nullopt);
  // A lone contender that held the slot last time keeps it.
  CHECK(irds_rule(B{1, 0, 0}, B{1, 0, 0}, 0) == std::optional<std::size_t>(0));
}

TEST_CASE("IRDS never schedules a device with hugely negative weight") {
  Fixture f(3);
  f.state.q = {0.0, 0.0, 0.0};
  f.state.z = 1e6;
  Rng rng(2);
  std::optional<std::size_t> prev;
  for (int k = 0; k < 2000; ++k) {
    ScheduleDecision d = schedule_irds(f.view(), policy(PolicyKind::Irds), prev, rng);
    CHECK_FALSE(d.scheduled);
    prev = d.scheduled;
  }
}

TEST_CASE("IRDS unique contender at the first slot transmits") {
  // One device: it always contends (probability 1/N = 1) and with a large
  // weight draws p = 1, so case 1 applies from t = 0 on.
  Fixture f(1);
  f.state.q = {100.0};
  Rng rng(1);
  ScheduleDecision d = schedule_irds(f.view(), policy(PolicyKind::Irds), std::nullopt, rng);
  REQUIRE(d.scheduled);
  CHECK(*d.scheduled == 0);
  CHECK(d.airtime == doctest::Approx(1.0 - 1e-3));
}

TEST_CASE("policy config validation") {
  PolicyConfig c = policy(PolicyKind::CadsUniform, 100);
  c.tau = 0.01;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.tau = 0.009;
  CHECK_NOTHROW(c.validate());
  CHECK(c.airtime() == doctest::Approx(0.1));
  c.m_slots = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(parse_policy_kind("cads_optimal") == PolicyKind::CadsOptimal);
  CHECK_THROWS_AS(parse_policy_kind("aloha"), std::invalid_argument);
  for (auto k : {PolicyKind::Centralized, PolicyKind::CadsUniform, PolicyKind::CadsOptimal,
                 PolicyKind::CadsLinear, PolicyKind::Irds}) {
    CHECK(parse_policy_kind(to_string(k)) == k);
  }
}

TEST_CASE("fuzz: every policy schedules at most one nu-feasible device") {
  const std::size_t n = 8;
  for (auto kind : {PolicyKind::Centralized, PolicyKind::CadsUniform, PolicyKind::CadsOptimal,
                    PolicyKind::CadsLinear, PolicyKind::Irds}) {
    CAPTURE(to_string(kind));
    PolicyConfig cfg = policy(kind, 16, 0.8);
    cfg.refit_interval = 500;
    auto sched = make_scheduler(cfg, n, 5);
    Rng rng(derive_seed(17, StreamTag::Check, static_cast<std::uint64_t>(kind)));
    Fixture f(n);
    std::uint64_t bad = 0, scheduled = 0;
    for (int t = 0; t < 100000; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        f.state.q[i] = 20.0 * rng.uniform();
        f.channel.h[i] = rng.exponential(2.0);
        f.channel.g[i] = rng.exponential(1.0);
        f.rates[i] = std::log1p(f.channel.h[i]);
      }
      f.state.z = 3.0 * rng.uniform();
      ScheduleDecision d = sched->schedule(f.view());
      REQUIRE(d.weights.size() == n);
      if (d.scheduled) {
        ++scheduled;
        REQUIRE(d.outcome == Outcome::Success);
        bad += !nu_feasible(f.channel.g[*d.scheduled], 1.0, cfg.nu);
        if (kind != PolicyKind::Irds) bad += d.weights[*d.scheduled] < 0.0;
      } else {
        REQUIRE(d.outcome != Outcome::Success);
      }
    }
    CHECK(bad == 0);
    CHECK(scheduled > 1000);
  }
}

TEST_CASE("CADS reservoir mapping picks uniform slots for a lone device") {
  PolicyConfig cfg = policy(PolicyKind::CadsUniform, 5);
  CadsScheduler sched(cfg, 1, 3);
  Fixture f(1);
  f.state.q = {2.0};
  Rng rng(44);
  std::vector<std::size_t> counts(5, 0);
  for (int t = 0; t < 60000; ++t) {
    f.rates[0] = rng.exponential(1.0);
    f.channel.g[0] = rng.exponential(1.0);
    ScheduleDecision d = sched.schedule(f.view());
    if (t >= 1000 && d.winning_minislot) ++counts[static_cast<std::size_t>(*d.winning_minislot - 1)];
  }
  for (auto c : counts) CHECK(c == doctest::Approx(59000.0 / 5).epsilon(0.05));
}

TEST_CASE("CADS linear calibrates W_max from the reservoir") {
  PolicyConfig cfg = policy(PolicyKind::CadsLinear, 10);
  cfg.refit_interval = 200;
  CadsScheduler sched(cfg, 2, 1);
  Fixture f(2);
  f.state.q = {1.0, 1.0};
  Rng rng(9);
  for (int t = 0; t < 1000; ++t) {
    f.rates = {rng.uniform(), rng.uniform()};
    sched.schedule(f.view());
  }
  // With Z = 0 the weights are Q R ~ Uniform(0, 1); the 0.9 quantile is ~0.9.
  CHECK(sched.w_max() == doctest::Approx(0.9).epsilon(0.05));
}
