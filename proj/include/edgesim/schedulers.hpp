#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgesim/channel.hpp"
#include "edgesim/decision.hpp"
#include "edgesim/mapping.hpp"
#include "edgesim/queueing.hpp"
#include "edgesim/rng.hpp"

namespace edgesim {

enum class PolicyKind { Centralized, CadsUniform, CadsOptimal, CadsLinear, Irds };

std::string_view to_string(PolicyKind kind);
/// Accepts the names produced by to_string; throws std::invalid_argument.
PolicyKind parse_policy_kind(std::string_view name);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::Centralized;
  int m_slots = 200;
  double tau = 1e-4;
  double nu = std::numeric_limits<double>::infinity();
  double w_max = 0.0;  // 0 selects automatic calibration for CadsLinear
  std::size_t reservoir_size = 512;
  std::size_t refit_interval = 1000;

  void validate() const;

  bool is_cads() const {
    return kind == PolicyKind::CadsUniform || kind == PolicyKind::CadsOptimal ||
           kind == PolicyKind::CadsLinear;
  }
  /// Fraction of a slot left for data transmission after contention.
  double airtime() const;
};

/// Everything a scheduler may look at in one slot.
struct SlotView {
  const NetworkState& state;
  const ChannelState& channel;
  std::span<const double> rates;
  double power = 1.0;
};

/// W = Q R - P Z g.
inline double weight(double q, double r, double z, double g, double power) {
  return q * r - power * z * g;
}

inline bool nu_feasible(double g, double power, double nu) { return power * g <= nu; }

std::vector<double> compute_weights(const SlotView& view);

/// Max-weight over C = {j : W_j >= 0, P g_j <= nu}; ties go to the lowest
/// index; Idle when C is empty.
ScheduleDecision schedule_centralized(const SlotView& view, const PolicyConfig& config);

/// Contention outcome for per-device mini-slot picks (values in 1..M+1).
/// The unique holder of the earliest picked slot wins; a shared earliest
/// slot is a collision and silences everyone after it.
ScheduleDecision resolve_contention(std::span<const int> picks, int m_slots,
                                    double airtime);

/// IRDS scheduling rule for one slot given the realized contention bits
/// `contend` (a_i), transmission bits `transmit` (p_i), and last slot's winner.
std::optional<std::size_t> irds_rule(std::span<const std::uint8_t> contend,
                                     std::span<const std::uint8_t> transmit,
                                     std::optional<std::size_t> previous);

/// P{p_i = 1} = e^W / (e^W + 1), evaluated without overflow.
double irds_transmit_probability(double w);

/// One IRDS slot: draws a_i ~ Bernoulli(1/N) and p_i ~ Bernoulli(sigmoid(W_i))
/// for every device (nu-infeasible devices get p_i = 0), then applies
/// irds_rule.
ScheduleDecision schedule_irds(const SlotView& view, const PolicyConfig& config,
                               std::optional<std::size_t> previous, Rng& rng);

/// Stateful per-slot scheduler owned by one simulation run.
class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual ScheduleDecision schedule(const SlotView& view) = 0;
  virtual std::string_view name() const = 0;
};

std::unique_ptr<Scheduler> make_scheduler(const PolicyConfig& config,
                                          std::size_t n_links, std::uint64_t seed);

/// CADS with uniform, optimal, or linear mini-slot association. Each device
/// keeps a sliding reservoir of its own past channel observations; the
/// randomized rank of its current weight among the reservoir weights at the
/// current (Q_i, Z) drives uniform and optimal mapping. Optimal levels and
/// the automatic W_max are refit every `refit_interval` slots.
class CadsScheduler final : public Scheduler {
 public:
  CadsScheduler(const PolicyConfig& config, std::size_t n_links, std::uint64_t seed = 0);

  ScheduleDecision schedule(const SlotView& view) override;
  std::string_view name() const override { return to_string(config_.kind); }

  const LevelMapper& levels() const { return levels_; }
  double w_max() const { return w_max_; }
  const std::vector<ChannelReservoir>& reservoirs() const { return reservoirs_; }

 private:
  void refit(const SlotView& view);

  PolicyConfig config_;
  std::vector<ChannelReservoir> reservoirs_;
  LevelMapper levels_;
  double w_max_ = 0.0;
  double window_q_max_ = 0.0;
  std::vector<double> contender_hist_;
  std::uint64_t slots_seen_ = 0;
  std::vector<int> picks_;
  Rng rng_;
  std::vector<double> scratch_;
};

}  // namespace edgesim
