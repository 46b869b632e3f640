#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace edgesim {

enum class Outcome { Success, Collision, Idle };

std::string_view to_string(Outcome o);

/// What happened in one slot's scheduling phase.
///
/// `scheduled` is set iff `outcome == Success`. `airtime` is the fraction of
/// the slot left for data after contention; both the served bits and the
/// interference energy of the winner scale with it.
struct ScheduleDecision {
  std::optional<std::size_t> scheduled;
  Outcome outcome = Outcome::Idle;
  std::optional<int> winning_minislot;
  std::vector<double> weights;
  int contenders = 0;
  double airtime = 1.0;

  static ScheduleDecision idle(std::vector<double> weights = {}) {
    ScheduleDecision d;
    d.weights = std::move(weights);
    return d;
  }
};

}  // namespace edgesim
