#include "edgesim/queueing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace edgesim {

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "success";
    case Outcome::Collision: return "collision";
    case Outcome::Idle: return "idle";
  }
  return "idle";
}

double Utility::value(double x) const {
  switch (kind) {
    case Kind::Log1p:
      return param * std::log1p(x);
    case Kind::AlphaFair:
      if (std::abs(param - 1.0) < 1e-12) return std::log1p(x);
      return (std::pow(1.0 + x, 1.0 - param) - 1.0) / (1.0 - param);
  }
  return 0.0;
}

std::string Utility::name() const {
  return kind == Kind::Log1p ? "log1p" : "alpha_fair";
}

void Utility::validate() const {
  if (!(param > 0.0) || !std::isfinite(param)) {
    throw std::invalid_argument("utility parameter must be positive");
  }
}

void FlowParams::validate() const {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("v must be positive");
  if (!(a_max > 0.0) || !std::isfinite(a_max)) {
    throw std::invalid_argument("a_max must be positive");
  }
  utility.validate();
}

double flow_control(double q, const FlowParams& params) {
  if (q <= 0.0) return params.a_max;
  if (params.utility.kind == Utility::Kind::Log1p) {
    // V w / (1 + x) = Q at the interior optimum.
    return std::clamp(params.v * params.utility.param / q - 1.0, 0.0, params.a_max);
  }
  auto objective = [&](double x) { return params.v * params.utility.value(x) - q * x; };
  return golden_section_max(objective, 0.0, params.a_max, 1e-9);
}

NetworkState advance_queues(const NetworkState& state,
                            const ScheduleDecision& decision,
                            std::span<const double> rates,
                            std::span<const double> admitted,
                            std::span<const double> g, double power,
                            double gamma, SlotFlows* flows) {
  const std::size_t n = state.q.size();
  if (rates.size() != n || admitted.size() != n || g.size() != n) {
    throw std::invalid_argument("advance_queues: vector sizes differ");
  }
  NetworkState next = state;
  SlotFlows f;
  for (std::size_t i = 0; i < n; ++i) {
    double backlog = state.q[i];
    if (decision.scheduled && *decision.scheduled == i) {
      double after = std::max(backlog - decision.airtime * rates[i], 0.0);
      f.served = backlog - after;
      f.interference = decision.airtime * power * g[i];
      backlog = after;
    }
    next.q[i] = backlog + admitted[i];
  }
  next.z = std::isinf(gamma) ? 0.0 : std::max(state.z - gamma + f.interference, 0.0);
  next.t = state.t + 1;
  if (flows) *flows = f;
  return next;
}

}  // namespace edgesim
