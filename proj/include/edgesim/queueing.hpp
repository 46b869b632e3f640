#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "edgesim/decision.hpp"

namespace edgesim {

/// Real per-device backlogs plus the shared virtual interference queue.
struct NetworkState {
  std::vector<double> q;
  double z = 0.0;
  std::uint64_t t = 0;

  explicit NetworkState(std::size_t n = 0) : q(n, 0.0) {}
};

/// Concave, increasing utility with u(0) = 0.
struct Utility {
  enum class Kind {
    Log1p,      // weight * log(1 + x)
    AlphaFair,  // ((1 + x)^(1 - alpha) - 1) / (1 - alpha)
  };

  Kind kind = Kind::Log1p;
  double param = 1.0;  // weight for Log1p, alpha for AlphaFair

  double value(double x) const;
  std::string name() const;
  void validate() const;

  static Utility log1p(double weight = 1.0) { return {Kind::Log1p, weight}; }
  static Utility alpha_fair(double alpha) { return {Kind::AlphaFair, alpha}; }
};

struct FlowParams {
  double v = 100.0;
  double a_max = 100.0;
  Utility utility{};

  void validate() const;
};

/// Admitted bits for one device: argmax over [0, a_max] of V*U(x) - Q*x.
double flow_control(double q, const FlowParams& params);

/// Golden-section maximizer of a concave objective on [lo, hi].
template <typename F>
double golden_section_max(F&& f, double lo, double hi, double tol = 1e-9) {
  constexpr double kInvPhi = 0.6180339887498948482;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  double x = 0.5 * (a + b);
  double best = x, fbest = f(x);
  if (f(lo) > fbest) best = lo, fbest = f(lo);
  if (f(hi) > fbest) best = hi;
  return best;
}

/// Per-slot bookkeeping produced by a queue update.
struct SlotFlows {
  double served = 0.0;        // bits actually removed from the winner's queue
  double interference = 0.0;  // energy added to the virtual queue
};

/// Q_i <- max(Q_i - [i scheduled] * airtime * R_i, 0) + A_i
/// Z   <- max(Z - gamma + airtime * P * g_winner, 0)
/// An infinite gamma pins Z at zero.
NetworkState advance_queues(const NetworkState& state,
                            const ScheduleDecision& decision,
                            std::span<const double> rates,
                            std::span<const double> admitted,
                            std::span<const double> g, double power,
                            double gamma, SlotFlows* flows = nullptr);

}  // namespace edgesim
