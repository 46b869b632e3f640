#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "edgesim/channel.hpp"
#include "edgesim/decision.hpp"

namespace edgesim {

/// Multipliers and targets for one boundary problem: maximize the pivot's
/// average rate subject to E[I_j R_j] >= alpha_j (j != pivot), an average
/// interference budget gamma, and the per-slot cap P g_j <= nu.
///
/// `lambda` and `targets` are indexed by device; the pivot entries are
/// ignored (the pivot's own weight coefficient is 1).
struct DualPoint {
  std::vector<double> lambda;
  double mu = 0.0;
  std::vector<double> targets;
  std::size_t pivot = 0;
  double gamma = std::numeric_limits<double>::infinity();
  double nu = std::numeric_limits<double>::infinity();
  bool constrained = true;  // false: mu pinned at 0 and no nu filter

  double coefficient(std::size_t j) const { return j == pivot ? 1.0 : lambda[j]; }
};

/// Per-state argmax of the Lagrangian. Constrained: W_j = c_j R_j - mu P g_j
/// over C = {W_j >= 0, P g_j <= nu}. Unconstrained: W_j = c_j R_j over all
/// devices. Ties go to the pivot, then to the lowest index.
std::optional<std::size_t> dual_argmax(std::span<const double> rates,
                                       std::span<const double> g, const DualPoint& dual,
                                       double power);

/// dual_argmax applied to a channel state, reported as a ScheduleDecision.
ScheduleDecision dual_scheduler(const ChannelState& channel, const DualPoint& dual,
                                double power, double noise);

struct SolverOptions {
  std::size_t batch = 10000;
  double step0 = 1.0;
  double tol = 1e-2;
  int patience = 5;
  double lambda_cap = 1e3;
  int max_iters = 20000;
  int check_every = 10;
  double power = 1.0;
  std::uint64_t seed = 1;
};

enum class SolveStatus { Converged, Infeasible, MaxIters };
std::string_view to_string(SolveStatus s);

struct Residuals {
  std::vector<double> rate;        // (alpha_j - r_j) / E[R_j]; 0 for the pivot
  double interference = 0.0;       // (I - gamma) / gamma; 0 when unconstrained
  std::vector<double> slack_rate;  // lambda_j * max(r_j - alpha_j, 0) / E[R_pivot]
  double slack_interference = 0.0; // mu * max(gamma - I, 0) / E[R_pivot]
  double gap = 0.0;                // (dual value - pivot rate) / E[R_pivot]
};

struct BoundaryPoint {
  std::vector<double> achieved_rates;  // E[I_j R_j] for every device
  double interference = 0.0;           // E[sum_j P I_j g_j]
  std::vector<double> lambda;
  double mu = 0.0;
  std::vector<double> targets;
  Residuals residuals;
  int iterations = 0;
  SolveStatus status = SolveStatus::MaxIters;
};

/// Fixed Monte Carlo batch of channel states, reused across dual iterations
/// (common random numbers). Same spec + seed gives the same batch.
class StateBatch {
 public:
  StateBatch(const FadingSpec& spec, std::size_t size, std::uint64_t seed, double power);

  std::size_t size() const { return size_; }
  std::size_t links() const { return links_; }
  std::span<const double> rates(std::size_t k) const {
    return {rates_.data() + k * links_, links_};
  }
  std::span<const double> gains(std::size_t k) const {
    return {gains_.data() + k * links_, links_};
  }
  double mean_rate(std::size_t j) const { return mean_rate_[j]; }
  double power() const { return power_; }

 private:
  std::size_t size_, links_;
  double power_;
  std::vector<double> rates_, gains_, mean_rate_;
};

/// Projected stochastic subgradient on the dual with step s0 / sqrt(k).
/// The reported primal is the average over the most recent half of the
/// iterations. Stops after `patience` consecutive checks with every
/// residual below `tol`.
BoundaryPoint solve_boundary_point(const FadingSpec& spec, std::span<const double> targets,
                                   std::size_t pivot, double gamma, double nu,
                                   const SolverOptions& opts,
                                   const DualPoint* warm_start = nullptr);

/// Same problem without interference constraints (mu = 0, no nu filter).
BoundaryPoint solve_boundary_point_unconstrained(const FadingSpec& spec,
                                                 std::span<const double> targets,
                                                 std::size_t pivot,
                                                 const SolverOptions& opts,
                                                 const DualPoint* warm_start = nullptr);

/// Lower-level entry point shared by both variants; solves on a given batch.
BoundaryPoint solve_on_batch(const StateBatch& batch, std::span<const double> targets,
                             std::size_t pivot, double gamma, double nu, bool constrained,
                             const SolverOptions& opts, const DualPoint* warm_start);

/// One traced point: the value given to the varied device and the solve.
struct TracedPoint {
  double alpha = 0.0;
  BoundaryPoint point;
};

/// Sweeps the target of device `varied` over `alpha_grid` (increasing),
/// others' targets 0, maximizing `pivot`. Grid values above the largest
/// rate `varied` can reach under the constraints are flagged Infeasible
/// without solving. Pass gamma = inf and constrained = false for the
/// unconstrained boundary.
std::vector<TracedPoint> trace_boundary(const FadingSpec& spec, std::size_t pivot,
                                        std::size_t varied,
                                        std::span<const double> alpha_grid, double gamma,
                                        double nu, const SolverOptions& opts,
                                        bool constrained = true);

/// Points of a trace that are on the curve (not Infeasible).
std::vector<TracedPoint> feasible_points(const std::vector<TracedPoint>& trace);

}  // namespace edgesim
