#include "edgesim/stability.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace edgesim {

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::MaxIters: return "max_iters";
  }
  return "max_iters";
}

std::optional<std::size_t> dual_argmax(std::span<const double> rates,
                                       std::span<const double> g, const DualPoint& dual,
                                       double power) {
  const std::size_t n = rates.size();
  std::optional<std::size_t> best;
  double best_w = 0.0;
  auto consider = [&](std::size_t j) {
    double w = dual.coefficient(j) * rates[j];
    if (dual.constrained) {
      if (power * g[j] > dual.nu) return;
      w -= dual.mu * power * g[j];
      if (w < 0.0) return;
    }
    if (!best || w > best_w) {
      best = j;
      best_w = w;
    }
  };
  consider(dual.pivot);
  for (std::size_t j = 0; j < n; ++j) {
    if (j != dual.pivot) consider(j);
  }
  return best;
}

ScheduleDecision dual_scheduler(const ChannelState& channel, const DualPoint& dual,
                                double power, double noise) {
  const std::size_t n = channel.size();
  std::vector<double> rates(n);
  ScheduleDecision d;
  d.weights.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    rates[j] = rate(channel.h[j], channel.i_ext[j], power, noise);
    d.weights[j] = dual.coefficient(j) * rates[j] -
                   (dual.constrained ? dual.mu * power * channel.g[j] : 0.0);
  }
  d.scheduled = dual_argmax(rates, channel.g, dual, power);
  if (d.scheduled) d.outcome = Outcome::Success;
  for (std::size_t j = 0; j < n; ++j) {
    bool feasible = !dual.constrained ||
                    (d.weights[j] >= 0.0 && power * channel.g[j] <= dual.nu);
    d.contenders += feasible;
  }
  return d;
}

StateBatch::StateBatch(const FadingSpec& spec, std::size_t size, std::uint64_t seed,
                       double power)
    : size_(size), links_(spec.n_links), power_(power) {
  if (size == 0) throw std::invalid_argument("batch size must be >= 1");
  spec.validate();
  rates_.resize(size * links_);
  gains_.resize(size * links_);
  mean_rate_.assign(links_, 0.0);
  Rng rng(derive_seed(seed, StreamTag::Solver));
  for (std::size_t k = 0; k < size; ++k) {
    for (std::size_t j = 0; j < links_; ++j) {
      double h, g, i_ext;
      sample_link(spec, j, rng, h, g, i_ext);
      double r = rate(h, i_ext, power, spec.noise_power);
      rates_[k * links_ + j] = r;
      gains_[k * links_ + j] = g;
      mean_rate_[j] += r;
    }
  }
  for (double& m : mean_rate_) m /= static_cast<double>(size);
}

namespace {

struct PassResult {
  std::vector<double> rates;
  double interference = 0.0;
  double max_weight = 0.0;  // E[max(0, max_C W)]
};

void run_pass(const StateBatch& batch, const DualPoint& dual, PassResult& out) {
  const std::size_t n = batch.links();
  out.rates.assign(n, 0.0);
  out.interference = 0.0;
  out.max_weight = 0.0;
  const double power = batch.power();
  for (std::size_t k = 0; k < batch.size(); ++k) {
    auto r = batch.rates(k);
    auto g = batch.gains(k);
    auto j = dual_argmax(r, g, dual, power);
    if (!j) continue;
    out.rates[*j] += r[*j];
    out.interference += power * g[*j];
    double w = dual.coefficient(*j) * r[*j];
    if (dual.constrained) w -= dual.mu * power * g[*j];
    out.max_weight += w;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& x : out.rates) x *= inv;
  out.interference *= inv;
  out.max_weight *= inv;
}

double dual_value(const PassResult& pass, const DualPoint& dual) {
  double d = pass.max_weight;
  for (std::size_t j = 0; j < dual.lambda.size(); ++j) {
    if (j != dual.pivot) d -= dual.lambda[j] * dual.targets[j];
  }
  if (dual.constrained && std::isfinite(dual.gamma)) d += dual.mu * dual.gamma;
  return d;
}

/// Prefix sums over iterations so any window average costs O(width).
struct History {
  std::size_t width;
  std::vector<double> sums;  // (iter + 1) rows of `width` columns
  explicit History(std::size_t w) : width(w), sums(w, 0.0) {}
  void push(std::span<const double> row) {
    std::size_t base = sums.size() - width;
    for (std::size_t c = 0; c < width; ++c) sums.push_back(sums[base + c] + row[c]);
  }
  std::vector<double> mean(std::size_t from, std::size_t to) const {
    std::vector<double> m(width);
    const double cnt = static_cast<double>(to - from);
    for (std::size_t c = 0; c < width; ++c) {
      m[c] = (sums[to * width + c] - sums[from * width + c]) / cnt;
    }
    return m;
  }
};

}  // namespace

BoundaryPoint solve_on_batch(const StateBatch& batch, std::span<const double> targets,
                             std::size_t pivot, double gamma, double nu, bool constrained,
                             const SolverOptions& opts, const DualPoint* warm_start) {
  const std::size_t n = batch.links();
  if (pivot >= n) throw std::invalid_argument("pivot out of range");
  if (targets.size() != n) throw std::invalid_argument("targets must have one entry per link");
  if (constrained && !(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");

  DualPoint dual;
  dual.pivot = pivot;
  dual.targets.assign(targets.begin(), targets.end());
  dual.targets[pivot] = 0.0;
  dual.gamma = gamma;
  dual.nu = constrained ? nu : std::numeric_limits<double>::infinity();
  dual.constrained = constrained;
  dual.lambda.assign(n, 0.0);
  if (warm_start && warm_start->lambda.size() == n) {
    dual.lambda = warm_start->lambda;
    dual.mu = constrained ? warm_start->mu : 0.0;
  }
  dual.lambda[pivot] = 1.0;
  const bool has_budget = constrained && std::isfinite(gamma);
  if (!has_budget) dual.mu = 0.0;

  // Columns: rates[0..n), interference, lambda[0..n), mu.
  History history(2 * n + 2);
  std::vector<double> row(2 * n + 2);
  PassResult pass;
  BoundaryPoint result;
  result.status = SolveStatus::MaxIters;
  const double pivot_scale = std::max(batch.mean_rate(pivot), 1e-300);
  int streak = 0;
  std::size_t iter = 0;

  auto averages = [&](std::size_t k) {
    std::size_t from = k / 2;
    return history.mean(from, k);
  };
  auto fill_result = [&](std::size_t k) {
    std::vector<double> avg = averages(k);
    result.achieved_rates.assign(avg.begin(), avg.begin() + n);
    result.interference = avg[n];
    result.lambda.assign(avg.begin() + n + 1, avg.begin() + 2 * n + 1);
    result.lambda[pivot] = 1.0;
    result.mu = avg[2 * n + 1];
    result.targets = dual.targets;
    result.iterations = static_cast<int>(k);

    DualPoint averaged = dual;
    averaged.lambda = result.lambda;
    averaged.mu = result.mu;
    PassResult at_avg;
    run_pass(batch, averaged, at_avg);

    Residuals& res = result.residuals;
    res.rate.assign(n, 0.0);
    res.slack_rate.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == pivot) continue;
      double scale = std::max(batch.mean_rate(j), 1e-300);
      res.rate[j] = (dual.targets[j] - result.achieved_rates[j]) / scale;
      res.slack_rate[j] = result.lambda[j] *
                          std::max(result.achieved_rates[j] - dual.targets[j], 0.0) /
                          pivot_scale;
    }
    if (has_budget) {
      res.interference = (result.interference - gamma) / gamma;
      res.slack_interference = result.mu * std::max(gamma - result.interference, 0.0) /
                               pivot_scale;
    } else {
      res.interference = 0.0;
      res.slack_interference = 0.0;
    }
    res.gap = (dual_value(at_avg, averaged) - result.achieved_rates[pivot]) / pivot_scale;
  };
  auto within_tol = [&] {
    const Residuals& res = result.residuals;
    for (std::size_t j = 0; j < n; ++j) {
      if (res.rate[j] > opts.tol || res.slack_rate[j] > opts.tol) return false;
    }
    if (res.interference > opts.tol || res.slack_interference > opts.tol) return false;
    return std::abs(res.gap) <= opts.tol;
  };

  for (iter = 1; iter <= static_cast<std::size_t>(opts.max_iters); ++iter) {
    run_pass(batch, dual, pass);
    for (std::size_t j = 0; j < n; ++j) row[j] = pass.rates[j];
    row[n] = pass.interference;
    for (std::size_t j = 0; j < n; ++j) row[n + 1 + j] = dual.lambda[j];
    row[2 * n + 1] = dual.mu;
    history.push(row);

    const double step = opts.step0 / std::sqrt(static_cast<double>(iter));
    bool diverged = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == pivot) continue;
      dual.lambda[j] = std::max(0.0, dual.lambda[j] + step * (dual.targets[j] - pass.rates[j]));
      diverged |= dual.lambda[j] > opts.lambda_cap;
    }
    if (has_budget) {
      dual.mu = std::max(0.0, dual.mu + step * (pass.interference - gamma));
    }
    if (diverged) {
      fill_result(iter);
      result.status = SolveStatus::Infeasible;
      return result;
    }
    if (iter % static_cast<std::size_t>(opts.check_every) == 0) {
      fill_result(iter);
      streak = within_tol() ? streak + 1 : 0;
      if (streak >= opts.patience) {
        result.status = SolveStatus::Converged;
        return result;
      }
    }
  }

  const std::size_t last = static_cast<std::size_t>(opts.max_iters);
  fill_result(last);
  // A target that stays out of reach while its multiplier keeps climbing
  // is reported as infeasible rather than merely slow.
  std::vector<double> mid = history.mean(last / 2, last / 2 + 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == pivot) continue;
    double lambda_mid = mid[n + 1 + j];
    if (result.residuals.rate[j] > opts.tol && dual.lambda[j] > 1.5 * lambda_mid + 1.0) {
      result.status = SolveStatus::Infeasible;
    }
  }
  return result;
}

BoundaryPoint solve_boundary_point(const FadingSpec& spec, std::span<const double> targets,
                                   std::size_t pivot, double gamma, double nu,
                                   const SolverOptions& opts, const DualPoint* warm_start) {
  StateBatch batch(spec, opts.batch, opts.seed, opts.power);
  return solve_on_batch(batch, targets, pivot, gamma, nu, true, opts, warm_start);
}

BoundaryPoint solve_boundary_point_unconstrained(const FadingSpec& spec,
                                                 std::span<const double> targets,
                                                 std::size_t pivot,
                                                 const SolverOptions& opts,
                                                 const DualPoint* warm_start) {
  StateBatch batch(spec, opts.batch, opts.seed, opts.power);
  return solve_on_batch(batch, targets, pivot, std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity(), false, opts, warm_start);
}

std::vector<TracedPoint> trace_boundary(const FadingSpec& spec, std::size_t pivot,
                                        std::size_t varied,
                                        std::span<const double> alpha_grid, double gamma,
                                        double nu, const SolverOptions& opts,
                                        bool constrained) {
  std::vector<TracedPoint> out;
  if (alpha_grid.empty()) return out;
  if (!std::is_sorted(alpha_grid.begin(), alpha_grid.end())) {
    throw std::invalid_argument("alpha grid must be increasing");
  }
  const std::size_t n = spec.n_links;
  if (varied >= n || varied == pivot) throw std::invalid_argument("bad varied device");

  StateBatch batch(spec, opts.batch, opts.seed, opts.power);
  std::vector<double> zeros(n, 0.0);

  // Largest rate the varied device can reach on its own under the constraints.
  double reach = batch.mean_rate(varied);
  if (constrained && (std::isfinite(gamma) || std::isfinite(nu))) {
    BoundaryPoint solo = solve_on_batch(batch, zeros, varied, gamma, nu, true, opts, nullptr);
    reach = solo.achieved_rates[varied];
  }

  DualPoint warm;
  bool have_warm = false;
  for (double alpha : alpha_grid) {
    TracedPoint tp;
    tp.alpha = alpha;
    if (alpha > reach) {
      tp.point.status = SolveStatus::Infeasible;
      tp.point.targets = zeros;
      tp.point.targets[varied] = alpha;
      tp.point.achieved_rates.assign(n, 0.0);
      out.push_back(std::move(tp));
      continue;
    }
    std::vector<double> targets = zeros;
    targets[varied] = alpha;
    tp.point = solve_on_batch(batch, targets, pivot, gamma, nu, constrained, opts,
                              have_warm ? &warm : nullptr);
    if (tp.point.status != SolveStatus::Infeasible) {
      warm.lambda = tp.point.lambda;
      warm.mu = tp.point.mu;
      have_warm = true;
    }
    out.push_back(std::move(tp));
  }
  return out;
}

std::vector<TracedPoint> feasible_points(const std::vector<TracedPoint>& trace) {
  std::vector<TracedPoint> out;
  for (const auto& tp : trace) {
    if (tp.point.status != SolveStatus::Infeasible) out.push_back(tp);
  }
  return out;
}

}  // namespace edgesim
