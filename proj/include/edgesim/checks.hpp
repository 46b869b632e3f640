#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace edgesim {

/// One property checked by an oracle suite.
struct CheckResult {
  std::string suite;
  std::string name;
  bool pass = false;
  std::string detail;
};

struct CheckOptions {
  std::size_t trials = 100000;
  std::uint64_t seed = 1;
};

/// Suite names: enumeration, theorem4, theorem5, uniformity, all.
std::vector<std::string_view> check_suites();

/// Runs one suite (or "all"). Throws std::invalid_argument on an unknown name.
///
///  enumeration  exact M^n enumeration of mini-slot picks (n <= 4, M <= 6)
///               against the success formula and its per-slot terms
///  theorem4     Monte Carlo success frequency within 4 standard errors
///  theorem5     scheduled weight >= alpha_bound * max weight under iid
///               exponential and uniform weights with empirical-CDF mapping
///  uniformity   chi-square uniformity of reservoir-based mini-slot picks
std::vector<CheckResult> run_checks(std::string_view suite, const CheckOptions& opts = {});

/// Exact success probability by enumerating all M^n pick vectors. Returns the
/// overall probability and fills per_slot[k-1] with P{success at slot k}.
double enumerate_success(int n_contenders, int m_slots, std::vector<double>* per_slot = nullptr);

/// Upper-tail p-value of Pearson's chi-square statistic for `counts` against
/// equal expected frequencies.
double chi_square_uniform_pvalue(const std::vector<std::size_t>& counts);

}  // namespace edgesim
