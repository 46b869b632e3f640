#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "edgesim/engine.hpp"
#include "edgesim/stability.hpp"

namespace edgesim {

/// Invalid or unreadable configuration. `what()` carries a
/// "<source>:<line>: <json path>: <problem>" style message.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Settings for the stability-region boundary command.
struct BoundaryConfig {
  FadingSpec fading;
  std::size_t pivot = 0;
  std::size_t varied = 1;
  std::vector<double> grid;
  double gamma = 0.1;
  double nu = std::numeric_limits<double>::infinity();
  bool unconstrained = false;
  SolverOptions solver;
};

/// Parses a run configuration document. `source` names the origin in error
/// messages. Missing optional fields take their defaults.
RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

BoundaryConfig parse_boundary_config(const std::string& text,
                                     const std::string& source = "<config>");
BoundaryConfig load_boundary_config(const std::filesystem::path& path);

/// Fully explicit configuration (drawn means written out) that reproduces
/// the same run when parsed back.
nlohmann::ordered_json to_json(const RunConfig& config);
nlohmann::ordered_json to_json(const RunSummary& summary);

/// The shipped default experiment: N = 100, M = 200, gamma = 0.1, tau = 1e-4,
/// V = 100, direct mean 2, interference mean 1, 20 external links with means
/// uniform in [0.1, 0.3], log(1 + x) utility.
RunConfig default_run_config();

std::string read_text_file(const std::filesystem::path& path);

}  // namespace edgesim
