#pragma once

// Run configuration for the kdp driver, read from and written to JSON.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "kdp/problem.hpp"
#include "kdp/solvers.hpp"

namespace kdp::cli {

enum class Mode { Check, SolvePositive, SolveNegative, SolveNodal, Sweep, FiberPlot, Report };

std::string to_string(Mode m);
Mode parse_mode(const std::string& name);

struct SweepAxis {
  std::string parameter = "theta";
  std::vector<double> values{1.0, 1.25, 1.5};
};

struct RunConfig {
  ProblemSpec spec{};
  Mode mode = Mode::Check;
  SolverOptions solver{};
  int starts = 8;
  std::uint64_t seed = 42;
  /// Empty means: KDP_OUTPUT_DIR, else "kdp_out".
  std::string output_dir;
  int workers = 1;
  SweepAxis sweep{};
  int fiber_grid = 41;
};

/// Malformed or invalid configuration; the driver exits with status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Keys absent from `j` keep their defaults; unknown keys are rejected.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& c);

/// Parameters a sweep may vary: p, q, theta, a0, b0, r (exponent of the
/// first power term), mu (first weight parameter).
const std::vector<std::string>& sweep_parameters();
ProblemSpec with_parameter(ProblemSpec spec, const std::string& name, double value);

/// Output directory after applying the environment default.
std::string resolve_output_dir(const RunConfig& c);

}  // namespace kdp::cli
