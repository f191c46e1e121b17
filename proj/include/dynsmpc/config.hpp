#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "dynsmpc/model.hpp"
#include "dynsmpc/optim.hpp"
#include "dynsmpc/synthesis.hpp"
#include "dynsmpc/tube_mpc.hpp"

namespace dynsmpc {

// Malformed or inconsistent configuration. what() reads "<source>:<line>: <detail>";
// line is 0 when no position applies.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& detail);

  int line() const { return line_; }

 private:
  int line_;
};

struct RunConfig {
  ProblemInstance instance;
  TighteningOptions tightening;
  LpOptions lp;
  MpcOptions mpc;
  std::uint64_t seed = 1;
  std::uint64_t hash = 0;  // FNV-1a of the source text
};

// Parses a JSON configuration. Unknown keys are rejected.
//
// {
//   "system": {"A": [[...]], "B": [[...]]},
//   "noise": {"covariance": [[...]], "family": "gaussian" | "moment_only"},
//   "constraints": {
//     "state": {"box": [[lo, hi], ...]} | {"A": [[...]], "b": [...]},
//     "input": same as state (optional; absent means unconstrained),
//     "p_bar_x": 0.6, "p_bar_u": 0.6 (required iff input present)
//   },
//   "cost": {"Q": [[...]], "R": [[...]]},
//   "horizon": 15,
//   "initial_state": [...],
//   "solver": {"lp_feasibility_tol", "lp_optimality_tol", "lp_max_iterations",
//              "qp_feasibility_tol", "qp_max_iterations", "dare_tolerance",
//              "xi_penalty"} (all optional),
//   "tightening": {"generators": g, "scale": "auto" | "chi2" | "chebyshev"} (optional),
//   "seed": 1 (optional)
// }
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");

// Reads and parses a file; unreadable files raise ConfigError with line 0.
RunConfig load_config(const std::filesystem::path& path);

// The built-in DC-DC converter configuration as JSON text.
std::string case_study_config_text();

}  // namespace dynsmpc
