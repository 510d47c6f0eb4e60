#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fedwire/model.hpp"

namespace fedwire {

/// Unified result of one solver run, shared by the proposed scheme and the baselines.
struct SolveReport {
  std::string scheme;
  double T = 0.0;                  ///< latency budget the solve was run at
  std::optional<double> T_star;    ///< minimum completion time, when computed
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;
  Allocation allocation;
  EnergyTimeBreakdown breakdown;
  std::vector<Constraint> violations;
  std::vector<std::string> events;
};

}  // namespace fedwire
