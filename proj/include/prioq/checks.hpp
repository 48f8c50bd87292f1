#pragma once

#include <string>
#include <vector>

#include "prioq/simulator.hpp"
#include "prioq/stream_model.hpp"

namespace prioq {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Exact cross-checks between independent analytic routes (conservation law,
// identity duals, single-class reductions, special-case formulas).
std::vector<CheckResult> identity_checks(const SystemSpec& system);

// Simulated point estimates against the analytic values, three standard
// errors wide.  Runs all three disciplines; seeds derive from base.seed.
std::vector<CheckResult> simulation_checks(const SystemSpec& system, const SimConfig& base);

}  // namespace prioq
