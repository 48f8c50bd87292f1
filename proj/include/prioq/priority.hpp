#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "prioq/analytic.hpp"
#include "prioq/stream_model.hpp"

namespace prioq {

// Per-class results.  Class indices are 0-based in code; class 0 has the
// highest priority.  Reports number classes from 1 for display.
struct ClassReport {
  double lambda = 0.0;
  double rho = 0.0;
  double mean_service = 0.0;
  double eq_mean_service = 0.0;
  double w_pr = 0.0;          // mean wait, preemptive resume
  double w_np = 0.0;          // mean wait, nonpreemptive
  double d_pr = 0.0;          // mean delay (wait + completion), preemptive resume
  double u_pr = 0.0;          // mean class-k unfinished work, preemptive resume
  double u_np = 0.0;          // mean class-k unfinished work, nonpreemptive
  double completion_pr = 0.0; // mean effective service (completion) time
  double remaining_pr = 0.0;  // equilibrium mean of the completion time
};

struct SystemReport {
  std::vector<ClassReport> per_class;
  double rho_total = 0.0;
  double unfinished_mean = 0.0;
  double conservation_rhs = 0.0;
  double cycle_f1 = 0.0;
  double cycle_f2 = 0.0;
};

// Mean completion time of a class-k customer under preemptive resume: its own
// service stretched by higher-priority interruptions.
double completion_time_mean(const SystemMoments& sm, std::size_t k);

// Equilibrium mean of the class-k completion time (mean residual at a random
// in-progress slot).
double remaining_service_mean(const SystemMoments& sm, std::size_t k);

double w_pr_mean(const SystemMoments& sm, std::size_t k);
double d_pr_mean(const SystemMoments& sm, std::size_t k);
double u_pr_mean(const SystemMoments& sm, std::size_t k);
double w_np_mean(const SystemMoments& sm, std::size_t k);
double u_np_mean(const SystemMoments& sm, std::size_t k);

// Full analytic report along the general path.
SystemReport build_report(const SystemMoments& sm);
SystemReport build_report(const SystemSpec& system);

// Structural shapes with dedicated reduced formulas.
enum class SpecialCase {
  kUnitService,      // every class serves in exactly one slot
  kIidArrivals,      // slot-wise i.i.d. batches (two-state canonical chain)
  kIidActiveBatches  // one shared batch law on every active-targeting transition
};

// Checks whether the system matches the structural shape; on mismatch, fills
// *why with the violated condition.
bool matches_special_case(const SystemSpec& system, SpecialCase shape, std::string* why = nullptr);

// Report computed through the reduced special-case formulas (plus identity
// routes for fields the reduction does not display).  Throws ModelError when
// the system does not match the shape.
SystemReport special_case_report(const SystemSpec& system, SpecialCase shape);

}  // namespace prioq
