#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "prioq/stream_model.hpp"

namespace prioq {

// Margin kept from the stability boundary: intensities above 1 - margin are
// rejected as unstable.
inline constexpr double kStabilityMargin = 1e-9;

// First and second-order active-period statistics of one stream.  C is the
// active-period length, Lam the number of customers it brings, tilde marks
// equilibrium (forward recurrence) variables.
struct ActivePeriodMoments {
  double mean_c = 0.0;        // E[C]
  double mean_count = 0.0;    // E[Lam]
  double mean_c_count = 0.0;  // E[C Lam]
  double eq_mean_c = 0.0;     // E[~C]
  double count_eq_c = 0.0;    // E[Lam(~C)], arrivals over the residual period
  double eq_mean_count = 0.0; // E[~Lam]
};

// Everything the waiting-time and unfinished-work formulas consume for one
// class: stationary split, rates, active-period statistics, and the
// second-order correction terms of the slot-wise batch process.
struct StreamMoments {
  double pi_idle = 0.0;        // stationary mass of the idle state
  Eigen::RowVectorXd pi_active;
  double pi_on = 0.0;          // total active mass
  double lambda = 0.0;         // customers per slot
  double rho = 0.0;            // lambda * E[H]
  double mean_service = 0.0;   // E[H]
  double eq_mean_service = 0.0;  // E[~H]
  ActivePeriodMoments active;
  double delta2 = 0.0;  // second factorial moment of the stationary batch count
  double v0p = 0.0;     // idle-entry derivative correction
};

struct SystemMoments {
  std::vector<StreamMoments> per_class;
  // rho_cum[i] = sum of rho over classes with index < i; size K+1, front 0,
  // back equals rho_total.
  std::vector<double> rho_cum;
  double rho_total = 0.0;
  double unfinished_mean = 0.0;    // E[U], discipline-independent
  double conservation_rhs = 0.0;   // right side of the conservation law
  double cycle_f1 = 0.0;           // mean busy cycle, full system
  double cycle_f2 = 0.0;           // second factorial moment of the cycle
};

// Stationary distribution of the underlying chain, split as (idle mass,
// active row vector).  Uses the closed form through (I-T)^{-1}.
std::pair<double, Eigen::RowVectorXd> stationary_split(const ArrivalStreamSpec& stream);

ActivePeriodMoments active_period_moments(const ArrivalStreamSpec& stream);

StreamMoments stream_moments(const ArrivalStreamSpec& stream, const ServiceSpec& service);

// Per-class moments plus the aggregate quantities.  Throws InstabilityError
// when the total intensity is at or past 1 - kStabilityMargin.
SystemMoments analyze_streams(const SystemSpec& system);

// Mean stationary unfinished work E[U] (any work-conserving discipline).
double total_unfinished_mean(const SystemMoments& sm);
double total_unfinished_mean(const SystemSpec& system);

// Right side of the conservation law: equals sum_k rho_k E[W_k] under any
// nonpreemptive work-conserving order, and also E[U] - rho - sum_k rho_k E[~H_k].
double conservation_rhs(const SystemMoments& sm);
double conservation_rhs(const SystemSpec& system);

// Mean and second factorial moment of the busy cycle of the subsystem formed
// by the top_count highest-priority classes (top_count = K gives the full
// system).  Only requires that subsystem to be stable.
std::pair<double, double> busy_cycle_moments(const SystemSpec& system, std::size_t top_count);

// Single-class (K=1) closed forms, evaluated directly from one stream's
// moments; independent arithmetic path from the K-class formulas.
double single_class_wait(const ArrivalStreamSpec& stream, const ServiceSpec& service);
double single_class_unfinished_mean(const ArrivalStreamSpec& stream, const ServiceSpec& service);

}  // namespace prioq
