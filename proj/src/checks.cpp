#include "prioq/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "prioq/analytic.hpp"
#include "prioq/priority.hpp"

namespace prioq {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

bool close(double a, double b, double tol) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) <= tol * scale;
}

void push_eq(std::vector<CheckResult>& out, const std::string& name, double a, double b,
             double tol) {
  out.push_back({name, close(a, b, tol), fmt(a) + " vs " + fmt(b)});
}

std::string cls(std::size_t k) { return "[class " + std::to_string(k + 1) + "]"; }

void push_cover(std::vector<CheckResult>& out, const std::string& name,
                const SimEstimate& est, double analytic) {
  const double se = est.std_error();
  const double slack = est.replications >= 2 ? 3.0 * se : 0.0;
  const bool ok = std::abs(est.mean - analytic) <= slack + 1e-12;
  out.push_back({name, ok,
                 "sim " + fmt(est.mean) + " vs " + fmt(analytic) + " (3se " + fmt(slack) + ")"});
}

}  // namespace

std::vector<CheckResult> identity_checks(const SystemSpec& system) {
  std::vector<CheckResult> out;
  const SystemMoments sm = analyze_streams(system);
  const SystemReport rep = build_report(sm);
  const std::size_t count = system.num_classes();

  double weighted_np = 0.0, eq_load = 0.0, u_pr_sum = 0.0, u_np_sum = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    weighted_np += rep.per_class[k].rho * rep.per_class[k].w_np;
    eq_load += rep.per_class[k].rho * rep.per_class[k].eq_mean_service;
    u_pr_sum += rep.per_class[k].u_pr;
    u_np_sum += rep.per_class[k].u_np;
  }
  push_eq(out, "conservation-law", weighted_np, sm.conservation_rhs, 1e-10);
  push_eq(out, "unfinished-identity", sm.conservation_rhs,
          sm.unfinished_mean - sm.rho_total - eq_load, 1e-12);
  push_eq(out, "u-pr-total", u_pr_sum, sm.unfinished_mean, 1e-10);
  push_eq(out, "u-np-total", u_np_sum, sm.unfinished_mean, 1e-10);

  for (std::size_t k = 0; k < count; ++k) {
    const ClassReport& c = rep.per_class[k];
    const double above = sm.rho_cum[k];
    push_eq(out, "u-pr-dual" + cls(k), c.u_pr,
            c.rho * c.w_pr + c.rho * (1.0 + c.eq_mean_service / (1.0 - above)), 1e-10);
    push_eq(out, "u-np-dual" + cls(k), c.u_np,
            c.rho * c.w_np + c.rho * (1.0 + c.eq_mean_service), 1e-10);
    out.push_back({"preemption-dominance" + cls(k), c.w_np >= c.w_pr - 1e-12,
                   fmt(c.w_pr) + " <= " + fmt(c.w_np)});
  }
  push_eq(out, "lowest-class-wait", rep.per_class[count - 1].w_np,
          rep.per_class[count - 1].w_pr, 1e-12);

  if (count == 1) {
    push_eq(out, "single-class-wait", rep.per_class[0].w_pr,
            single_class_wait(system.classes[0].arrivals, system.classes[0].service), 1e-10);
    push_eq(out, "single-class-unfinished", rep.per_class[0].u_pr,
            single_class_unfinished_mean(system.classes[0].arrivals, system.classes[0].service),
            1e-10);
  }

  // Rate two ways: closed form vs stationary row times the rate matrix.
  for (std::size_t k = 0; k < count; ++k) {
    const ArrivalStreamSpec& s = system.classes[k].arrivals;
    const auto [pi_idle, pi_active] = stationary_split(s);
    Eigen::RowVectorXd pi(pi_active.size() + 1);
    pi(0) = pi_idle;
    pi.tail(pi_active.size()) = pi_active;
    const double lambda_direct =
        (pi * s.full_batch_moment(1) * Eigen::VectorXd::Ones(pi.size())).value();
    push_eq(out, "rate-identity" + cls(k), sm.per_class[k].lambda, lambda_direct, 1e-10);
  }

  for (SpecialCase shape : {SpecialCase::kUnitService, SpecialCase::kIidArrivals,
                            SpecialCase::kIidActiveBatches}) {
    if (!matches_special_case(system, shape)) continue;
    const char* label = shape == SpecialCase::kUnitService     ? "unit-service"
                        : shape == SpecialCase::kIidArrivals   ? "iid-arrivals"
                                                                : "iid-active";
    const SystemReport red = special_case_report(system, shape);
    bool all = true;
    std::string detail;
    auto cmp = [&](double a, double b, const std::string& what) {
      if (!close(a, b, 1e-10)) {
        all = false;
        if (!detail.empty()) detail += "; ";
        detail += what + " " + fmt(a) + " vs " + fmt(b);
      }
    };
    cmp(red.unfinished_mean, rep.unfinished_mean, "E[U]");
    cmp(red.conservation_rhs, rep.conservation_rhs, "rhs");
    cmp(red.cycle_f2, rep.cycle_f2, "f2");
    for (std::size_t k = 0; k < count; ++k) {
      cmp(red.per_class[k].w_pr, rep.per_class[k].w_pr, "w_pr" + cls(k));
      cmp(red.per_class[k].w_np, rep.per_class[k].w_np, "w_np" + cls(k));
      cmp(red.per_class[k].u_pr, rep.per_class[k].u_pr, "u_pr" + cls(k));
      cmp(red.per_class[k].u_np, rep.per_class[k].u_np, "u_np" + cls(k));
      cmp(red.per_class[k].d_pr, rep.per_class[k].d_pr, "d_pr" + cls(k));
    }
    out.push_back({std::string("special-case-") + label, all, all ? "all fields agree" : detail});
  }
  return out;
}

std::vector<CheckResult> simulation_checks(const SystemSpec& system, const SimConfig& base) {
  std::vector<CheckResult> out;
  const SystemMoments sm = analyze_streams(system);
  const SystemReport rep = build_report(sm);
  const std::size_t count = system.num_classes();

  SimConfig pr_cfg = base;
  pr_cfg.discipline = Discipline::kPreemptiveResume;
  const auto pr = run_simulation(system, pr_cfg);
  for (std::size_t k = 0; k < count; ++k) {
    push_cover(out, "sim-w-pr" + cls(k), estimate(pr, pr_cfg, Metric::kWaitingTime, k),
               rep.per_class[k].w_pr);
    push_cover(out, "sim-u-pr" + cls(k), estimate(pr, pr_cfg, Metric::kUnfinishedClass, k),
               rep.per_class[k].u_pr);
    push_cover(out, "sim-completion-pr" + cls(k),
               estimate(pr, pr_cfg, Metric::kCompletionTime, k), rep.per_class[k].completion_pr);
  }
  push_cover(out, "sim-unfinished-pr", estimate(pr, pr_cfg, Metric::kUnfinishedTotal),
             rep.unfinished_mean);
  push_cover(out, "sim-cycle-mean", estimate(pr, pr_cfg, Metric::kCycleMean), rep.cycle_f1);
  push_cover(out, "sim-cycle-f2", estimate(pr, pr_cfg, Metric::kCycleSecondFactorial),
             rep.cycle_f2);

  SimConfig np_cfg = base;
  np_cfg.discipline = Discipline::kNonpreemptive;
  np_cfg.seed = base.seed + 1;  // independent run, so coverage checks stay independent
  const auto np = run_simulation(system, np_cfg);
  for (std::size_t k = 0; k < count; ++k) {
    push_cover(out, "sim-w-np" + cls(k), estimate(np, np_cfg, Metric::kWaitingTime, k),
               rep.per_class[k].w_np);
    push_cover(out, "sim-u-np" + cls(k), estimate(np, np_cfg, Metric::kUnfinishedClass, k),
               rep.per_class[k].u_np);
  }
  push_cover(out, "sim-unfinished-np", estimate(np, np_cfg, Metric::kUnfinishedTotal),
             rep.unfinished_mean);

  SimConfig fcfs_cfg = base;
  fcfs_cfg.discipline = Discipline::kFcfs;
  fcfs_cfg.seed = base.seed + 2;
  const auto fcfs = run_simulation(system, fcfs_cfg);
  push_cover(out, "sim-unfinished-fcfs", estimate(fcfs, fcfs_cfg, Metric::kUnfinishedTotal),
             rep.unfinished_mean);

  // Little's law inside the simulator itself (waiting line vs rate * wait).
  for (std::size_t k = 0; k < count; ++k) {
    const SimEstimate queue = estimate(pr, pr_cfg, Metric::kWaitingCount, k);
    const SimEstimate wait = estimate(pr, pr_cfg, Metric::kWaitingTime, k);
    push_cover(out, "sim-littles-law" + cls(k), queue, wait.mean * sm.per_class[k].lambda);
  }
  return out;
}

}  // namespace prioq
