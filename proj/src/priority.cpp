#include "prioq/priority.hpp"

#include <cmath>
#include <string>

#include "prioq/errors.hpp"

namespace prioq {

namespace {

std::string cls(std::size_t k) { return "class " + std::to_string(k + 1); }

void check_class_index(const SystemMoments& sm, std::size_t k) {
  if (k >= sm.per_class.size()) {
    throw std::invalid_argument("class index " + std::to_string(k) + " out of range");
  }
}

// Burstiness excess of stream k beyond its rate: E[~Lam] - pi E[C Lam]/E[C].
double burst_term(const StreamMoments& m) {
  return m.active.eq_mean_count - m.pi_on * m.active.mean_c_count / m.active.mean_c;
}

bool pmf_close(const Pmf& a, const Pmf& b) {
  if (a.values() != b.values()) return false;
  for (std::size_t i = 0; i < a.support_size(); ++i) {
    if (std::abs(a.probs()[i] - b.probs()[i]) > 1e-12) return false;
  }
  return true;
}

}  // namespace

double completion_time_mean(const SystemMoments& sm, std::size_t k) {
  check_class_index(sm, k);
  const double above = sm.rho_cum[k];  // intensity of classes that preempt k
  return (sm.per_class[k].mean_service - above) / (1.0 - above);
}

double remaining_service_mean(const SystemMoments& sm, std::size_t k) {
  check_class_index(sm, k);
  const StreamMoments& m = sm.per_class[k];
  const double above = sm.rho_cum[k];
  return m.mean_service / completion_time_mean(sm, k) *
         (1.0 + m.eq_mean_service / (1.0 - above));
}

double w_pr_mean(const SystemMoments& sm, std::size_t k) {
  check_class_index(sm, k);
  const double r_with = sm.rho_cum[k + 1];  // classes 1..k
  const double r_above = sm.rho_cum[k];     // classes 1..k-1
  if (r_with > 1.0 - kStabilityMargin) {
    throw InstabilityError(cls(k) + " subsystem intensity " + std::to_string(r_with) +
                           " is at or past the stability boundary");
  }
  const double denom = (1.0 - r_with) * (1.0 - r_above);
  const StreamMoments& mk = sm.per_class[k];

  double eq_sum = 0.0, spread_sum = 0.0, burst_sum = 0.0;
  for (std::size_t l = 0; l <= k; ++l) {
    const StreamMoments& m = sm.per_class[l];
    eq_sum += m.rho * m.eq_mean_service;
    spread_sum += m.rho * (r_with - m.rho);
    burst_sum += m.rho * (m.pi_on * m.rho * (1.0 + m.active.eq_mean_c) +
                          m.mean_service * burst_term(m));
  }
  return eq_sum / denom + spread_sum / (2.0 * denom) + r_above / (1.0 - r_above) +
         burst_sum / denom + mk.mean_service * burst_term(mk) / (1.0 - r_above) +
         mk.pi_on * ((1.0 + mk.rho / (1.0 - r_above)) * (1.0 + mk.active.eq_mean_c) -
                     mk.active.count_eq_c / mk.lambda);
}

double d_pr_mean(const SystemMoments& sm, std::size_t k) {
  return w_pr_mean(sm, k) + completion_time_mean(sm, k);
}

double u_pr_mean(const SystemMoments& sm, std::size_t k) {
  check_class_index(sm, k);
  const double r_with = sm.rho_cum[k + 1];
  const double r_above = sm.rho_cum[k];
  const double denom = (1.0 - r_with) * (1.0 - r_above);
  const StreamMoments& mk = sm.per_class[k];

  double eq_sum = 0.0, spread_sum = 0.0, delta_sum = 0.0;
  for (std::size_t l = 0; l <= k; ++l) {
    const StreamMoments& m = sm.per_class[l];
    eq_sum += m.rho * m.eq_mean_service;
    spread_sum += m.rho * (r_with - m.rho);
    delta_sum += m.mean_service * m.mean_service * m.delta2;
  }
  return mk.rho + mk.rho * eq_sum / denom + mk.rho * mk.eq_mean_service / (1.0 - r_above) +
         mk.rho * spread_sum / (2.0 * denom) + mk.rho * r_above / (1.0 - r_above) +
         mk.rho * delta_sum / (2.0 * denom) +
         mk.mean_service * mk.mean_service * mk.delta2 / (2.0 * (1.0 - r_above)) +
         mk.v0p * mk.mean_service;
}

double w_np_mean(const SystemMoments& sm, std::size_t k) {
  check_class_index(sm, k);
  const double r_with = sm.rho_cum[k + 1];
  const double r_above = sm.rho_cum[k];
  double lower_eq = 0.0;
  for (std::size_t l = k + 1; l < sm.per_class.size(); ++l) {
    lower_eq += sm.per_class[l].rho * sm.per_class[l].eq_mean_service;
  }
  return w_pr_mean(sm, k) + lower_eq / ((1.0 - r_with) * (1.0 - r_above));
}

double u_np_mean(const SystemMoments& sm, std::size_t k) {
  check_class_index(sm, k);
  const std::size_t count = sm.per_class.size();
  if (k + 1 == count) {
    // Work conservation: the per-class amounts sum to the invariant total.
    double others = 0.0;
    for (std::size_t l = 0; l + 1 < count; ++l) others += u_np_mean(sm, l);
    return sm.unfinished_mean - others;
  }
  const double r_with = sm.rho_cum[k + 1];
  const double r_above = sm.rho_cum[k];
  const StreamMoments& mk = sm.per_class[k];
  double lower_eq = 0.0;
  for (std::size_t l = k + 1; l < count; ++l) {
    lower_eq += sm.per_class[l].rho * sm.per_class[l].eq_mean_service;
  }
  return u_pr_mean(sm, k) - r_above / (1.0 - r_above) * mk.rho * mk.eq_mean_service +
         mk.rho * lower_eq / ((1.0 - r_above) * (1.0 - r_with));
}

SystemReport build_report(const SystemMoments& sm) {
  SystemReport rep;
  rep.rho_total = sm.rho_total;
  rep.unfinished_mean = sm.unfinished_mean;
  rep.conservation_rhs = sm.conservation_rhs;
  rep.cycle_f1 = sm.cycle_f1;
  rep.cycle_f2 = sm.cycle_f2;
  for (std::size_t k = 0; k < sm.per_class.size(); ++k) {
    const StreamMoments& m = sm.per_class[k];
    ClassReport c;
    c.lambda = m.lambda;
    c.rho = m.rho;
    c.mean_service = m.mean_service;
    c.eq_mean_service = m.eq_mean_service;
    c.w_pr = w_pr_mean(sm, k);
    c.w_np = w_np_mean(sm, k);
    c.d_pr = d_pr_mean(sm, k);
    c.u_pr = u_pr_mean(sm, k);
    c.u_np = u_np_mean(sm, k);
    c.completion_pr = completion_time_mean(sm, k);
    c.remaining_pr = remaining_service_mean(sm, k);
    rep.per_class.push_back(c);
  }
  return rep;
}

SystemReport build_report(const SystemSpec& system) {
  return build_report(analyze_streams(system));
}

bool matches_special_case(const SystemSpec& system, SpecialCase shape, std::string* why) {
  auto fail = [why](const std::string& msg) {
    if (why != nullptr) *why = msg;
    return false;
  };
  for (std::size_t k = 0; k < system.num_classes(); ++k) {
    const ClassSpec& c = system.classes[k];
    switch (shape) {
      case SpecialCase::kUnitService:
        if (!(c.service.pmf == Pmf::point(1))) {
          return fail(cls(k) + ": service is not the unit point mass");
        }
        break;
      case SpecialCase::kIidArrivals: {
        const ArrivalStreamSpec& s = c.arrivals;
        if (s.order() != 1) return fail(cls(k) + ": chain has more than one active state");
        if (std::abs(s.alpha[0].prob - 1.0) > 1e-12) {
          return fail(cls(k) + ": idle does not enter the active state with probability 1");
        }
        if (std::abs(s.T[0][0].prob - (1.0 - s.idle_self_prob)) > 1e-12) {
          return fail(cls(k) + ": active self-probability differs from 1 - idle self-probability");
        }
        if (!pmf_close(s.alpha[0].batch, s.T[0][0].batch)) {
          return fail(cls(k) + ": entry and self-loop batch laws differ");
        }
        break;
      }
      case SpecialCase::kIidActiveBatches: {
        const ArrivalStreamSpec& s = c.arrivals;
        const Pmf* ref = nullptr;
        for (const TransitionEntry& e : s.alpha) {
          if (e.prob > 0.0) {
            ref = &e.batch;
            break;
          }
        }
        if (ref == nullptr) return fail(cls(k) + ": no active-targeting transition");
        for (const TransitionEntry& e : s.alpha) {
          if (e.prob > 0.0 && !pmf_close(e.batch, *ref)) {
            return fail(cls(k) + ": active-targeting transitions carry different batch laws");
          }
        }
        for (const auto& row : s.T) {
          for (const TransitionEntry& e : row) {
            if (e.prob > 0.0 && !pmf_close(e.batch, *ref)) {
              return fail(cls(k) + ": active-targeting transitions carry different batch laws");
            }
          }
        }
        break;
      }
    }
  }
  return true;
}

namespace {

// Quantities each reduced path computes for one class before the shared
// identity routes take over.
struct SpecialClass {
  double lambda = 0.0;
  double rho = 0.0;
  double mean_service = 0.0;
  double eq_mean_service = 0.0;
  double delta2 = 0.0;  // feeds the cycle second moment
};

// Active-period length statistics from the chain structure alone (batch laws
// play no role here).
struct StructureMoments {
  double mean_c = 0.0;
  double eq_mean_c = 0.0;
  double pi_on = 0.0;
};

StructureMoments structure_moments(const ArrivalStreamSpec& s) {
  const auto m = static_cast<Eigen::Index>(s.order());
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(m, m) -
                                          s.transition_probs());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
  const Eigen::VectorXd wt = lu.transpose().solve(Eigen::VectorXd(s.alpha_probs().transpose()));
  const Eigen::RowVectorXd w = wt.transpose();
  const Eigen::VectorXd y = lu.solve(ones);
  StructureMoments sm;
  sm.mean_c = w.sum();
  sm.eq_mean_c = (w * (y - ones)).value() / sm.mean_c;
  sm.pi_on = sm.mean_c / (1.0 / (1.0 - s.idle_self_prob) + sm.mean_c);
  return sm;
}

SystemReport assemble_special_report(const std::vector<SpecialClass>& classes,
                                     const std::vector<double>& w_pr, double rhs) {
  const std::size_t count = classes.size();
  std::vector<double> cum(count + 1, 0.0);
  for (std::size_t k = 0; k < count; ++k) cum[k + 1] = cum[k] + classes[k].rho;
  const double rho = cum[count];
  if (rho > 1.0 - kStabilityMargin) {
    throw InstabilityError("total traffic intensity " + std::to_string(rho) +
                           " is at or past the stability boundary");
  }

  SystemReport rep;
  rep.rho_total = rho;
  rep.conservation_rhs = rhs;
  double eq_load = 0.0;
  for (const SpecialClass& c : classes) eq_load += c.rho * c.eq_mean_service;
  rep.unfinished_mean = rhs + rho + eq_load;
  rep.cycle_f1 = 1.0 / (1.0 - rho);
  double inner = 0.0;
  for (const SpecialClass& c : classes) {
    inner += 2.0 * c.rho * c.eq_mean_service + c.rho * (rho - c.rho) +
             c.mean_service * c.mean_service * c.delta2;
  }
  const double slack = 1.0 - rho;
  rep.cycle_f2 = 2.0 * rho / (slack * slack) + inner / (slack * slack * slack);

  for (std::size_t k = 0; k < count; ++k) {
    const SpecialClass& c = classes[k];
    const double r_above = cum[k];
    const double r_with = cum[k + 1];
    ClassReport out;
    out.lambda = c.lambda;
    out.rho = c.rho;
    out.mean_service = c.mean_service;
    out.eq_mean_service = c.eq_mean_service;
    out.w_pr = w_pr[k];
    double lower_eq = 0.0;
    for (std::size_t l = k + 1; l < count; ++l) {
      lower_eq += classes[l].rho * classes[l].eq_mean_service;
    }
    out.w_np = out.w_pr + lower_eq / ((1.0 - r_with) * (1.0 - r_above));
    out.completion_pr = (c.mean_service - r_above) / (1.0 - r_above);
    out.remaining_pr = c.mean_service / out.completion_pr *
                       (1.0 + c.eq_mean_service / (1.0 - r_above));
    out.d_pr = out.w_pr + out.completion_pr;
    out.u_pr = c.rho * out.w_pr + c.rho * (1.0 + c.eq_mean_service / (1.0 - r_above));
    out.u_np = c.rho * out.w_np + c.rho * (1.0 + c.eq_mean_service);
    rep.per_class.push_back(out);
  }
  return rep;
}

SystemReport unit_service_report(const SystemSpec& system) {
  const std::size_t count = system.num_classes();
  std::vector<StreamMoments> ms;
  std::vector<SpecialClass> classes;
  std::vector<double> cum(count + 1, 0.0);
  for (std::size_t k = 0; k < count; ++k) {
    ms.push_back(stream_moments(system.classes[k].arrivals, system.classes[k].service));
    SpecialClass c;
    c.lambda = ms.back().lambda;
    c.rho = ms.back().rho;
    c.mean_service = 1.0;
    c.eq_mean_service = 0.0;
    c.delta2 = ms.back().delta2;
    classes.push_back(c);
    cum[k + 1] = cum[k] + c.rho;
  }
  const double rho = cum[count];
  const double slack = 1.0 - rho;

  double rhs = 0.0;
  for (const StreamMoments& m : ms) {
    rhs += m.rho * (rho - m.rho) / (2.0 * slack);
    rhs += m.rho * burst_term(m) / slack;
    rhs += m.pi_on * m.rho * (1.0 + m.rho / slack) * (1.0 + m.active.eq_mean_c);
    rhs -= m.pi_on * m.active.count_eq_c;
  }

  std::vector<double> w_pr(count, 0.0);
  for (std::size_t k = 0; k < count; ++k) {
    const double r_above = cum[k];
    const double r_with = cum[k + 1];
    const double denom = (1.0 - r_with) * (1.0 - r_above);
    const StreamMoments& mk = ms[k];
    double head = 0.0, spread = 0.0;
    for (std::size_t l = 0; l <= k; ++l) {
      const StreamMoments& m = ms[l];
      head += m.rho * (m.pi_on * m.rho * (1.0 + m.active.eq_mean_c) + burst_term(m));
      spread += m.rho * (r_with - m.rho);
    }
    w_pr[k] = head / denom + spread / (2.0 * denom) +
              (r_above + burst_term(mk)) / (1.0 - r_above) +
              mk.pi_on * ((1.0 + mk.rho / (1.0 - r_above)) * (1.0 + mk.active.eq_mean_c) -
                          mk.active.count_eq_c / mk.lambda);
  }
  return assemble_special_report(classes, w_pr, rhs);
}

SystemReport iid_arrivals_report(const SystemSpec& system) {
  const std::size_t count = system.num_classes();
  std::vector<SpecialClass> classes;
  std::vector<double> eq_batch(count);  // E[~A_k]
  std::vector<double> cum(count + 1, 0.0);
  for (std::size_t k = 0; k < count; ++k) {
    const ArrivalStreamSpec& s = system.classes[k].arrivals;
    const double at_zero = s.idle_self_prob;  // a_k(0) in the canonical chain
    const Pmf& positive = s.alpha[0].batch;
    SpecialClass c;
    c.lambda = (1.0 - at_zero) * factorial_moment(positive, 1);
    eq_batch[k] = (1.0 - at_zero) * factorial_moment(positive, 2) / (2.0 * c.lambda);
    c.mean_service = system.classes[k].service.mean();
    c.eq_mean_service = system.classes[k].service.eq_mean();
    c.rho = c.lambda * c.mean_service;
    // Slot-batch second moment through the stationary-batch expansion with
    // the i.i.d. moment identities substituted.
    const double pi_on = 1.0 - at_zero;
    const double eq_count = eq_batch[k] + c.lambda / at_zero;
    const double c_count_ratio = c.lambda * (2.0 - at_zero) / (at_zero * (1.0 - at_zero));
    const double eq_c = (1.0 - at_zero) / at_zero;
    c.delta2 = 2.0 * c.lambda * eq_count - 2.0 * c.lambda * pi_on * c_count_ratio +
               2.0 * c.lambda * c.lambda * pi_on * (1.0 + eq_c);
    classes.push_back(c);
    cum[k + 1] = cum[k] + c.rho;
  }
  const double rho = cum[count];
  const double slack = 1.0 - rho;

  double rhs = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const SpecialClass& c = classes[k];
    rhs += rho * c.rho * c.eq_mean_service / slack;
    rhs += c.rho * (rho - c.rho) / (2.0 * slack);
    rhs += c.rho * c.mean_service * eq_batch[k] / slack;
  }

  std::vector<double> w_pr(count, 0.0);
  for (std::size_t k = 0; k < count; ++k) {
    const double r_above = cum[k];
    const double r_with = cum[k + 1];
    const double denom = (1.0 - r_with) * (1.0 - r_above);
    double eq_sum = 0.0, spread = 0.0;
    for (std::size_t l = 0; l <= k; ++l) {
      eq_sum += classes[l].rho * classes[l].eq_mean_service;
      spread += classes[l].rho *
                (r_with - classes[l].rho + 2.0 * classes[l].mean_service * eq_batch[l]);
    }
    w_pr[k] = eq_sum / denom + spread / (2.0 * denom) +
              (r_above + classes[k].mean_service * eq_batch[k]) / (1.0 - r_above);
  }
  return assemble_special_report(classes, w_pr, rhs);
}

SystemReport iid_active_report(const SystemSpec& system) {
  const std::size_t count = system.num_classes();
  std::vector<SpecialClass> classes;
  std::vector<double> mean_batch(count), eq_batch(count), eq_c(count), pi_on(count);
  std::vector<double> cum(count + 1, 0.0);
  for (std::size_t k = 0; k < count; ++k) {
    const ArrivalStreamSpec& s = system.classes[k].arrivals;
    const Pmf* batch = nullptr;
    for (const TransitionEntry& e : s.alpha) {
      if (e.prob > 0.0) {
        batch = &e.batch;
        break;
      }
    }
    const StructureMoments st = structure_moments(s);
    mean_batch[k] = factorial_moment(*batch, 1);  // E[A+]
    eq_batch[k] = factorial_moment(*batch, 2) / (2.0 * mean_batch[k]);  // E[~A+]
    eq_c[k] = st.eq_mean_c;
    pi_on[k] = st.pi_on;
    SpecialClass c;
    c.lambda = st.pi_on * mean_batch[k];
    c.mean_service = system.classes[k].service.mean();
    c.eq_mean_service = system.classes[k].service.eq_mean();
    c.rho = c.lambda * c.mean_service;
    const double eq_count = eq_batch[k] + mean_batch[k] * eq_c[k];
    const double c_count_ratio = 2.0 * mean_batch[k] * eq_c[k] + mean_batch[k];
    c.delta2 = 2.0 * c.lambda * eq_count - 2.0 * c.lambda * pi_on[k] * c_count_ratio +
               2.0 * c.lambda * c.lambda * pi_on[k] * (1.0 + eq_c[k]);
    classes.push_back(c);
    cum[k + 1] = cum[k] + c.rho;
  }
  const double rho = cum[count];
  const double slack = 1.0 - rho;

  double rhs = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const SpecialClass& c = classes[k];
    const double thinning = 1.0 - c.lambda / mean_batch[k];
    rhs += rho * c.rho * c.eq_mean_service / slack;
    rhs += c.rho *
           (2.0 * c.mean_service * (eq_batch[k] - mean_batch[k]) + 2.0 - rho + c.rho) /
           (2.0 * slack);
    rhs += c.rho * (c.mean_service * mean_batch[k] - 1.0 + rho - c.rho) * thinning *
           (1.0 + eq_c[k]) / slack;
  }

  std::vector<double> w_pr(count, 0.0);
  for (std::size_t k = 0; k < count; ++k) {
    const double r_above = cum[k];
    const double r_with = cum[k + 1];
    const double denom = (1.0 - r_with) * (1.0 - r_above);
    double eq_sum = 0.0, spread = 0.0, burst = 0.0;
    for (std::size_t l = 0; l <= k; ++l) {
      const SpecialClass& c = classes[l];
      eq_sum += c.rho * c.eq_mean_service;
      spread += c.rho * (2.0 * c.mean_service * (eq_batch[l] - mean_batch[l]) + r_with + c.rho);
      burst += c.rho * (c.mean_service * mean_batch[l] - c.rho) *
               (1.0 - c.lambda / mean_batch[l]) * (1.0 + eq_c[l]);
    }
    const SpecialClass& ck = classes[k];
    w_pr[k] = eq_sum / denom + spread / (2.0 * denom) + burst / denom +
              (ck.mean_service * (eq_batch[k] - mean_batch[k]) + 1.0 + ck.rho) /
                  (1.0 - r_above) +
              (ck.mean_service * mean_batch[k] - 1.0 + r_above - ck.rho) *
                  (1.0 - ck.lambda / mean_batch[k]) * (1.0 + eq_c[k]) / (1.0 - r_above);
  }
  return assemble_special_report(classes, w_pr, rhs);
}

}  // namespace

SystemReport special_case_report(const SystemSpec& system, SpecialCase shape) {
  std::string why;
  if (!matches_special_case(system, shape, &why)) {
    throw ModelError("special_case_report: " + why);
  }
  switch (shape) {
    case SpecialCase::kUnitService:
      return unit_service_report(system);
    case SpecialCase::kIidArrivals:
      return iid_arrivals_report(system);
    case SpecialCase::kIidActiveBatches:
      return iid_active_report(system);
  }
  throw std::invalid_argument("special_case_report: unknown shape");
}

}  // namespace prioq
