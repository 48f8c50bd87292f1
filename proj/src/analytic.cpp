#include "prioq/analytic.hpp"

#include <cmath>
#include <string>

#include "prioq/errors.hpp"

namespace prioq {

namespace {

// One LU factorization of (I-T) feeds every formula below.
struct StreamCore {
  Eigen::RowVectorXd w;   // alpha (I-T)^{-1}
  Eigen::RowVectorXd w2;  // alpha (I-T)^{-2}
  Eigen::VectorXd y;      // (I-T)^{-1} e
  Eigen::VectorXd q;      // (I-T)^{-1} T' e
  Eigen::RowVectorXd a1, a2;
  Eigen::MatrixXd t1, t2;
  Eigen::VectorXd t1e, ones;
};

StreamCore factor_stream(const ArrivalStreamSpec& s) {
  const auto m = static_cast<Eigen::Index>(s.order());
  const Eigen::MatrixXd t = s.transition_probs();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(m, m) - t);
  if (lu.rcond() < 1e-14) {
    throw ModelError("stream moments: I-T is numerically singular (rcond " +
                     std::to_string(lu.rcond()) + ")");
  }
  StreamCore c;
  c.ones = Eigen::VectorXd::Ones(m);
  c.a1 = s.alpha_batch_moment(1);
  c.a2 = s.alpha_batch_moment(2);
  c.t1 = s.transition_batch_moment(1);
  c.t2 = s.transition_batch_moment(2);
  // Row systems x (I-T) = b are solved as (I-T)' x' = b'; the intermediate
  // column vector keeps Eigen on the transposed-solve fast path.
  const Eigen::VectorXd wt = lu.transpose().solve(Eigen::VectorXd(s.alpha_probs().transpose()));
  c.w = wt.transpose();
  const Eigen::VectorXd w2t = lu.transpose().solve(wt);
  c.w2 = w2t.transpose();
  c.y = lu.solve(c.ones);
  c.t1e = c.t1 * c.ones;
  c.q = lu.solve(c.t1e);
  return c;
}

ActivePeriodMoments active_moments_from(const StreamCore& c) {
  ActivePeriodMoments m;
  m.mean_c = c.w.sum();
  m.mean_count = c.a1.sum() + (c.w * c.t1e).value();
  m.mean_c_count =
      (c.a1 * c.y).value() + (c.w * (c.t1 * c.y)).value() + (c.w2 * c.t1e).value();
  // (I-T)^{-1} T e = (I-T)^{-1} e - e
  m.eq_mean_c = (c.w * (c.y - c.ones)).value() / m.mean_c;
  m.count_eq_c = (c.w2 * c.t1e).value() / m.mean_c;
  m.eq_mean_count = (c.a2.sum() + 2.0 * (c.a1 * c.q).value() +
                     2.0 * (c.w * (c.t1 * c.q)).value() + (c.w * (c.t2 * c.ones)).value()) /
                    (2.0 * m.mean_count);
  return m;
}

}  // namespace

std::pair<double, Eigen::RowVectorXd> stationary_split(const ArrivalStreamSpec& stream) {
  const StreamCore c = factor_stream(stream);
  const double idle_weight = 1.0 / (1.0 - stream.idle_self_prob);
  const double norm = idle_weight + c.w.sum();
  return {idle_weight / norm, c.w / norm};
}

ActivePeriodMoments active_period_moments(const ArrivalStreamSpec& stream) {
  return active_moments_from(factor_stream(stream));
}

StreamMoments stream_moments(const ArrivalStreamSpec& stream, const ServiceSpec& service) {
  const StreamCore c = factor_stream(stream);

  StreamMoments sm;
  sm.active = active_moments_from(c);
  const double idle_weight = 1.0 / (1.0 - stream.idle_self_prob);
  const double norm = idle_weight + c.w.sum();
  sm.pi_idle = idle_weight / norm;
  sm.pi_active = c.w / norm;
  sm.pi_on = sm.pi_active.sum();
  sm.lambda = sm.active.mean_count / norm;
  sm.mean_service = service.mean();
  sm.eq_mean_service = service.eq_mean();
  sm.rho = sm.lambda * sm.mean_service;

  const ActivePeriodMoments& a = sm.active;
  sm.delta2 = 2.0 * sm.lambda * a.eq_mean_count -
              2.0 * sm.lambda * sm.pi_on * a.mean_c_count / a.mean_c +
              2.0 * sm.lambda * sm.lambda * sm.pi_on * (1.0 + a.eq_mean_c);
  sm.v0p = sm.lambda * sm.pi_on * (1.0 + a.eq_mean_c) - sm.pi_on * a.count_eq_c;
  return sm;
}

SystemMoments analyze_streams(const SystemSpec& system) {
  if (system.classes.empty()) {
    throw ModelError("analyze_streams: system has no classes");
  }
  SystemMoments sys;
  sys.rho_cum.push_back(0.0);
  for (const ClassSpec& c : system.classes) {
    sys.per_class.push_back(stream_moments(c.arrivals, c.service));
    sys.rho_cum.push_back(sys.rho_cum.back() + sys.per_class.back().rho);
  }
  sys.rho_total = sys.rho_cum.back();
  if (sys.rho_total > 1.0 - kStabilityMargin) {
    throw InstabilityError("total traffic intensity " + std::to_string(sys.rho_total) +
                           " is at or past the stability boundary");
  }
  sys.unfinished_mean = total_unfinished_mean(sys);
  sys.conservation_rhs = conservation_rhs(sys);

  const double slack = 1.0 - sys.rho_total;
  sys.cycle_f1 = 1.0 / slack;
  double inner = 0.0;
  for (const StreamMoments& m : sys.per_class) {
    inner += 2.0 * m.rho * m.eq_mean_service + m.rho * (sys.rho_total - m.rho) +
             m.mean_service * m.mean_service * m.delta2;
  }
  sys.cycle_f2 = 2.0 * sys.rho_total / (slack * slack) + inner / (slack * slack * slack);
  return sys;
}

double total_unfinished_mean(const SystemMoments& sm) {
  const double rho = sm.rho_total;
  const double slack = 1.0 - rho;
  double u = rho;
  for (const StreamMoments& m : sm.per_class) {
    u += m.rho * m.eq_mean_service / slack;
    u += m.rho * (rho - m.rho) / (2.0 * slack);
    u += m.mean_service * m.mean_service * m.delta2 / (2.0 * slack);
    u += m.mean_service * m.v0p;
  }
  return u;
}

double total_unfinished_mean(const SystemSpec& system) {
  return analyze_streams(system).unfinished_mean;
}

double conservation_rhs(const SystemMoments& sm) {
  const double rho = sm.rho_total;
  const double slack = 1.0 - rho;
  double rhs = 0.0;
  for (const StreamMoments& m : sm.per_class) {
    const ActivePeriodMoments& a = m.active;
    rhs += rho * m.rho * m.eq_mean_service / slack;
    rhs += m.rho * (rho - m.rho) / (2.0 * slack);
    rhs += m.rho * m.mean_service * (a.eq_mean_count - m.pi_on * a.mean_c_count / a.mean_c) /
           slack;
    rhs += m.pi_on * m.rho * (1.0 + m.rho / slack) * (1.0 + a.eq_mean_c);
    rhs -= m.pi_on * m.mean_service * a.count_eq_c;
  }
  return rhs;
}

double conservation_rhs(const SystemSpec& system) {
  return conservation_rhs(analyze_streams(system));
}

std::pair<double, double> busy_cycle_moments(const SystemSpec& system, std::size_t top_count) {
  if (top_count < 1 || top_count > system.num_classes()) {
    throw std::invalid_argument("busy_cycle_moments: top_count out of range");
  }
  double rho_top = 0.0;
  std::vector<StreamMoments> ms;
  for (std::size_t k = 0; k < top_count; ++k) {
    ms.push_back(stream_moments(system.classes[k].arrivals, system.classes[k].service));
    rho_top += ms.back().rho;
  }
  if (rho_top > 1.0 - kStabilityMargin) {
    throw InstabilityError("subsystem intensity " + std::to_string(rho_top) +
                           " is at or past the stability boundary");
  }
  const double slack = 1.0 - rho_top;
  double inner = 0.0;
  for (const StreamMoments& m : ms) {
    inner += 2.0 * m.rho * m.eq_mean_service + m.rho * (rho_top - m.rho) +
             m.mean_service * m.mean_service * m.delta2;
  }
  const double f1 = 1.0 / slack;
  const double f2 = 2.0 * rho_top / (slack * slack) + inner / (slack * slack * slack);
  return {f1, f2};
}

double single_class_wait(const ArrivalStreamSpec& stream, const ServiceSpec& service) {
  const StreamMoments m = stream_moments(stream, service);
  if (m.rho > 1.0 - kStabilityMargin) {
    throw InstabilityError("single-class intensity " + std::to_string(m.rho) +
                           " is at or past the stability boundary");
  }
  const ActivePeriodMoments& a = m.active;
  const double slack = 1.0 - m.rho;
  const double burst = a.eq_mean_count - m.pi_on * a.mean_c_count / a.mean_c;
  return (m.rho * m.eq_mean_service + m.mean_service * burst) / slack +
         m.pi_on * ((1.0 + a.eq_mean_c) / slack - a.count_eq_c / m.lambda);
}

double single_class_unfinished_mean(const ArrivalStreamSpec& stream, const ServiceSpec& service) {
  const StreamMoments m = stream_moments(stream, service);
  if (m.rho > 1.0 - kStabilityMargin) {
    throw InstabilityError("single-class intensity " + std::to_string(m.rho) +
                           " is at or past the stability boundary");
  }
  const ActivePeriodMoments& a = m.active;
  const double slack = 1.0 - m.rho;
  const double burst = a.eq_mean_count - m.pi_on * a.mean_c_count / a.mean_c;
  return m.rho + (m.rho * m.eq_mean_service + m.rho * m.mean_service * burst) / slack +
         m.rho * m.pi_on * ((1.0 + a.eq_mean_c) / slack - a.count_eq_c / m.lambda);
}

}  // namespace prioq
