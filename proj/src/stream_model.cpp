#include "prioq/stream_model.hpp"

#include <cmath>
#include <cstddef>
#include <queue>

#include <Eigen/Eigenvalues>

namespace prioq {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kStabilityMargin = 1e-9;

std::string cls(std::size_t k) { return "class " + std::to_string(k + 1) + ": "; }

// Reachability over the positive-probability transition graph of the full
// chain.  reverse=true walks edges backwards.
std::vector<bool> reachable_from_idle(const ArrivalStreamSpec& s, bool reverse) {
  const std::size_t m = s.order();
  std::vector<std::vector<std::size_t>> adj(m + 1);
  auto add_edge = [&](std::size_t from, std::size_t to) {
    if (reverse) std::swap(from, to);
    adj[from].push_back(to);
  };
  for (std::size_t j = 0; j < m; ++j) {
    if (s.alpha[j].prob > 0.0) add_edge(0, j + 1);
  }
  for (std::size_t i = 0; i < m; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      row += s.T[i][j].prob;
      if (s.T[i][j].prob > 0.0) add_edge(i + 1, j + 1);
    }
    if (row < 1.0) add_edge(i + 1, 0);  // exit back to idle
  }
  std::vector<bool> seen(m + 1, false);
  std::queue<std::size_t> frontier;
  seen[0] = true;
  frontier.push(0);
  while (!frontier.empty()) {
    const std::size_t v = frontier.front();
    frontier.pop();
    for (std::size_t w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        frontier.push(w);
      }
    }
  }
  return seen;
}

}  // namespace

Eigen::RowVectorXd ArrivalStreamSpec::alpha_probs() const {
  Eigen::RowVectorXd a(order());
  for (std::size_t j = 0; j < order(); ++j) a(static_cast<Eigen::Index>(j)) = alpha[j].prob;
  return a;
}

Eigen::MatrixXd ArrivalStreamSpec::transition_probs() const {
  const auto m = static_cast<Eigen::Index>(order());
  Eigen::MatrixXd t(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) t(i, j) = T[i][j].prob;
  return t;
}

Eigen::VectorXd ArrivalStreamSpec::exit_probs() const {
  const auto m = static_cast<Eigen::Index>(order());
  return Eigen::VectorXd::Ones(m) - transition_probs() * Eigen::VectorXd::Ones(m);
}

Eigen::RowVectorXd ArrivalStreamSpec::alpha_batch_moment(int order_n) const {
  Eigen::RowVectorXd a(order());
  for (std::size_t j = 0; j < order(); ++j) {
    a(static_cast<Eigen::Index>(j)) =
        alpha[j].prob == 0.0 ? 0.0 : alpha[j].prob * factorial_moment(alpha[j].batch, order_n);
  }
  return a;
}

Eigen::MatrixXd ArrivalStreamSpec::transition_batch_moment(int order_n) const {
  const auto m = static_cast<Eigen::Index>(order());
  Eigen::MatrixXd t(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const TransitionEntry& e = T[i][j];
      t(i, j) = e.prob == 0.0 ? 0.0 : e.prob * factorial_moment(e.batch, order_n);
    }
  }
  return t;
}

Eigen::MatrixXd ArrivalStreamSpec::full_matrix() const {
  const auto m = static_cast<Eigen::Index>(order());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(m + 1, m + 1);
  p(0, 0) = idle_self_prob;
  p.row(0).tail(m) = (1.0 - idle_self_prob) * alpha_probs();
  p.col(0).tail(m) = exit_probs();
  p.bottomRightCorner(m, m) = transition_probs();
  return p;
}

Eigen::MatrixXd ArrivalStreamSpec::full_batch_moment(int order_n) const {
  const auto m = static_cast<Eigen::Index>(order());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(m + 1, m + 1);
  p.row(0).tail(m) = (1.0 - idle_self_prob) * alpha_batch_moment(order_n);
  p.bottomRightCorner(m, m) = transition_batch_moment(order_n);
  return p;  // idle-targeting entries carry batch 0, hence moment 0
}

ValidationReport validate_system(const SystemSpec& system) {
  ValidationReport report;
  auto bad = [&report](const std::string& msg) { report.violations.push_back(msg); };

  if (system.classes.empty()) {
    bad("system has no classes");
    return report;
  }

  for (std::size_t k = 0; k < system.num_classes(); ++k) {
    const ArrivalStreamSpec& s = system.classes[k].arrivals;
    const ServiceSpec& h = system.classes[k].service;
    const std::size_t m = s.order();

    if (m == 0) {
      bad(cls(k) + "stream has no active states");
      continue;
    }
    bool shape_ok = s.T.size() == m;
    for (const auto& row : s.T) shape_ok = shape_ok && row.size() == m;
    if (!shape_ok) {
      bad(cls(k) + "T must be " + std::to_string(m) + "x" + std::to_string(m));
      continue;
    }
    if (!(s.idle_self_prob >= 0.0 && s.idle_self_prob < 1.0)) {
      bad(cls(k) + "idle self-probability must lie in [0,1)");
    }

    double alpha_sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const TransitionEntry& e = s.alpha[j];
      if (!(e.prob >= 0.0 && e.prob <= 1.0)) bad(cls(k) + "alpha entry out of [0,1]");
      alpha_sum += e.prob;
      if (e.prob > 0.0 && e.batch.min_value() < 1) {
        bad(cls(k) + "alpha[" + std::to_string(j) +
            "] targets an active state but its batch puts mass at 0");
      }
    }
    if (std::abs(alpha_sum - 1.0) > kRowSumTol) {
      bad(cls(k) + "alpha probabilities sum to " + std::to_string(alpha_sum) + ", expected 1");
    }

    bool has_exit = false;
    for (std::size_t i = 0; i < m; ++i) {
      double row_sum = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const TransitionEntry& e = s.T[i][j];
        if (!(e.prob >= 0.0 && e.prob <= 1.0)) bad(cls(k) + "T entry out of [0,1]");
        row_sum += e.prob;
        if (e.prob > 0.0 && e.batch.min_value() < 1) {
          bad(cls(k) + "T[" + std::to_string(i) + "][" + std::to_string(j) +
              "] targets an active state but its batch puts mass at 0");
        }
      }
      if (row_sum > 1.0 + kRowSumTol) {
        bad(cls(k) + "row " + std::to_string(i) + " of T sums to " + std::to_string(row_sum) +
            " > 1");
      }
      if (row_sum < 1.0 - kRowSumTol) has_exit = true;
    }
    if (!has_exit) {
      bad(cls(k) + "active part never exits: (I-T)e = 0");
    }

    const std::vector<bool> fwd = reachable_from_idle(s, /*reverse=*/false);
    const std::vector<bool> bwd = reachable_from_idle(s, /*reverse=*/true);
    for (std::size_t v = 1; v <= m; ++v) {
      if (!fwd[v]) bad(cls(k) + "state " + std::to_string(v) + " unreachable from idle");
      if (!bwd[v]) bad(cls(k) + "idle unreachable from state " + std::to_string(v));
    }

    if (report.violations.empty()) {
      const Eigen::MatrixXd t = s.transition_probs();
      const double spectral = t.eigenvalues().cwiseAbs().maxCoeff();
      if (spectral >= 1.0 - kRowSumTol) {
        bad(cls(k) + "spectral radius of T is " + std::to_string(spectral) + ", expected < 1");
      } else {
        const auto mi = static_cast<Eigen::Index>(m);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(mi, mi) - t);
        if (lu.rcond() < 1e-12) {
          report.warnings.push_back(cls(k) + "I-T is ill-conditioned (rcond " +
                                    std::to_string(lu.rcond()) + "); moments may lose accuracy");
        }
      }
    }

    if (h.pmf.min_value() < 1) {
      bad(cls(k) + "service time puts mass at 0; slots must serve whole units");
    }
  }

  if (report.violations.empty()) {
    // Traffic intensity per class: lambda = E[Lam] / (1/(1-p) + E[C]).
    double rho = 0.0;
    for (const ClassSpec& c : system.classes) {
      const ArrivalStreamSpec& s = c.arrivals;
      const auto m = static_cast<Eigen::Index>(s.order());
      const Eigen::MatrixXd t = s.transition_probs();
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(m, m) - t);
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
      const Eigen::VectorXd wt =
          lu.transpose().solve(Eigen::VectorXd(s.alpha_probs().transpose()));
      const Eigen::RowVectorXd w = wt.transpose();
      const double mean_count =
          s.alpha_batch_moment(1).sum() + (w * (s.transition_batch_moment(1) * ones)).value();
      const double lambda = mean_count / (1.0 / (1.0 - s.idle_self_prob) + w.sum());
      rho += lambda * c.service.mean();
    }
    report.rho = rho;
    if (rho > 1.0 - kStabilityMargin) {
      report.violations.push_back("total traffic intensity " + std::to_string(rho) +
                                  " is at or past the stability boundary");
    }
  }

  return report;
}

ArrivalStreamSpec build_iid_stream(const Pmf& batch) {
  double at_zero = 0.0;
  for (std::size_t i = 0; i < batch.support_size(); ++i) {
    if (batch.values()[i] == 0) at_zero = batch.probs()[i];
  }
  if (!(at_zero > 0.0 && at_zero < 1.0)) {
    throw ModelError("build_iid_stream: batch law must put mass in (0,1) at zero");
  }
  std::vector<std::int64_t> values;
  std::vector<double> probs;
  double positive_mass = 0.0;
  for (std::size_t i = 0; i < batch.support_size(); ++i) {
    if (batch.values()[i] == 0) continue;
    values.push_back(batch.values()[i]);
    probs.push_back(batch.probs()[i]);
    positive_mass += batch.probs()[i];
  }
  // Condition on the actual positive mass, not 1 - at_zero: the latter can
  // round the conditional law off unity.
  for (double& p : probs) p /= positive_mass;
  const Pmf positive_part(std::move(values), std::move(probs));

  ArrivalStreamSpec s;
  s.idle_self_prob = at_zero;
  s.alpha = {TransitionEntry{1.0, positive_part}};
  s.T = {{TransitionEntry{1.0 - at_zero, positive_part}}};
  return s;
}

ArrivalStreamSpec build_iid_active_stream(double idle_self_prob,
                                          const std::vector<double>& alpha_probs,
                                          const std::vector<std::vector<double>>& t_probs,
                                          const Pmf& batch) {
  if (batch.min_value() < 1) {
    throw ModelError("build_iid_active_stream: batch law must have support >= 1");
  }
  const std::size_t m = alpha_probs.size();
  if (m == 0 || t_probs.size() != m) {
    throw ModelError("build_iid_active_stream: alpha and T dimensions disagree");
  }
  ArrivalStreamSpec s;
  s.idle_self_prob = idle_self_prob;
  s.alpha.resize(m);
  s.T.assign(m, std::vector<TransitionEntry>(m));
  for (std::size_t j = 0; j < m; ++j) s.alpha[j] = TransitionEntry{alpha_probs[j], batch};
  for (std::size_t i = 0; i < m; ++i) {
    if (t_probs[i].size() != m) {
      throw ModelError("build_iid_active_stream: T row " + std::to_string(i) + " has wrong size");
    }
    for (std::size_t j = 0; j < m; ++j) s.T[i][j] = TransitionEntry{t_probs[i][j], batch};
  }
  return s;
}

}  // namespace prioq
