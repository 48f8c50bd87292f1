#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prioq/pmf.hpp"

namespace prioq {

// One transition of the underlying chain between active states (or from the
// idle state into an active one), together with the batch it injects.
struct TransitionEntry {
  double prob = 0.0;
  Pmf batch = Pmf::point(1);
};

// Batch arrival stream driven by a Markov chain on {0, 1, ..., M}: state 0 is
// idle with a geometric holding time (self-loop idle_self_prob), states
// 1..M are active.  Transitions that land in an active state carry a batch of
// size >= 1; transitions into the idle state carry no arrivals.  Rows of the
// active-to-active block T are substochastic; the deficit of row i is the
// exit probability back to idle.
struct ArrivalStreamSpec {
  double idle_self_prob = 0.0;                  // p
  std::vector<TransitionEntry> alpha;           // idle -> active, probs sum to 1
  std::vector<std::vector<TransitionEntry>> T;  // active -> active, M x M

  std::size_t order() const { return alpha.size(); }  // M

  Eigen::RowVectorXd alpha_probs() const;
  Eigen::MatrixXd transition_probs() const;
  Eigen::VectorXd exit_probs() const;  // (I - T) e

  // Entrywise prob * (factorial moment of the batch), i.e. the order-th
  // derivative at z=1 of the matrix of transition-wise batch transforms.
  Eigen::RowVectorXd alpha_batch_moment(int order) const;
  Eigen::MatrixXd transition_batch_moment(int order) const;

  // Full (M+1) x (M+1) stochastic matrix of the underlying chain.
  Eigen::MatrixXd full_matrix() const;
  // Full matrix weighted entrywise by batch factorial moments (idle-targeting
  // entries carry batch 0, hence weight 0).
  Eigen::MatrixXd full_batch_moment(int order) const;
};

struct ServiceSpec {
  Pmf pmf = Pmf::point(1);

  double mean() const { return pmf.mean(); }
  double eq_mean() const { return equilibrium_mean(pmf); }
};

struct ClassSpec {
  ArrivalStreamSpec arrivals;
  ServiceSpec service;
};

// Priority-ordered system: classes[0] has the highest priority.
struct SystemSpec {
  std::vector<ClassSpec> classes;

  std::size_t num_classes() const { return classes.size(); }
};

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;
  double rho = std::numeric_limits<double>::quiet_NaN();

  bool valid() const { return violations.empty(); }
};

// Checks every structural requirement (dimensions, stochasticity,
// irreducibility, batch-support rule, service support, stability) and
// reports all violations rather than stopping at the first.
ValidationReport validate_system(const SystemSpec& system);

// Stream whose slot-wise batches are i.i.d. copies of `batch` (which must
// place mass in (0,1) at zero): a two-state chain with p = Pr(batch=0) and
// every active-targeting transition carrying the conditional law of
// batch given batch >= 1.
ArrivalStreamSpec build_iid_stream(const Pmf& batch);

// Stream with general on/off structure but a single batch law shared by
// every active-targeting transition.  batch must have support >= 1.
ArrivalStreamSpec build_iid_active_stream(double idle_self_prob,
                                          const std::vector<double>& alpha_probs,
                                          const std::vector<std::vector<double>>& t_probs,
                                          const Pmf& batch);

}  // namespace prioq
