#include "prioq/pmf.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace prioq {

Pmf::Pmf() : values_{0}, probs_{1.0} {}

Pmf::Pmf(std::vector<std::int64_t> values, std::vector<double> probs)
    : values_(std::move(values)), probs_(std::move(probs)) {
  if (values_.empty() || values_.size() != probs_.size()) {
    throw ModelError("pmf: values and probs must be non-empty and equal-sized");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] < 0) {
      throw ModelError("pmf: support value " + std::to_string(values_[i]) + " is negative");
    }
    if (i > 0 && values_[i] <= values_[i - 1]) {
      throw ModelError("pmf: support values must be strictly increasing");
    }
    if (!(probs_[i] >= 0.0)) {
      throw ModelError("pmf: probability at value " + std::to_string(values_[i]) +
                       " is negative or NaN");
    }
    total += probs_[i];
  }
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw ModelError("pmf: probabilities sum to " + std::to_string(total) + ", expected 1");
  }
}

Pmf Pmf::point(std::int64_t value) { return Pmf({value}, {1.0}); }

Pmf Pmf::geometric(double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ModelError("pmf: geometric ratio must lie in (0,1)");
  }
  std::vector<std::int64_t> values;
  std::vector<double> probs;
  double mass = 1.0 - ratio;  // Pr(V=1)
  double tail = ratio;        // Pr(V>1)
  std::int64_t n = 1;
  while (true) {
    values.push_back(n);
    probs.push_back(mass);
    if (tail < 1e-14) break;
    mass *= ratio;
    tail *= ratio;
    ++n;
  }
  double total = 0.0;
  for (double p : probs) total += p;
  for (double& p : probs) p /= total;
  return Pmf(std::move(values), std::move(probs));
}

double Pmf::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    m += static_cast<double>(values_[i]) * probs_[i];
  }
  return m;
}

double factorial_moment(const Pmf& pmf, int order) {
  if (order != 1 && order != 2) {
    throw std::invalid_argument("factorial_moment: order must be 1 or 2, got " +
                                std::to_string(order));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < pmf.support_size(); ++i) {
    const double v = static_cast<double>(pmf.values()[i]);
    m += (order == 1 ? v : v * (v - 1.0)) * pmf.probs()[i];
  }
  return m;
}

double equilibrium_mean(const Pmf& pmf) {
  const double m1 = factorial_moment(pmf, 1);
  if (m1 <= 0.0) {
    throw ModelError("equilibrium_mean: pmf has zero mean");
  }
  return factorial_moment(pmf, 2) / (2.0 * m1);
}

}  // namespace prioq
