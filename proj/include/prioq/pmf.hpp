#pragma once

#include <cstdint>
#include <vector>

#include "prioq/errors.hpp"

namespace prioq {

// Finite probability mass function on the nonnegative integers.
//
// Support values are strictly increasing and probabilities sum to one within
// kSumTolerance; both are checked at construction.  Used for batch sizes and
// service times throughout.
class Pmf {
 public:
  static constexpr double kSumTolerance = 1e-12;

  Pmf();  // point mass at 0
  Pmf(std::vector<std::int64_t> values, std::vector<double> probs);

  static Pmf point(std::int64_t value);

  // Geometric on {1,2,...}: Pr(V=n) = (1-ratio)*ratio^(n-1).  Truncated where
  // the tail mass drops below 1e-14, then renormalized.
  static Pmf geometric(double ratio);

  const std::vector<std::int64_t>& values() const { return values_; }
  const std::vector<double>& probs() const { return probs_; }
  std::size_t support_size() const { return values_.size(); }
  std::int64_t min_value() const { return values_.front(); }
  std::int64_t max_value() const { return values_.back(); }

  double mean() const;

  bool operator==(const Pmf& other) const = default;

 private:
  std::vector<std::int64_t> values_;
  std::vector<double> probs_;
};

// n-th factorial moment E[F(F-1)...(F-n+1)], n in {1,2}.
double factorial_moment(const Pmf& pmf, int order);

// Mean of the equilibrium (forward recurrence) variable, E[F(F-1)]/(2 E[F]).
// Requires E[F] > 0.
double equilibrium_mean(const Pmf& pmf);

}  // namespace prioq
