#pragma once

#include <stdexcept>
#include <string>

namespace prioq {

// Invalid or degenerate model input: bad mass function, malformed stream,
// shape mismatch for a special-case evaluator, unreadable model file.
class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

// Total (or subsystem) traffic intensity at or past the stability boundary.
class InstabilityError : public std::runtime_error {
 public:
  explicit InstabilityError(const std::string& what) : std::runtime_error(what) {}
};

// Requested simulation metric is undefined under the configured discipline.
class UnsupportedMetricError : public std::runtime_error {
 public:
  explicit UnsupportedMetricError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace prioq
