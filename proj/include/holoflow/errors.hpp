#pragma once

#include <stdexcept>
#include <string>

namespace holoflow {

/// Bad argument shape/content (dimension mismatch, empty seed list, ...).
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Metric is not symmetric positive definite where it must be.
struct InvalidMetric : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation does not hold (e.g. the image of
/// a projection was required to be bracket-closed and is not).
struct PreconditionViolated : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A derivative order beyond what the geometry provides was requested.
struct UnsupportedOrder : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Discretization too coarse: a symmetry/consistency residual exceeded its bound.
struct AccuracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad run configuration (CFL violation, unknown scenario, bad option value).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The evolving metric lost positivity.
struct FlowSingularity : std::runtime_error {
  FlowSingularity(const std::string& what, double time)
      : std::runtime_error(what), t(time) {}
  double t;
};

/// The evolved frame gauge drifted from orthonormality.
struct GaugeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace holoflow
