#pragma once

#include <stdexcept>
#include <string>

namespace linkedcox {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caller handed us data that violates a documented precondition.
struct InvalidInput : Error {
  using Error::Error;
};

// Malformed CSV or JSON input; carries the 1-based row where parsing failed
// (0 when the failure is not tied to a row, e.g. a bad header).
struct ParseError : Error {
  ParseError(const std::string& msg, long row_num = 0)
      : Error(row_num > 0 ? msg + " (row " + std::to_string(row_num) + ")" : msg),
        row(row_num) {}
  long row;
};

// A single fit attempt failed for a statistical or numerical reason; Monte-Carlo
// loops catch this base, count the failure, and move on to the next replication.
struct EstimationFailure : Error {
  using Error::Error;
};

// Design matrix rank-deficient (collinear or constant columns).
struct SingularDesign : EstimationFailure {
  using EstimationFailure::EstimationFailure;
};

// Logistic MLE diverging: some |gamma_j| exceeded the separation bound.
struct SeparationDetected : EstimationFailure {
  using EstimationFailure::EstimationFailure;
};

// Newton iteration exhausted max_iter or step-halving without meeting tolerance.
struct NoConvergence : EstimationFailure {
  using EstimationFailure::EstimationFailure;
};

// No subject at risk (S0 = 0) at a weighted event time, or no weighted events at all.
struct EmptyRiskSet : EstimationFailure {
  using EstimationFailure::EstimationFailure;
};

// Observed information not invertible at the current iterate.
struct SingularHessian : EstimationFailure {
  using EstimationFailure::EstimationFailure;
};

// Linkage information matrix not invertible when assembling the IPLW variance.
struct SingularLinkageInfo : EstimationFailure {
  using EstimationFailure::EstimationFailure;
};

// A covariance estimate failed its positive-semidefiniteness check beyond slack.
struct NumericalFailure : EstimationFailure {
  using EstimationFailure::EstimationFailure;
};

// Monte-Carlo run with too many failed replications (or an impossible scenario config).
struct DegenerateScenario : Error {
  using Error::Error;
};

}  // namespace linkedcox
