#pragma once

#include "linkedcox/types.hpp"

#include <string>
#include <vector>

namespace linkedcox {

// Logistic model for P(L=1 | Q=0, Z1), fitted by maximum likelihood on the
// subjects with q=0. The design is (1, z1[covariate_idx...]).
struct LinkageFit {
  Eigen::VectorXd gamma_hat;
  // (1/n) sum over q=0 subjects of pi(1-pi) x x', with n = all subjects passed
  Eigen::MatrixXd info;
  Eigen::VectorXd pi_hat;  // fitted probability for every subject, in input order
  std::vector<int> covariate_idx;
  int iterations = 0;
  bool converged = false;
};

struct LinkageOptions {
  double tol = 1e-10;            // sup-norm of the score sum at the solution
  int max_iter = 100;
  int max_halvings = 50;
  double separation_bound = 30.0;
  std::vector<double>* loglik_trace = nullptr;  // test hook
};

// covariate_idx selects z1 columns for the linkage design; empty means all.
// Throws SingularDesign on a rank-deficient design, SeparationDetected when the
// outcome is constant among q=0 subjects or a coefficient runs away, and
// NoConvergence if Newton stalls.
LinkageFit fit_linkage(const std::vector<SubjectRecord>& subjects,
                       const std::vector<int>& covariate_idx = {},
                       const LinkageOptions& opts = {});

struct WeightVector {
  Eigen::VectorXd w;  // aligned with the subjects passed in
  std::vector<std::string> warnings;
};

// Inverse-probability-of-linkage weights:
//   q=1 -> 1;  q=0, l=1 -> 1 / pi_hat;  q=0, l=0 -> 0.
// Fitted probabilities below `floor` among q=0 subjects trigger a positivity
// warning; weights are only capped at 1/floor when `truncate` is set.
WeightVector compute_weights(const std::vector<SubjectRecord>& subjects,
                             const LinkageFit& fit, double floor = 0.01,
                             bool truncate = false);

}  // namespace linkedcox
