#pragma once

#include "linkedcox/coxfit.hpp"
#include "linkedcox/linkage.hpp"
#include "linkedcox/types.hpp"

#include <vector>

namespace linkedcox {

// Per-subject influence residuals of the weighted partial-likelihood score,
// plus the pieces of the linkage-adjusted meat matrix that cov_iplw fills in.
struct InfluenceSet {
  Eigen::MatrixXd u;                      // one row per included subject
  std::vector<std::int64_t> subject_ids;  // aligned with u
  Eigen::VectorXd weights;                // subject weight (constant over episodes)
  Eigen::MatrixXd qe_hat;                 // (d1+1) x p, filled by cov_iplw
  Eigen::MatrixXd sigma_u;                // p x p, filled by cov_iplw
  Eigen::MatrixXd sigma0_inv;             // p x p, filled by cov_iplw
};

// Residual for subject i at beta:
//   U_i = sum over own events of (x_i - xbar(t))
//       - sum over weighted event times t with i at risk of
//           (event_wsum(t)/n) * exp(beta' x_i(t)) / s0(t) * (x_i(t) - xbar(t))
// with s0 the 1/n-scaled at-risk sum, so each increment is the Breslow jump
// event_wsum / s0_raw. The weighted mean (1/n) sum w_i U_i reproduces the
// score exactly.
InfluenceSet influence_residuals(const CoxPartialLikelihood& pl,
                                 const Eigen::VectorXd& beta_hat);

// Model-based covariance (1/n) A_n(beta_hat)^{-1}.
Eigen::MatrixXd cov_model(const CoxFit& fit, int n_norm);

// Robust covariance (1/n) A^{-1} B A^{-1} with B = (1/n) sum U_i U_i'.
// Meant for unit-weight fits.
Eigen::MatrixXd cov_robust(const CoxFit& fit, const InfluenceSet& infl, int n_norm);

// Linkage-adjusted covariance for the weighted fit:
//   Sigma_U = (1/n) sum w_i^2 U_i U_i'  -  Qe' SigmaGamma^{-1} Qe
//   cov     = (1/n) A^{-1} Sigma_U A^{-1}
// with Qe = (1/n) sum w_i I(q_i=0)(1-pi_i) xtilde_i U_i'. Pass linkage = nullptr
// for the unit-weight bypass (every q=0 subject linked): the correction is then
// identically zero and the result coincides with cov_robust. `included` must
// align with the influence rows. Fills infl.qe_hat, infl.sigma_u and
// infl.sigma0_inv. Throws SingularLinkageInfo or NumericalFailure.
Eigen::MatrixXd cov_iplw(const CoxFit& fit, InfluenceSet& infl,
                         const LinkageFit* linkage,
                         const std::vector<SubjectRecord>& included, int n_norm);

}  // namespace linkedcox
