#pragma once

#include "linkedcox/coxfit.hpp"
#include "linkedcox/types.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace linkedcox {

enum class Method { Oracle, CC, CCPlus, NLAC, IPLW };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

// 95% interval multiplier used everywhere.
inline constexpr double kCiMultiplier = 1.960;

struct FitOptions {
  ChangePointSpec changepoints;
  std::vector<int> linkage_covariates;  // IPLW linkage design; empty = all z1
  double positivity_floor = 0.01;
  bool truncate_weights = false;
  NewtonOptions newton;
};

struct FitReport {
  Method method = Method::Oracle;
  CoxFit cox;
  Eigen::VectorXd se;
  Eigen::VectorXd ci_lo, ci_hi;
  Eigen::VectorXd hr, hr_lo, hr_hi;
  int n_used = 0;
  std::vector<std::string> diagnostics;
};

// Full-data benchmark; requires t_obs and delta on every subject (simulation's
// unmasked view). Robust covariance.
FitReport fit_oracle(const std::vector<SubjectRecord>& subjects, const FitOptions& = {});

// Complete-case: linked subjects only. Robust covariance.
FitReport fit_cc(const std::vector<SubjectRecord>& subjects, const FitOptions& = {});

// Available-case: subjects with l + q > 0. Robust covariance.
FitReport fit_ccplus(const std::vector<SubjectRecord>& subjects, const FitOptions& = {});

// Censor-the-unlinked: Class3 subjects get t_obs := c1, delta := 0, then a
// standard fit on all n subjects. Robust covariance.
FitReport fit_nlac(const std::vector<SubjectRecord>& subjects, const FitOptions& = {});

// Two-step weighted estimator: logistic linkage model on q=0 subjects, weights
// 1 / pi_hat for linked q=0 subjects, 1 for q=1, 0 otherwise; weighted Cox fit
// on the positive-weight subjects normalized by total n; linkage-adjusted
// covariance. When every q=0 subject is linked the linkage step is skipped and
// unit weights are used.
FitReport fit_iplw(const std::vector<SubjectRecord>& subjects, const FitOptions& = {});

FitReport fit_method(Method m, const std::vector<SubjectRecord>& subjects,
                     const FitOptions& = {});

nlohmann::json fitreport_to_json(const FitReport& report);

}  // namespace linkedcox
