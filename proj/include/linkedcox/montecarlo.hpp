#pragma once

#include "linkedcox/estimators.hpp"
#include "linkedcox/simgen.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace linkedcox {

// where a bias/coverage reference value comes from
enum class TargetProvenance { TrueBeta, OracleLargeN };

std::string provenance_name(TargetProvenance p);
TargetProvenance provenance_from_name(const std::string& s);

// beta* reference for a (scenario, analysis) pair; a correct analysis uses the
// generating coefficients, a misspecified one the mean of oracle fits at
// n = 10000 over 1000 replications on a fixed protocol seed (cached on disk)
struct TargetEstimate {
  Eigen::VectorXd beta_star;
  Eigen::VectorXd mc_se;  // sd/sqrt(reps); zero when provenance is TrueBeta
  TargetProvenance provenance = TargetProvenance::TrueBeta;
};

// aggregates for one method over its successful replications
struct MethodStats {
  Method method = Method::Oracle;
  Eigen::VectorXd bias;          // mean(beta_hat) - target, elementwise
  Eigen::VectorXd mean_se;       // mean of the method's own SE
  Eigen::VectorXd empirical_sd;  // NaN when fewer than 2 successes
  Eigen::VectorXd coverage;      // fraction of 95% CIs containing the target
  int n_reps = 0;
  int n_failed = 0;
};

struct SimReport {
  ScenarioConfig config;  // fully resolved, all defaults materialized
  std::vector<std::string> param_names;
  Eigen::VectorXd target;
  Eigen::VectorXd target_mc_se;
  TargetProvenance target_provenance = TargetProvenance::TrueBeta;
  int n_reps = 0;
  std::vector<MethodStats> methods;
};

struct RunOptions {
  int n_threads = 0;                // <= 0 means hardware concurrency
  bool refresh_target_cache = false;
  std::string cache_dir;            // empty: $LINKEDCOX_CACHE_DIR or ./.linkedcox-cache
  int target_n = 10000;             // oracle-large-n protocol
  int target_reps = 1000;
};

// Correct analysis: beta_star = beta_true exactly.  Misspecified: oracle fits
// at target_n over target_reps replications; aborts if more than 1% fail.
TargetEstimate estimate_target(const ScenarioConfig& config, const RunOptions& opts = {});

// Per replication: generate, assign linkage, mask, fit every requested method,
// record estimate / SE / CI hit against the target.  Fit failures are counted
// and excluded; more than 5% failures for any method raises DegenerateScenario.
// Aggregation is an ordered reduction over replication index, so the result is
// identical for any worker count.
SimReport run_replications(const ScenarioConfig& config, const std::vector<Method>& methods,
                           int n_reps, const RunOptions& opts = {});

// format "markdown" (paper-style rows, coverage below 0.90 marked with a
// dagger) or "csv" (full-precision cells, one row per method)
std::string emit_table(const SimReport& report, const std::string& format);

nlohmann::json scenario_config_to_json(const ScenarioConfig& config);
ScenarioConfig scenario_config_from_json(const nlohmann::json& j);
nlohmann::json simreport_to_json(const SimReport& report);
SimReport simreport_from_json(const nlohmann::json& j);

}  // namespace linkedcox
