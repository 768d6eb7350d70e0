#pragma once

#include "linkedcox/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace linkedcox {

enum class Scenario { TdChangePoint, MotivatingSquared, GapScenario };
enum class Mechanism { LCAR, CLAR, LNAR_T, LNAR_C2 };
enum class Analysis { Correct, Misspecified };
enum class GapRemedy { On, Off, Naive };

std::string scenario_name(Scenario s);
Scenario scenario_from_name(const std::string&);
std::string mechanism_name(Mechanism m);
Mechanism mechanism_from_name(const std::string&);
std::string analysis_name(Analysis a);
Analysis analysis_from_name(const std::string&);
std::string remedy_name(GapRemedy r);
GapRemedy remedy_from_name(const std::string&);

struct ScenarioConfig {
  Scenario scenario = Scenario::TdChangePoint;
  int n = 2000;
  Eigen::VectorXd beta_true;      // empty means the scenario default
  double baseline_hazard = 0.0;   // 0 means the scenario default
  double tau1 = 0.0;              // trial end; 0 means default
  double tau2 = 0.0;              // follow-up end; 0 means default
  Mechanism mechanism = Mechanism::CLAR;
  Analysis analysis = Analysis::Correct;
  GapRemedy remedy = GapRemedy::On;  // gap scenario only
  double lcar_p = 0.0;               // LCAR linkage probability; 0 means default
  std::uint64_t seed = 0;
};

// Fills the zero/empty fields with the scenario defaults.
ScenarioConfig resolve(ScenarioConfig cfg);

// A generated subject: the observed record plus the always-known latent pieces.
// After gen_linkage, obs is masked per linkage class while t_obs_full and
// delta_full keep the unmasked outcome under the active censoring rule.
struct LatentRecord {
  SubjectRecord obs;
  double t_fail = 0.0;
  double c2 = 0.0;
  double t_obs_full = 0.0;
  bool delta_full = false;
  double follow_start = 0.0;       // c1 unless a gap pushes follow-up entry later
  bool interval_censored = false;  // event inside (c1, follow_start)
};

// Inverse cumulative hazard for a rate that jumps from r0 to r1 at t_change:
// returns e/r0 when e < r0*t_change, else t_change + (e - r0*t_change)/r1.
double piecewise_exp_inverse(double e, double r0, double r1, double t_change);

// Change-point scenario: z1 = (x1, x2); the hazard multiplies by exp(beta3 x1)
// from tau1 on. No linkage assigned yet.
std::vector<LatentRecord> gen_td_changepoint(const ScenarioConfig&);

// Squared-covariate scenario: z1 = (x1, x2, x3); the hazard uses x3^2.
std::vector<LatentRecord> gen_motivating(const ScenarioConfig&);

// Delayed-follow-up scenario: z1 = (x1, x2, x3); half the subjects enter
// observational follow-up after a gap of length gap_len. Records carry the
// idealized no-gap censoring; apply remedy_transform or naive_gap_transform to
// switch censoring rules.
std::vector<LatentRecord> gen_gap_scenario(const ScenarioConfig&);

// Dispatch on cfg.scenario; for the gap scenario the configured remedy is
// applied before returning.
std::vector<LatentRecord> gen_scenario(const ScenarioConfig&);

// Gap remedy: subjects with a gap are censored at c1 outright, so no subject is
// interval censored afterwards. Subjects without a gap keep max(c1, c2).
void remedy_transform(std::vector<LatentRecord>&);

// Negative control: interval-censored subjects are right-censored at c1 while
// everyone else keeps the observational follow-up information.
void naive_gap_transform(std::vector<LatentRecord>&);

// Assigns linkage per cfg.mechanism using the post-transform outcome values and
// masks obs per linkage class. Call once, after any gap transform.
void gen_linkage(std::vector<LatentRecord>&, const ScenarioConfig&);

std::vector<SubjectRecord> observed_view(const std::vector<LatentRecord>&);

// All-linked view: l = 1, t_obs/delta from the unmasked outcome, c2 restored.
std::vector<SubjectRecord> oracle_view(const std::vector<LatentRecord>&);

// Records shaped for CSV export. The observed form carries exactly the
// columns of the observed schema (c2 dropped: the file format has no c2
// column outside the latent extension); the latent form attaches t_fail and
// c2 for every subject.
std::vector<SubjectRecord> export_records(const std::vector<LatentRecord>&,
                                          bool with_latent);

// Analysis design: the change-point column spec plus parameter names for the
// configured scenario and analysis.
struct AnalysisPlan {
  ChangePointSpec changepoints;
  std::vector<std::string> param_names;
};
AnalysisPlan analysis_plan(const ScenarioConfig&);

// Rewrites z1 into the design the analysis fits: squares x3 for the correct
// squared-covariate analysis, drops the omitted columns for misspecified ones.
std::vector<SubjectRecord> analysis_view(std::vector<SubjectRecord> records,
                                         const ScenarioConfig&);

// True coefficient vector of the analysis design when the analysis is correct.
Eigen::VectorXd correct_analysis_beta(const ScenarioConfig&);

}  // namespace linkedcox
