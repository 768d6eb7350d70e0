#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace linkedcox {

// Linkage classes for a trial cohort followed up through an external registry:
//   Class1: linked (l=1), full follow-up observed.
//   Class2: unlinked but the event happened inside the trial window (l=0, q=1).
//   Class3: unlinked and in-trial censored (l=0, q=0); t_obs and delta unobserved.
enum class LinkageClass { Class1, Class2, Class3 };

// One subject. Optional fields are missing when the linkage class hides them.
// q = 1 means the event occurred before the in-trial censoring time c1, so the
// outcome is known from trial data alone; c = max(c1, c2) is the censoring time
// for linked subjects.
struct SubjectRecord {
  std::int64_t id = 0;
  Eigen::VectorXd z1;              // baseline covariates (treatment included)
  double c1 = 0.0;                 // in-trial censoring time
  std::optional<double> c2;        // follow-up censoring time; missing when l=0
  bool q = false;                  // event-before-c1 indicator
  bool l = false;                  // linkage indicator
  std::optional<double> t_obs;     // min(T, C); missing for Class3
  std::optional<bool> delta;       // event indicator; missing for Class3
  std::optional<double> t_fail;    // latent failure time (simulation exports only)
  std::optional<bool> gap;         // gap indicator G (gap scenarios only)
  std::optional<double> gap_len;   // gap length U (gap scenarios only)
};

// A counting-process episode: the subject is at risk on (start, stop]; `event`
// fires at `stop` on the subject's final episode only. `x` already contains any
// change-point columns, so the hazard is exp(beta' x) throughout the interval.
struct EpisodeRow {
  std::int64_t subject_id = 0;
  double start = 0.0;
  double stop = 0.0;
  bool event = false;
  Eigen::VectorXd x;
  double weight = 1.0;
};

// Piecewise-constant treatment effect specification: one extra design column
// I(t > c) * z1[treatment_index] per change time. Change times must be strictly
// increasing and positive.
struct ChangePointSpec {
  std::vector<double> change_times;
  int treatment_index = 0;
};

}  // namespace linkedcox
