#pragma once

#include "linkedcox/types.hpp"

#include <string>
#include <vector>

namespace linkedcox {

LinkageClass classify(const SubjectRecord& r);

// Checks the record-level invariants:
//   l=1            -> t_obs and delta present
//   q=1            -> delta = 1 and t_obs <= c1
//   l=0 and q=0   <-> t_obs and delta both missing
//   c2 present     -> c2 >= c1 > 0 and t_obs <= max(c1, c2)
// Throws InvalidInput naming the first violated rule.
void validate(const SubjectRecord& r);

// Splits subjects into counting-process episodes on (start, stop]. One row per
// change time strictly below t_obs plus a terminal row carrying the event.
// Design columns are z1 followed by one column I(t > c) * z1[treatment_index]
// per change time. `weights` must align with `subjects`; zero-weight subjects
// produce no rows. A missing t_obs or delta on a positive-weight subject is an
// InvalidInput error.
std::vector<EpisodeRow> split_episodes(const std::vector<SubjectRecord>& subjects,
                                       const ChangePointSpec& spec,
                                       const std::vector<double>& weights);

// Unit-weight convenience overload.
std::vector<EpisodeRow> split_episodes(const std::vector<SubjectRecord>& subjects,
                                       const ChangePointSpec& spec);

// CSV schema (header required):
//   id,l,q,t_obs,delta,c1,z1_1,...,z1_p[,gap,gap_len][,t_fail,c2]
// Missing values are empty cells. Every row is validated; violations raise
// ParseError with the offending 1-based data row.
std::vector<SubjectRecord> load_csv(const std::string& path);

// Writes the schema above. The gap and latent column groups are emitted when
// requested; with_latent also emits t_fail and c2 for every subject (the
// simulation's unmasked view), which is what `fit --method oracle` consumes.
void save_csv(const std::vector<SubjectRecord>& records, const std::string& path,
              bool with_latent = false);

}  // namespace linkedcox
