#include "linkedcox/dataset.hpp"

#include "linkedcox/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace linkedcox {

LinkageClass classify(const SubjectRecord& r) {
  if (r.l) return LinkageClass::Class1;
  if (r.q) return LinkageClass::Class2;
  return LinkageClass::Class3;
}

void validate(const SubjectRecord& r) {
  if (!(r.c1 > 0.0)) throw InvalidInput("c1 must be positive");
  if (r.l && (!r.t_obs || !r.delta))
    throw InvalidInput("l=1 requires t_obs and delta");
  if (r.q) {
    if (!r.t_obs || !r.delta) throw InvalidInput("q=1 requires t_obs and delta");
    if (!*r.delta) throw InvalidInput("q=1 requires delta=1");
    if (*r.t_obs > r.c1) throw InvalidInput("q=1 requires t_obs <= c1");
  }
  const bool class3 = !r.l && !r.q;
  const bool masked = !r.t_obs && !r.delta;
  if (class3 != masked)
    throw InvalidInput("t_obs and delta must be missing exactly when l=0 and q=0");
  if (r.t_obs && !(*r.t_obs > 0.0)) throw InvalidInput("t_obs must be positive");
  if (r.c2) {
    if (!(*r.c2 >= r.c1)) throw InvalidInput("c2 must be >= c1");
    if (r.t_obs && *r.t_obs > std::max(r.c1, *r.c2))
      throw InvalidInput("t_obs must not exceed max(c1, c2)");
  }
  if (r.gap_len && *r.gap_len < 0.0) throw InvalidInput("gap_len must be nonnegative");
  if (r.t_fail && !(*r.t_fail > 0.0)) throw InvalidInput("t_fail must be positive");
}

static void check_spec(const ChangePointSpec& spec, Eigen::Index p0) {
  for (std::size_t k = 0; k < spec.change_times.size(); ++k) {
    if (!(spec.change_times[k] > 0.0))
      throw InvalidInput("change times must be positive");
    if (k > 0 && !(spec.change_times[k] > spec.change_times[k - 1]))
      throw InvalidInput("change times must be strictly increasing");
  }
  if (!spec.change_times.empty() &&
      (spec.treatment_index < 0 || spec.treatment_index >= p0))
    throw InvalidInput("treatment_index out of range");
}

std::vector<EpisodeRow> split_episodes(const std::vector<SubjectRecord>& subjects,
                                       const ChangePointSpec& spec,
                                       const std::vector<double>& weights) {
  if (weights.size() != subjects.size())
    throw InvalidInput("weights must align with subjects");
  const Eigen::Index p0 = subjects.empty() ? 0 : subjects.front().z1.size();
  check_spec(spec, p0);
  const int m = static_cast<int>(spec.change_times.size());

  std::vector<EpisodeRow> rows;
  rows.reserve(subjects.size() + subjects.size() / 2);
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const double w = weights[i];
    if (w < 0.0) throw InvalidInput("weights must be nonnegative");
    if (w == 0.0) continue;
    const SubjectRecord& s = subjects[i];
    if (s.z1.size() != p0) throw InvalidInput("all subjects must share one z1 length");
    if (!s.t_obs || !s.delta)
      throw InvalidInput("included subject lacks t_obs or delta");
    const double t = *s.t_obs;
    const double treat = (m > 0) ? s.z1[spec.treatment_index] : 0.0;

    double prev = 0.0;
    int crossed = 0;
    while (crossed < m && spec.change_times[crossed] < t) ++crossed;
    // rows (prev, c_k] for each crossed change time, then (prev, t] terminal
    for (int k = 0; k <= crossed; ++k) {
      const bool terminal = (k == crossed);
      EpisodeRow row;
      row.subject_id = s.id;
      row.start = prev;
      row.stop = terminal ? t : spec.change_times[k];
      row.event = terminal && *s.delta;
      row.weight = w;
      row.x = Eigen::VectorXd::Zero(p0 + m);
      row.x.head(p0) = s.z1;
      for (int j = 0; j < k; ++j) row.x[p0 + j] = treat;  // I(t > c_j) active
      rows.push_back(std::move(row));
      prev = terminal ? prev : spec.change_times[k];
      if (terminal) break;
    }
  }
  return rows;
}

std::vector<EpisodeRow> split_episodes(const std::vector<SubjectRecord>& subjects,
                                       const ChangePointSpec& spec) {
  return split_episodes(subjects, spec, std::vector<double>(subjects.size(), 1.0));
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const char* what, long row) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e)
    throw ParseError(std::string("bad numeric value for ") + what + ": '" + s + "'", row);
  return v;
}

bool parse_flag(const std::string& s, const char* what, long row) {
  if (s == "0") return false;
  if (s == "1") return true;
  throw ParseError(std::string(what) + " must be 0 or 1, got '" + s + "'", row);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<SubjectRecord> load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file: '" + path + "'");
  const std::vector<std::string> header = split_fields(line);

  const std::vector<std::string> required = {"id", "l", "q", "t_obs", "delta", "c1"};
  if (header.size() < required.size() + 1)
    throw ParseError("header must contain id,l,q,t_obs,delta,c1,z1_1,...");
  for (std::size_t k = 0; k < required.size(); ++k)
    if (header[k] != required[k])
      throw ParseError("expected column '" + required[k] + "' at position " +
                       std::to_string(k + 1) + ", found '" + header[k] + "'");

  std::size_t pos = required.size();
  int p = 0;
  while (pos < header.size() && header[pos] == "z1_" + std::to_string(p + 1)) {
    ++p;
    ++pos;
  }
  if (p == 0) throw ParseError("at least one z1_* column is required");

  int gap_col = -1, gap_len_col = -1, t_fail_col = -1, c2_col = -1;
  for (; pos < header.size(); ++pos) {
    const std::string& h = header[pos];
    int* slot = nullptr;
    if (h == "gap") slot = &gap_col;
    else if (h == "gap_len") slot = &gap_len_col;
    else if (h == "t_fail") slot = &t_fail_col;
    else if (h == "c2") slot = &c2_col;
    if (!slot) throw ParseError("unknown column '" + h + "'");
    if (*slot >= 0) throw ParseError("duplicate column '" + h + "'");
    *slot = static_cast<int>(pos);
  }

  std::vector<SubjectRecord> records;
  long row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_fields(line);
    if (f.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                       std::to_string(f.size()), row);
    SubjectRecord r;
    r.id = static_cast<std::int64_t>(parse_double(f[0], "id", row));
    r.l = parse_flag(f[1], "l", row);
    r.q = parse_flag(f[2], "q", row);
    if (!f[3].empty()) r.t_obs = parse_double(f[3], "t_obs", row);
    if (!f[4].empty()) r.delta = parse_flag(f[4], "delta", row);
    if (f[5].empty()) throw ParseError("c1 is required", row);
    r.c1 = parse_double(f[5], "c1", row);
    r.z1 = Eigen::VectorXd(p);
    for (int j = 0; j < p; ++j) {
      const std::string& cell = f[required.size() + j];
      if (cell.empty()) throw ParseError("z1_" + std::to_string(j + 1) + " is required", row);
      r.z1[j] = parse_double(cell, "z1", row);
    }
    if (gap_col >= 0 && !f[gap_col].empty()) r.gap = parse_flag(f[gap_col], "gap", row);
    if (gap_len_col >= 0 && !f[gap_len_col].empty())
      r.gap_len = parse_double(f[gap_len_col], "gap_len", row);
    if (t_fail_col >= 0 && !f[t_fail_col].empty())
      r.t_fail = parse_double(f[t_fail_col], "t_fail", row);
    if (c2_col >= 0 && !f[c2_col].empty()) r.c2 = parse_double(f[c2_col], "c2", row);

    try {
      validate(r);
    } catch (const InvalidInput& e) {
      throw ParseError(e.what(), row);
    }
    records.push_back(std::move(r));
  }
  return records;
}

void save_csv(const std::vector<SubjectRecord>& records, const std::string& path,
              bool with_latent) {
  const int p = records.empty() ? 1 : static_cast<int>(records.front().z1.size());
  bool any_gap = false;
  for (const auto& r : records) {
    validate(r);
    if (r.gap || r.gap_len) any_gap = true;
  }

  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << "id,l,q,t_obs,delta,c1";
  for (int j = 1; j <= p; ++j) out << ",z1_" << j;
  if (any_gap) out << ",gap,gap_len";
  if (with_latent) out << ",t_fail,c2";
  out << "\n";

  for (const auto& r : records) {
    out << r.id << ',' << (r.l ? 1 : 0) << ',' << (r.q ? 1 : 0) << ',';
    if (r.t_obs) out << fmt_double(*r.t_obs);
    out << ',';
    if (r.delta) out << (*r.delta ? 1 : 0);
    out << ',' << fmt_double(r.c1);
    for (int j = 0; j < p; ++j) out << ',' << fmt_double(r.z1[j]);
    if (any_gap) {
      out << ',';
      if (r.gap) out << (*r.gap ? 1 : 0);
      out << ',';
      if (r.gap_len) out << fmt_double(*r.gap_len);
    }
    if (with_latent) {
      out << ',';
      if (r.t_fail) out << fmt_double(*r.t_fail);
      out << ',';
      if (r.c2) out << fmt_double(*r.c2);
    }
    out << "\n";
  }
}

}  // namespace linkedcox
