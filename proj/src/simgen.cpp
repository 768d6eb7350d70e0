#include "linkedcox/simgen.hpp"

#include "linkedcox/errors.hpp"
#include "linkedcox/rng.hpp"

#include <algorithm>
#include <cmath>

namespace linkedcox {

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::TdChangePoint: return "td-changepoint";
    case Scenario::MotivatingSquared: return "motivating";
    case Scenario::GapScenario: return "gap";
  }
  throw InvalidInput("unknown scenario");
}

Scenario scenario_from_name(const std::string& s) {
  if (s == "td-changepoint") return Scenario::TdChangePoint;
  if (s == "motivating") return Scenario::MotivatingSquared;
  if (s == "gap") return Scenario::GapScenario;
  throw InvalidInput("unknown scenario '" + s + "'");
}

std::string mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::LCAR: return "lcar";
    case Mechanism::CLAR: return "clar";
    case Mechanism::LNAR_T: return "lnar-t";
    case Mechanism::LNAR_C2: return "lnar-c2";
  }
  throw InvalidInput("unknown mechanism");
}

Mechanism mechanism_from_name(const std::string& s) {
  if (s == "lcar") return Mechanism::LCAR;
  if (s == "clar") return Mechanism::CLAR;
  if (s == "lnar-t") return Mechanism::LNAR_T;
  if (s == "lnar-c2") return Mechanism::LNAR_C2;
  throw InvalidInput("unknown mechanism '" + s + "'");
}

std::string analysis_name(Analysis a) {
  return a == Analysis::Correct ? "correct" : "misspecified";
}

Analysis analysis_from_name(const std::string& s) {
  if (s == "correct") return Analysis::Correct;
  if (s == "misspecified") return Analysis::Misspecified;
  throw InvalidInput("unknown analysis '" + s + "'");
}

std::string remedy_name(GapRemedy r) {
  switch (r) {
    case GapRemedy::On: return "on";
    case GapRemedy::Off: return "off";
    case GapRemedy::Naive: return "naive";
  }
  throw InvalidInput("unknown remedy");
}

GapRemedy remedy_from_name(const std::string& s) {
  if (s == "on") return GapRemedy::On;
  if (s == "off") return GapRemedy::Off;
  if (s == "naive") return GapRemedy::Naive;
  throw InvalidInput("unknown remedy '" + s + "'");
}

ScenarioConfig resolve(ScenarioConfig cfg) {
  if (cfg.n <= 0) throw InvalidInput("n must be positive");
  switch (cfg.scenario) {
    case Scenario::TdChangePoint:
      if (cfg.beta_true.size() == 0) {
        cfg.beta_true = Eigen::VectorXd(3);
        cfg.beta_true << -std::log(4.0), std::log(1.5), 0.5;
      }
      if (cfg.baseline_hazard == 0.0) cfg.baseline_hazard = 0.06;
      if (cfg.tau1 == 0.0) cfg.tau1 = 5.0;
      if (cfg.tau2 == 0.0) cfg.tau2 = 16.0;
      if (cfg.lcar_p == 0.0) cfg.lcar_p = 0.5;
      break;
    case Scenario::MotivatingSquared:
      if (cfg.beta_true.size() == 0) {
        cfg.beta_true = Eigen::VectorXd(3);
        cfg.beta_true << -std::log(2.0), std::log(2.0), 0.2;
      }
      if (cfg.baseline_hazard == 0.0) cfg.baseline_hazard = 0.05;
      if (cfg.tau1 == 0.0) cfg.tau1 = 3.0;
      if (cfg.tau2 == 0.0) cfg.tau2 = 16.0;
      if (cfg.lcar_p == 0.0) cfg.lcar_p = 0.5;
      break;
    case Scenario::GapScenario:
      if (cfg.beta_true.size() == 0) {
        cfg.beta_true = Eigen::VectorXd(3);
        cfg.beta_true << -std::log(2.0), std::log(2.0), 0.2;
      }
      if (cfg.baseline_hazard == 0.0) cfg.baseline_hazard = 0.15;
      if (cfg.tau1 == 0.0) cfg.tau1 = 3.5;
      if (cfg.tau2 == 0.0) cfg.tau2 = 16.0;
      if (cfg.lcar_p == 0.0) cfg.lcar_p = 0.4;
      break;
  }
  if (cfg.beta_true.size() != 3) throw InvalidInput("beta_true must have 3 components");
  if (!(cfg.tau2 > cfg.tau1 && cfg.tau1 > 0.0))
    throw InvalidInput("need 0 < tau1 < tau2");
  return cfg;
}

double piecewise_exp_inverse(double e, double r0, double r1, double t_change) {
  if (!(r0 > 0.0) || !(r1 > 0.0) || !(t_change > 0.0))
    throw InvalidInput("piecewise_exp_inverse needs positive rates and change time");
  const double cum_at_change = r0 * t_change;
  return (e < cum_at_change) ? e / r0 : t_change + (e - cum_at_change) / r1;
}

namespace {

CounterRng sub_rng(std::uint64_t seed, std::int64_t i, Var v) {
  return CounterRng(derive(derive(seed, static_cast<std::uint64_t>(i)), v));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// fill outcome fields from latent times under censoring time c
void set_outcome(LatentRecord& rec, double c) {
  rec.t_obs_full = std::min(rec.t_fail, c);
  rec.delta_full = rec.t_fail <= c;
  rec.obs.t_obs = rec.t_obs_full;
  rec.obs.delta = rec.delta_full;
}

}  // namespace

std::vector<LatentRecord> gen_td_changepoint(const ScenarioConfig& raw) {
  const ScenarioConfig cfg = resolve(raw);
  if (cfg.scenario != Scenario::TdChangePoint)
    throw InvalidInput("config is for a different scenario");
  std::vector<LatentRecord> out(cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    LatentRecord& rec = out[i];
    const double x1 = sub_rng(cfg.seed, i, Var::X1).bernoulli(0.5) ? 1.0 : 0.0;
    const double x2 = sub_rng(cfg.seed, i, Var::X2).normal(1.0, 1.0);

    const double r0 =
        cfg.baseline_hazard * std::exp(cfg.beta_true[0] * x1 + cfg.beta_true[1] * x2);
    const double r1 = r0 * std::exp(cfg.beta_true[2] * x1);
    const double e = sub_rng(cfg.seed, i, Var::TFail).exponential(1.0);
    rec.t_fail = piecewise_exp_inverse(e, r0, r1, cfg.tau1);

    const double c1 =
        std::min(sub_rng(cfg.seed, i, Var::C1).exponential(0.01 * x1 + 0.03), cfg.tau1);
    rec.c2 = std::min(c1 + sub_rng(cfg.seed, i, Var::C2).exponential(0.05 * x1 + 0.03),
                      cfg.tau2);

    rec.obs.id = i + 1;
    rec.obs.z1 = Eigen::VectorXd(2);
    rec.obs.z1 << x1, x2;
    rec.obs.c1 = c1;
    rec.obs.c2 = rec.c2;
    rec.obs.q = rec.t_fail <= c1;
    rec.follow_start = c1;
    set_outcome(rec, std::max(c1, rec.c2));
  }
  return out;
}

std::vector<LatentRecord> gen_motivating(const ScenarioConfig& raw) {
  const ScenarioConfig cfg = resolve(raw);
  if (cfg.scenario != Scenario::MotivatingSquared)
    throw InvalidInput("config is for a different scenario");
  std::vector<LatentRecord> out(cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    LatentRecord& rec = out[i];
    const double x1 = sub_rng(cfg.seed, i, Var::X1).bernoulli(0.5) ? 1.0 : 0.0;
    const double x2 = sub_rng(cfg.seed, i, Var::X2).normal(-1.0, 1.0);
    const double x3 = sub_rng(cfg.seed, i, Var::X3).normal(x2, 2.0);

    const double rate =
        cfg.baseline_hazard * std::exp(cfg.beta_true[0] * x1 + cfg.beta_true[1] * x2 +
                                       cfg.beta_true[2] * x3 * x3);
    rec.t_fail = sub_rng(cfg.seed, i, Var::TFail).exponential(rate);

    const double c1 =
        std::min(sub_rng(cfg.seed, i, Var::C1).exponential(0.1 * x1 + 0.05), cfg.tau1);
    rec.c2 = std::min(c1 + sub_rng(cfg.seed, i, Var::C2).exponential(0.8 * x1 + 0.03),
                      cfg.tau2);

    rec.obs.id = i + 1;
    rec.obs.z1 = Eigen::VectorXd(3);
    rec.obs.z1 << x1, x2, x3;
    rec.obs.c1 = c1;
    rec.obs.c2 = rec.c2;
    rec.obs.q = rec.t_fail <= c1;
    rec.follow_start = c1;
    set_outcome(rec, std::max(c1, rec.c2));
  }
  return out;
}

std::vector<LatentRecord> gen_gap_scenario(const ScenarioConfig& raw) {
  const ScenarioConfig cfg = resolve(raw);
  if (cfg.scenario != Scenario::GapScenario)
    throw InvalidInput("config is for a different scenario");
  std::vector<LatentRecord> out(cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    LatentRecord& rec = out[i];
    const double x1 = sub_rng(cfg.seed, i, Var::X1).bernoulli(0.5) ? 1.0 : 0.0;
    const double x2 = sub_rng(cfg.seed, i, Var::X2).normal(-1.0, 1.0);
    const double x3 = sub_rng(cfg.seed, i, Var::X3).normal(1.0, 2.0);

    const double rate =
        cfg.baseline_hazard *
        std::exp(cfg.beta_true[0] * x1 + cfg.beta_true[1] * x2 + cfg.beta_true[2] * x3);
    rec.t_fail = sub_rng(cfg.seed, i, Var::TFail).exponential(rate);

    const double c1 = sub_rng(cfg.seed, i, Var::C1).uniform_pos() * cfg.tau1;
    const bool g = sub_rng(cfg.seed, i, Var::Gap).bernoulli(0.5);
    const double ulen = 1.0 + sub_rng(cfg.seed, i, Var::GapLen).uniform();
    rec.follow_start = c1 + (g ? ulen : 0.0);
    rec.c2 = std::min(
        rec.follow_start + sub_rng(cfg.seed, i, Var::C2).exponential(0.8 * x1 + 0.03),
        cfg.tau2);

    rec.obs.id = i + 1;
    rec.obs.z1 = Eigen::VectorXd(3);
    rec.obs.z1 << x1, x2, x3;
    rec.obs.c1 = c1;
    rec.obs.c2 = rec.c2;
    rec.obs.q = rec.t_fail <= c1;
    rec.obs.gap = g;
    rec.obs.gap_len = ulen;
    rec.interval_censored = g && c1 < rec.t_fail && rec.t_fail < rec.follow_start;
    set_outcome(rec, std::max(c1, rec.c2));
  }
  return out;
}

std::vector<LatentRecord> gen_scenario(const ScenarioConfig& raw) {
  const ScenarioConfig cfg = resolve(raw);
  switch (cfg.scenario) {
    case Scenario::TdChangePoint: return gen_td_changepoint(cfg);
    case Scenario::MotivatingSquared: return gen_motivating(cfg);
    case Scenario::GapScenario: {
      std::vector<LatentRecord> latents = gen_gap_scenario(cfg);
      if (cfg.remedy == GapRemedy::On) remedy_transform(latents);
      else if (cfg.remedy == GapRemedy::Naive) naive_gap_transform(latents);
      return latents;
    }
  }
  throw InvalidInput("unknown scenario");
}

void remedy_transform(std::vector<LatentRecord>& latents) {
  for (LatentRecord& rec : latents) {
    if (rec.obs.gap && *rec.obs.gap) {
      set_outcome(rec, rec.obs.c1);
      rec.interval_censored = false;
    }
  }
}

void naive_gap_transform(std::vector<LatentRecord>& latents) {
  for (LatentRecord& rec : latents) {
    if (rec.interval_censored) {
      rec.t_obs_full = rec.obs.c1;
      rec.delta_full = false;
      rec.obs.t_obs = rec.t_obs_full;
      rec.obs.delta = false;
    } else {
      set_outcome(rec, std::max(rec.obs.c1, rec.c2));
    }
  }
}

void gen_linkage(std::vector<LatentRecord>& latents, const ScenarioConfig& raw) {
  const ScenarioConfig cfg = resolve(raw);
  for (std::size_t i = 0; i < latents.size(); ++i) {
    LatentRecord& rec = latents[i];
    const double x1 = rec.obs.z1[0];
    const double x2 = rec.obs.z1[1];
    const double d = rec.delta_full ? 1.0 : 0.0;
    double p;
    switch (cfg.mechanism) {
      case Mechanism::LCAR:
        p = cfg.lcar_p;
        break;
      case Mechanism::CLAR:
        p = rec.obs.q ? 0.5 : sigmoid(-0.25 + 0.5 * x1 + 0.5 * x2);
        break;
      case Mechanism::LNAR_T:
        p = rec.obs.q ? 0.5
                      : sigmoid(-0.25 + 0.5 * x1 + 0.5 * x2 - 0.01 * rec.t_obs_full -
                                0.01 * d);
        break;
      case Mechanism::LNAR_C2:
        p = rec.obs.q ? 0.5
                      : sigmoid(-0.25 + 0.5 * x1 + 0.5 * x2 - 0.1 * rec.c2 - 0.1 * d);
        break;
      default:
        throw InvalidInput("unknown mechanism");
    }
    rec.obs.l = sub_rng(cfg.seed, static_cast<std::int64_t>(i), Var::Link).bernoulli(p);
    if (!rec.obs.l) {
      rec.obs.c2.reset();
      if (!rec.obs.q) {
        rec.obs.t_obs.reset();
        rec.obs.delta.reset();
      }
    }
  }
}

std::vector<SubjectRecord> observed_view(const std::vector<LatentRecord>& latents) {
  std::vector<SubjectRecord> out;
  out.reserve(latents.size());
  for (const LatentRecord& rec : latents) out.push_back(rec.obs);
  return out;
}

std::vector<SubjectRecord> oracle_view(const std::vector<LatentRecord>& latents) {
  std::vector<SubjectRecord> out;
  out.reserve(latents.size());
  for (const LatentRecord& rec : latents) {
    SubjectRecord r = rec.obs;
    r.l = true;
    r.c2 = rec.c2;
    r.t_obs = rec.t_obs_full;
    r.delta = rec.delta_full;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SubjectRecord> export_records(const std::vector<LatentRecord>& latents,
                                          bool with_latent) {
  std::vector<SubjectRecord> out = observed_view(latents);
  if (with_latent) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i].t_fail = latents[i].t_fail;
      out[i].c2 = latents[i].c2;
    }
  } else {
    // the observed schema has no c2 column; keep the export round-trippable
    for (SubjectRecord& r : out) r.c2.reset();
  }
  return out;
}

AnalysisPlan analysis_plan(const ScenarioConfig& raw) {
  const ScenarioConfig cfg = resolve(raw);
  AnalysisPlan plan;
  const bool td_correct =
      cfg.scenario == Scenario::TdChangePoint && cfg.analysis == Analysis::Correct;
  if (td_correct) {
    plan.changepoints.change_times = {cfg.tau1};
    plan.changepoints.treatment_index = 0;
  }
  int p = 3;
  if (cfg.scenario == Scenario::TdChangePoint)
    p = td_correct ? 3 : 2;
  else if (cfg.scenario == Scenario::GapScenario && cfg.analysis == Analysis::Misspecified)
    p = 2;
  for (int j = 1; j <= p; ++j) plan.param_names.push_back("beta" + std::to_string(j));
  return plan;
}

std::vector<SubjectRecord> analysis_view(std::vector<SubjectRecord> records,
                                         const ScenarioConfig& raw) {
  const ScenarioConfig cfg = resolve(raw);
  if (cfg.scenario == Scenario::MotivatingSquared && cfg.analysis == Analysis::Correct) {
    for (auto& r : records) r.z1[2] = r.z1[2] * r.z1[2];
  } else if (cfg.scenario == Scenario::GapScenario &&
             cfg.analysis == Analysis::Misspecified) {
    for (auto& r : records) r.z1 = r.z1.head(2).eval();
  }
  // td-changepoint: misspecified simply omits the change-point column, which
  // analysis_plan already encodes; z1 itself is unchanged.
  return records;
}

Eigen::VectorXd correct_analysis_beta(const ScenarioConfig& raw) {
  const ScenarioConfig cfg = resolve(raw);
  if (cfg.analysis != Analysis::Correct)
    throw InvalidInput("no closed-form target for a misspecified analysis");
  return cfg.beta_true;
}

}  // namespace linkedcox
