#include "linkedcox/estimators.hpp"

#include "linkedcox/dataset.hpp"
#include "linkedcox/errors.hpp"
#include "linkedcox/linkage.hpp"
#include "linkedcox/variance.hpp"

#include <cmath>
#include <sstream>

namespace linkedcox {

std::string method_name(Method m) {
  switch (m) {
    case Method::Oracle: return "oracle";
    case Method::CC: return "cc";
    case Method::CCPlus: return "ccplus";
    case Method::NLAC: return "nlac";
    case Method::IPLW: return "iplw";
  }
  throw InvalidInput("unknown method");
}

Method method_from_name(const std::string& name) {
  if (name == "oracle") return Method::Oracle;
  if (name == "cc") return Method::CC;
  if (name == "ccplus") return Method::CCPlus;
  if (name == "nlac") return Method::NLAC;
  if (name == "iplw") return Method::IPLW;
  throw InvalidInput("unknown method '" + name + "'");
}

namespace {

void finish_report(FitReport& rep, const Eigen::MatrixXd& cov) {
  const Eigen::VectorXd& b = rep.cox.beta_hat;
  rep.se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  rep.ci_lo = b - kCiMultiplier * rep.se;
  rep.ci_hi = b + kCiMultiplier * rep.se;
  rep.hr = b.array().exp();
  rep.hr_lo = rep.ci_lo.array().exp();
  rep.hr_hi = rep.ci_hi.array().exp();
}

// Unit-weight fit on a subject subset, normalized by the subset size.
FitReport unweighted_fit(Method m, const std::vector<SubjectRecord>& included,
                         const FitOptions& opts) {
  FitReport rep;
  rep.method = m;
  rep.n_used = static_cast<int>(included.size());
  CoxPartialLikelihood pl(split_episodes(included, opts.changepoints), rep.n_used);
  rep.cox = pl.newton_solve(opts.newton);
  const InfluenceSet infl = influence_residuals(pl, rep.cox.beta_hat);
  rep.cox.cov_model = cov_model(rep.cox, rep.n_used);
  rep.cox.cov_robust = cov_robust(rep.cox, infl, rep.n_used);
  finish_report(rep, *rep.cox.cov_robust);
  return rep;
}

}  // namespace

FitReport fit_oracle(const std::vector<SubjectRecord>& subjects, const FitOptions& opts) {
  for (const auto& s : subjects)
    if (!s.t_obs || !s.delta)
      throw InvalidInput("fit_oracle requires t_obs and delta on every subject");
  return unweighted_fit(Method::Oracle, subjects, opts);
}

FitReport fit_cc(const std::vector<SubjectRecord>& subjects, const FitOptions& opts) {
  std::vector<SubjectRecord> included;
  for (const auto& s : subjects)
    if (s.l) included.push_back(s);
  if (included.empty()) throw InvalidInput("fit_cc: no linked subjects");
  return unweighted_fit(Method::CC, included, opts);
}

FitReport fit_ccplus(const std::vector<SubjectRecord>& subjects, const FitOptions& opts) {
  std::vector<SubjectRecord> included;
  for (const auto& s : subjects)
    if (s.l || s.q) included.push_back(s);
  if (included.empty()) throw InvalidInput("fit_ccplus: no subjects with l + q > 0");
  return unweighted_fit(Method::CCPlus, included, opts);
}

FitReport fit_nlac(const std::vector<SubjectRecord>& subjects, const FitOptions& opts) {
  std::vector<SubjectRecord> modified = subjects;
  int n_censored = 0;
  for (auto& s : modified)
    if (!s.l && !s.q) {
      s.t_obs = s.c1;
      s.delta = false;
      ++n_censored;
    }
  FitReport rep = unweighted_fit(Method::NLAC, modified, opts);
  if (n_censored > 0) {
    std::ostringstream msg;
    msg << n_censored << " unlinked censored subjects right-censored at c1";
    rep.diagnostics.push_back(msg.str());
  }
  return rep;
}

FitReport fit_iplw(const std::vector<SubjectRecord>& subjects, const FitOptions& opts) {
  const int n_total = static_cast<int>(subjects.size());
  if (n_total == 0) throw InvalidInput("fit_iplw: no subjects");

  bool any_unlinked_q0 = false;
  for (const auto& s : subjects)
    if (!s.q && !s.l) any_unlinked_q0 = true;

  FitReport rep;
  rep.method = Method::IPLW;

  std::optional<LinkageFit> linkage;
  Eigen::VectorXd w(n_total);
  if (any_unlinked_q0) {
    linkage = fit_linkage(subjects, opts.linkage_covariates);
    WeightVector wv =
        compute_weights(subjects, *linkage, opts.positivity_floor, opts.truncate_weights);
    w = std::move(wv.w);
    for (auto& msg : wv.warnings) rep.diagnostics.push_back(std::move(msg));
    std::ostringstream msg;
    msg << "linkage model converged in " << linkage->iterations
        << " iterations; min fitted probability "
        << linkage->pi_hat.minCoeff();
    rep.diagnostics.push_back(msg.str());
  } else {
    w = Eigen::VectorXd::Ones(n_total);
    rep.diagnostics.push_back(
        "every q=0 subject is linked; linkage model skipped, unit weights used");
  }

  std::vector<SubjectRecord> included;
  std::vector<double> w_inc;
  for (int i = 0; i < n_total; ++i)
    if (w[i] > 0.0) {
      included.push_back(subjects[i]);
      w_inc.push_back(w[i]);
    }
  if (included.empty()) throw InvalidInput("fit_iplw: no positive-weight subjects");
  rep.n_used = static_cast<int>(included.size());

  CoxPartialLikelihood pl(split_episodes(included, opts.changepoints, w_inc), n_total);
  rep.cox = pl.newton_solve(opts.newton);
  InfluenceSet infl = influence_residuals(pl, rep.cox.beta_hat);
  rep.cox.cov_model = cov_model(rep.cox, n_total);
  rep.cox.cov_iplw =
      cov_iplw(rep.cox, infl, linkage ? &*linkage : nullptr, included, n_total);
  {
    double wmax = 0.0;
    for (double v : w_inc) wmax = std::max(wmax, v);
    std::ostringstream msg;
    msg << "weights: " << rep.n_used << " of " << n_total << " subjects included, max weight "
        << wmax;
    rep.diagnostics.push_back(msg.str());
  }
  finish_report(rep, *rep.cox.cov_iplw);
  return rep;
}

FitReport fit_method(Method m, const std::vector<SubjectRecord>& subjects,
                     const FitOptions& opts) {
  switch (m) {
    case Method::Oracle: return fit_oracle(subjects, opts);
    case Method::CC: return fit_cc(subjects, opts);
    case Method::CCPlus: return fit_ccplus(subjects, opts);
    case Method::NLAC: return fit_nlac(subjects, opts);
    case Method::IPLW: return fit_iplw(subjects, opts);
  }
  throw InvalidInput("unknown method");
}

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

nlohmann::json mat_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

nlohmann::json fitreport_to_json(const FitReport& rep) {
  nlohmann::json cox{
      {"beta_hat", vec_json(rep.cox.beta_hat)},
      {"loglik", rep.cox.loglik},
      {"score_norm", rep.cox.score_norm},
      {"hessian", mat_json(rep.cox.hessian)},
      {"iterations", rep.cox.iterations},
      {"converged", rep.cox.converged},
      {"cov_model", rep.cox.cov_model ? mat_json(*rep.cox.cov_model) : nlohmann::json()},
      {"cov_robust", rep.cox.cov_robust ? mat_json(*rep.cox.cov_robust) : nlohmann::json()},
      {"cov_iplw", rep.cox.cov_iplw ? mat_json(*rep.cox.cov_iplw) : nlohmann::json()},
  };
  return nlohmann::json{
      {"method", method_name(rep.method)},
      {"cox", std::move(cox)},
      {"se", vec_json(rep.se)},
      {"ci_lo", vec_json(rep.ci_lo)},
      {"ci_hi", vec_json(rep.ci_hi)},
      {"hr", vec_json(rep.hr)},
      {"hr_lo", vec_json(rep.hr_lo)},
      {"hr_hi", vec_json(rep.hr_hi)},
      {"n_used", rep.n_used},
      {"diagnostics", rep.diagnostics},
  };
}

}  // namespace linkedcox
