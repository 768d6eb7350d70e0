#include "linkedcox/coxfit.hpp"

#include "linkedcox/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace linkedcox {

CoxPartialLikelihood::CoxPartialLikelihood(std::vector<EpisodeRow> rows, int n_norm) {
  rows_.reserve(rows.size());
  for (auto& r : rows) {
    if (r.weight < 0.0) throw InvalidInput("episode weight must be nonnegative");
    if (r.weight == 0.0) continue;
    if (!(r.stop > r.start) || r.start < 0.0)
      throw InvalidInput("episode must satisfy 0 <= start < stop");
    rows_.push_back(std::move(r));
  }
  const std::size_t m = rows_.size();
  p_ = m ? rows_.front().x.size() : 0;
  X_.resize(m, p_);
  std::set<std::int64_t> ids;
  for (std::size_t j = 0; j < m; ++j) {
    if (rows_[j].x.size() != p_)
      throw InvalidInput("episode design columns must have one shared length");
    X_.row(j) = rows_[j].x;
    ids.insert(rows_[j].subject_id);
  }
  n_subjects_ = static_cast<int>(ids.size());
  n_norm_ = (n_norm > 0) ? n_norm : n_subjects_;
  if (n_norm_ < n_subjects_)
    throw InvalidInput("n_norm smaller than the number of distinct subjects");

  by_stop_desc_.resize(m);
  by_start_desc_.resize(m);
  for (std::size_t j = 0; j < m; ++j) by_stop_desc_[j] = by_start_desc_[j] = static_cast<int>(j);
  std::sort(by_stop_desc_.begin(), by_stop_desc_.end(),
            [&](int a, int b) { return rows_[a].stop > rows_[b].stop; });
  std::sort(by_start_desc_.begin(), by_start_desc_.end(),
            [&](int a, int b) { return rows_[a].start > rows_[b].start; });
  for (std::size_t j = 0; j < m; ++j)
    if (rows_[j].event) event_rows_.push_back(static_cast<int>(j));
  std::sort(event_rows_.begin(), event_rows_.end(),
            [&](int a, int b) { return rows_[a].stop > rows_[b].stop; });
  for (int j : event_rows_)
    if (event_times_desc_.empty() || rows_[j].stop < event_times_desc_.back())
      event_times_desc_.push_back(rows_[j].stop);
}

RiskSums CoxPartialLikelihood::risk_sums(const Eigen::VectorXd& beta, double t) const {
  if (beta.size() != p_) throw InvalidInput("beta has wrong length");
  RiskSums out;
  out.s1 = Eigen::VectorXd::Zero(p_);
  out.s2 = Eigen::MatrixXd::Zero(p_, p_);
  for (std::size_t j = 0; j < rows_.size(); ++j) {
    const EpisodeRow& r = rows_[j];
    if (!(r.start < t && t <= r.stop)) continue;
    const double rj = r.weight * std::exp(beta.dot(r.x));
    out.s0 += rj;
    out.s1 += rj * r.x;
    out.s2 += rj * r.x * r.x.transpose();
  }
  const double n = static_cast<double>(n_norm_);
  out.s0 /= n;
  out.s1 /= n;
  out.s2 /= n;
  return out;
}

// Decreasing-time sweep over unique weighted event times. Rows enter the risk
// set when stop >= t and leave when start >= t, so the active set at t is
// exactly {start < t <= stop}. `visit` sees, for each unique event time:
// (t, s0_raw, S1_raw, S2_raw, [event row indices at t]).
template <typename Visitor>
void CoxPartialLikelihood::sweep(const Eigen::VectorXd& beta, Visitor&& visit) const {
  if (beta.size() != p_) throw InvalidInput("beta has wrong length");
  if (event_rows_.empty()) throw EmptyRiskSet("no weighted events");

  const std::size_t m = rows_.size();
  Eigen::VectorXd r(m);
  for (std::size_t j = 0; j < m; ++j) r[j] = rows_[j].weight * std::exp(beta.dot(X_.row(j)));

  double S0 = 0.0;
  Eigen::VectorXd S1 = Eigen::VectorXd::Zero(p_);
  Eigen::MatrixXd S2 = Eigen::MatrixXd::Zero(p_, p_);
  std::size_t ins = 0, rem = 0, ev = 0;
  for (double t : event_times_desc_) {
    while (ins < m && rows_[by_stop_desc_[ins]].stop >= t) {
      const int j = by_stop_desc_[ins++];
      S0 += r[j];
      S1 += r[j] * X_.row(j).transpose();
      S2.selfadjointView<Eigen::Lower>().rankUpdate(X_.row(j).transpose(), r[j]);
    }
    while (rem < m && rows_[by_start_desc_[rem]].start >= t) {
      const int j = by_start_desc_[rem++];
      S0 -= r[j];
      S1 -= r[j] * X_.row(j).transpose();
      S2.selfadjointView<Eigen::Lower>().rankUpdate(X_.row(j).transpose(), -r[j]);
    }
    if (!(S0 > 0.0)) {
      std::ostringstream msg;
      msg << "empty risk set at weighted event time " << t;
      throw EmptyRiskSet(msg.str());
    }
    const std::size_t ev_begin = ev;
    while (ev < event_rows_.size() && rows_[event_rows_[ev]].stop == t) ++ev;
    visit(t, S0, S1, Eigen::MatrixXd(S2.selfadjointView<Eigen::Lower>()),
          &event_rows_[ev_begin], &event_rows_[ev]);
  }
}

CoxPartialLikelihood::Eval CoxPartialLikelihood::evaluate(const Eigen::VectorXd& beta) const {
  Eval out;
  out.score = Eigen::VectorXd::Zero(p_);
  out.hessian = Eigen::MatrixXd::Zero(p_, p_);
  const Eigen::VectorXd eta = X_ * beta;
  sweep(beta, [&](double, double s0, const Eigen::VectorXd& s1, const Eigen::MatrixXd& s2,
                  const int* ev_begin, const int* ev_end) {
    const Eigen::VectorXd xbar = s1 / s0;
    const Eigen::MatrixXd v = s2 / s0 - xbar * xbar.transpose();
    const double log_s0 = std::log(s0);
    for (const int* it = ev_begin; it != ev_end; ++it) {
      const int j = *it;
      const double w = rows_[j].weight;
      out.loglik += w * (eta[j] - log_s0);
      out.score += w * (X_.row(j).transpose() - xbar);
      out.hessian += w * v;
    }
  });
  const double n = static_cast<double>(n_norm_);
  out.loglik /= n;
  out.score /= n;
  out.hessian /= n;
  return out;
}

double CoxPartialLikelihood::log_partial_likelihood(const Eigen::VectorXd& beta) const {
  return evaluate(beta).loglik;
}

Eigen::VectorXd CoxPartialLikelihood::score(const Eigen::VectorXd& beta) const {
  return evaluate(beta).score;
}

Eigen::MatrixXd CoxPartialLikelihood::hessian(const Eigen::VectorXd& beta) const {
  return evaluate(beta).hessian;
}

std::vector<EventTimeStat> CoxPartialLikelihood::event_stats(const Eigen::VectorXd& beta) const {
  std::vector<EventTimeStat> stats;
  stats.reserve(event_times_desc_.size());
  sweep(beta, [&](double t, double s0, const Eigen::VectorXd& s1, const Eigen::MatrixXd&,
                  const int* ev_begin, const int* ev_end) {
    EventTimeStat st;
    st.time = t;
    st.s0_raw = s0;
    st.xbar = s1 / s0;
    for (const int* it = ev_begin; it != ev_end; ++it) st.event_wsum += rows_[*it].weight;
    stats.push_back(std::move(st));
  });
  std::reverse(stats.begin(), stats.end());
  return stats;
}

namespace {

// LDLT solve with a pivot-magnitude singularity guard.
Eigen::VectorXd solve_spd(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  const Eigen::VectorXd d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  if (!(dmax > 0.0) || d.cwiseAbs().minCoeff() <= 1e-12 * dmax)
    throw SingularHessian("observed information is singular");
  return ldlt.solve(b);
}

}  // namespace

CoxFit CoxPartialLikelihood::newton_solve(const NewtonOptions& opts) const {
  Eigen::VectorXd beta = opts.init.size() ? opts.init : Eigen::VectorXd::Zero(p_);
  if (beta.size() != p_) throw InvalidInput("init has wrong length");

  Eval ev = evaluate(beta);
  CoxFit fit;
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    if (ev.score.lpNorm<Eigen::Infinity>() <= opts.tol) {
      fit.converged = true;
      break;
    }
    const Eigen::VectorXd step = solve_spd(ev.hessian, ev.score);
    double lambda = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h, lambda *= 0.5) {
      const Eigen::VectorXd cand = beta + lambda * step;
      Eval evc = evaluate(cand);
      if (std::isfinite(evc.loglik) &&
          evc.loglik >= ev.loglik - 1e-13 * (1.0 + std::fabs(ev.loglik))) {
        beta = cand;
        ev = std::move(evc);
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw NoConvergence("Cox Newton step-halving could not improve the objective");
  }
  if (!fit.converged) throw NoConvergence("Cox Newton did not converge");

  // reject flat directions even when the score vanished identically
  (void)solve_spd(ev.hessian, ev.score);

  fit.beta_hat = beta;
  fit.loglik = ev.loglik;
  fit.score_norm = ev.score.lpNorm<Eigen::Infinity>();
  fit.hessian = ev.hessian;
  fit.iterations = iter;
  return fit;
}

}  // namespace linkedcox
