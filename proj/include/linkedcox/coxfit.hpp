#pragma once

#include "linkedcox/types.hpp"

#include <optional>
#include <vector>

namespace linkedcox {

// Weighted at-risk sums at time t, scaled by 1/n:
//   s0 = (1/n) sum_j w_j Y_j(t) exp(beta' x_j)
//   s1, s2 add x_j and x_j x_j' factors.
struct RiskSums {
  double s0 = 0.0;
  Eigen::VectorXd s1;
  Eigen::MatrixXd s2;
};

struct CoxFit {
  Eigen::VectorXd beta_hat;
  double loglik = 0.0;
  double score_norm = 0.0;      // sup-norm of the scaled score at beta_hat
  Eigen::MatrixXd hessian;      // A_n(beta_hat) = (1/n)-scaled observed information
  int iterations = 0;
  bool converged = false;
  std::optional<Eigen::MatrixXd> cov_model;
  std::optional<Eigen::MatrixXd> cov_robust;
  std::optional<Eigen::MatrixXd> cov_iplw;
};

struct NewtonOptions {
  Eigen::VectorXd init;  // empty means zeros
  double tol = 1e-9;     // sup-norm of the scaled score
  int max_iter = 50;
  int max_halvings = 20;
};

// Per unique event time: raw (unscaled) s0, the weighted covariate mean, and
// the total weight of events at that time. The building blocks of the score,
// the information and the influence residuals.
struct EventTimeStat {
  double time = 0.0;
  double s0_raw = 0.0;
  Eigen::VectorXd xbar;
  double event_wsum = 0.0;
};

// Weighted Cox partial likelihood over counting-process episodes with Breslow
// handling of ties. All averages are scaled by n_norm, the analysis sample
// size; weighted pipelines count their zero-weight subjects there even though
// such subjects contribute no rows.
class CoxPartialLikelihood {
 public:
  explicit CoxPartialLikelihood(std::vector<EpisodeRow> rows, int n_norm = 0);

  int n_params() const { return static_cast<int>(p_); }
  int n_norm() const { return n_norm_; }
  int n_subjects() const { return n_subjects_; }
  int n_events() const { return static_cast<int>(event_rows_.size()); }
  const std::vector<EpisodeRow>& rows() const { return rows_; }

  // Direct summation over episodes; zero sums when nobody is at risk at t.
  RiskSums risk_sums(const Eigen::VectorXd& beta, double t) const;

  double log_partial_likelihood(const Eigen::VectorXd& beta) const;
  Eigen::VectorXd score(const Eigen::VectorXd& beta) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& beta) const;

  struct Eval {
    double loglik = 0.0;
    Eigen::VectorXd score;
    Eigen::MatrixXd hessian;
  };
  Eval evaluate(const Eigen::VectorXd& beta) const;

  // Ascending in time; one entry per unique weighted event time.
  std::vector<EventTimeStat> event_stats(const Eigen::VectorXd& beta) const;

  // Maximizes the partial likelihood by Newton iteration with step-halving.
  // The log likelihood never decreases across accepted steps. Throws
  // EmptyRiskSet (no weighted events), SingularHessian, or NoConvergence.
  CoxFit newton_solve(const NewtonOptions& opts = {}) const;

 private:
  template <typename Visitor>
  void sweep(const Eigen::VectorXd& beta, Visitor&& visit) const;

  std::vector<EpisodeRow> rows_;
  Eigen::MatrixXd X_;  // packed design, one row per episode
  Eigen::Index p_ = 0;
  int n_norm_ = 0;
  int n_subjects_ = 0;
  std::vector<int> by_stop_desc_;
  std::vector<int> by_start_desc_;
  std::vector<int> event_rows_;  // weighted event rows, by stop descending
  std::vector<double> event_times_desc_;
};

}  // namespace linkedcox
