#include "linkedcox/variance.hpp"

#include "linkedcox/errors.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace linkedcox {

InfluenceSet influence_residuals(const CoxPartialLikelihood& pl,
                                 const Eigen::VectorXd& beta_hat) {
  const std::vector<EventTimeStat> stats = pl.event_stats(beta_hat);
  const int K = static_cast<int>(stats.size());
  const int p = pl.n_params();

  std::vector<double> times(K);
  // prefix sums of the Breslow increments a_k = event_wsum_k / s0_raw_k
  // (equivalently (event_wsum_k / n) / s0_k with the 1/n-scaled s0) and of
  // a_k * xbar_k
  std::vector<double> pre0(K + 1, 0.0);
  Eigen::MatrixXd pre1 = Eigen::MatrixXd::Zero(K + 1, p);
  for (int k = 0; k < K; ++k) {
    times[k] = stats[k].time;
    const double a = stats[k].event_wsum / stats[k].s0_raw;
    pre0[k + 1] = pre0[k] + a;
    pre1.row(k + 1) = pre1.row(k) + a * stats[k].xbar.transpose();
  }
  // count of event times <= t
  const auto idx = [&](double t) {
    return static_cast<int>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
  };

  InfluenceSet out;
  std::unordered_map<std::int64_t, int> slot;
  const std::vector<EpisodeRow>& rows = pl.rows();
  slot.reserve(rows.size());
  std::vector<double> wts;
  for (const EpisodeRow& r : rows)
    if (slot.emplace(r.subject_id, static_cast<int>(slot.size())).second) {
      out.subject_ids.push_back(r.subject_id);
      wts.push_back(r.weight);
    }
  const int m = static_cast<int>(out.subject_ids.size());
  out.u = Eigen::MatrixXd::Zero(m, p);
  out.weights = Eigen::Map<const Eigen::VectorXd>(wts.data(), m);

  for (const EpisodeRow& r : rows) {
    const int s = slot[r.subject_id];
    const int lo = idx(r.start);
    const int hi = idx(r.stop);
    if (hi > lo) {
      const double e = std::exp(beta_hat.dot(r.x));
      out.u.row(s) -= e * ((pre0[hi] - pre0[lo]) * r.x.transpose() -
                           (pre1.row(hi) - pre1.row(lo)));
    }
    if (r.event) {
      const int k = idx(r.stop) - 1;  // stats entry at the subject's event time
      out.u.row(s) += r.x.transpose() - stats[k].xbar.transpose();
    }
  }
  return out;
}

namespace {

// (1/n) sum_i scale_i u_i u_i'
Eigen::MatrixXd scaled_outer_mean(const Eigen::MatrixXd& u, const Eigen::VectorXd& scale,
                                  double n) {
  const int p = static_cast<int>(u.cols());
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    b += scale[i] * u.row(i).transpose() * u.row(i);
  return b / n;
}

Eigen::MatrixXd invert_information(const Eigen::MatrixXd& a) {
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  const Eigen::VectorXd d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  if (!(dmax > 0.0) || d.cwiseAbs().minCoeff() <= 1e-12 * dmax)
    throw SingularHessian("information matrix is singular");
  return ldlt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
}

Eigen::MatrixXd sandwich(const Eigen::MatrixXd& a, const Eigen::MatrixXd& meat, double n) {
  const Eigen::MatrixXd ainv = invert_information(a);
  Eigen::MatrixXd cov = ainv * meat * ainv / n;
  cov = ((cov + cov.transpose()) / 2.0).eval();
  return cov;
}

}  // namespace

Eigen::MatrixXd cov_model(const CoxFit& fit, int n_norm) {
  Eigen::MatrixXd cov = invert_information(fit.hessian) / static_cast<double>(n_norm);
  return ((cov + cov.transpose()) / 2.0).eval();
}

Eigen::MatrixXd cov_robust(const CoxFit& fit, const InfluenceSet& infl, int n_norm) {
  const double n = static_cast<double>(n_norm);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(infl.u.rows());
  return sandwich(fit.hessian, scaled_outer_mean(infl.u, ones, n), n);
}

Eigen::MatrixXd cov_iplw(const CoxFit& fit, InfluenceSet& infl,
                         const LinkageFit* linkage,
                         const std::vector<SubjectRecord>& included, int n_norm) {
  if (static_cast<Eigen::Index>(included.size()) != infl.u.rows())
    throw InvalidInput("cov_iplw: included subjects must align with influence rows");
  for (std::size_t i = 0; i < included.size(); ++i)
    if (included[i].id != infl.subject_ids[i])
      throw InvalidInput("cov_iplw: subject order mismatch");

  const double n = static_cast<double>(n_norm);
  const int p = static_cast<int>(infl.u.cols());
  const Eigen::VectorXd wsq = infl.weights.array().square();
  Eigen::MatrixXd sigma_u = scaled_outer_mean(infl.u, wsq, n);

  Eigen::MatrixXd qe;
  if (linkage) {
    const int d1 = static_cast<int>(linkage->covariate_idx.size());
    qe = Eigen::MatrixXd::Zero(d1 + 1, p);
    Eigen::VectorXd xt(d1 + 1);
    for (std::size_t i = 0; i < included.size(); ++i) {
      const SubjectRecord& s = included[i];
      if (s.q) continue;
      xt[0] = 1.0;
      for (int j = 0; j < d1; ++j) xt[j + 1] = s.z1[linkage->covariate_idx[j]];
      const double pi = 1.0 / (1.0 + std::exp(-linkage->gamma_hat.dot(xt)));
      qe += (infl.weights[i] * (1.0 - pi) / n) * xt * infl.u.row(i);
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(linkage->info);
    const Eigen::VectorXd d = ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    if (!(dmax > 0.0) || d.cwiseAbs().minCoeff() <= 1e-12 * dmax)
      throw SingularLinkageInfo("linkage information matrix is singular");
    sigma_u -= qe.transpose() * ldlt.solve(qe);
  } else {
    qe = Eigen::MatrixXd::Zero(1, p);
  }

  // PSD within relative slack; more negative means the plug-in fell apart
  {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        (sigma_u + sigma_u.transpose()) / 2.0);
    const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
    if (es.eigenvalues().minCoeff() < -1e-8 * std::max(lmax, 1e-300))
      throw NumericalFailure("linkage-adjusted meat matrix is not positive semidefinite");
  }

  infl.qe_hat = qe;
  infl.sigma_u = sigma_u;
  const Eigen::MatrixXd cov = sandwich(fit.hessian, sigma_u, n);
  infl.sigma0_inv = invert_information(fit.hessian);
  return cov;
}

}  // namespace linkedcox
