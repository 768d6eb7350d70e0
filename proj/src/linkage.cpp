#include "linkedcox/linkage.hpp"

#include "linkedcox/errors.hpp"

#include <cmath>
#include <sstream>

namespace linkedcox {

namespace {

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// log(1 + exp(eta)) without overflow
double log1pexp(double eta) {
  return (eta > 0.0) ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

double bernoulli_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) ll += y[i] * eta[i] - log1pexp(eta[i]);
  return ll;
}

}  // namespace

LinkageFit fit_linkage(const std::vector<SubjectRecord>& subjects,
                       const std::vector<int>& covariate_idx,
                       const LinkageOptions& opts) {
  if (subjects.empty()) throw InvalidInput("fit_linkage: no subjects");
  const Eigen::Index p0 = subjects.front().z1.size();
  std::vector<int> idx = covariate_idx;
  if (idx.empty())
    for (int j = 0; j < p0; ++j) idx.push_back(j);
  for (int j : idx)
    if (j < 0 || j >= p0) throw InvalidInput("linkage covariate index out of range");
  const int d = static_cast<int>(idx.size());

  std::vector<int> rows;  // q=0 subjects
  for (std::size_t i = 0; i < subjects.size(); ++i)
    if (!subjects[i].q) rows.push_back(static_cast<int>(i));
  if (rows.empty()) throw InvalidInput("fit_linkage: no q=0 subjects");

  Eigen::MatrixXd X(rows.size(), d + 1);
  Eigen::VectorXd y(rows.size());
  int n_pos = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const SubjectRecord& s = subjects[rows[k]];
    X(k, 0) = 1.0;
    for (int j = 0; j < d; ++j) X(k, j + 1) = s.z1[idx[j]];
    y[k] = s.l ? 1.0 : 0.0;
    n_pos += s.l ? 1 : 0;
  }
  if (n_pos == 0 || n_pos == static_cast<int>(rows.size()))
    throw SeparationDetected("linkage outcome constant among q=0 subjects");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < d + 1) throw SingularDesign("linkage design is rank deficient");

  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(rows.size());
  double ll = bernoulli_loglik(y, eta);
  if (opts.loglik_trace) opts.loglik_trace->push_back(ll);

  LinkageFit fit;
  fit.covariate_idx = idx;
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    Eigen::VectorXd pi(rows.size()), v(rows.size());
    for (Eigen::Index k = 0; k < pi.size(); ++k) {
      pi[k] = sigmoid(eta[k]);
      v[k] = pi[k] * (1.0 - pi[k]);
    }
    const Eigen::VectorXd g = X.transpose() * (y - pi);
    if (g.lpNorm<Eigen::Infinity>() <= opts.tol) {
      fit.converged = true;
      break;
    }
    const Eigen::MatrixXd H = X.transpose() * v.asDiagonal() * X;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    const Eigen::VectorXd step = ldlt.solve(g);
    if ((H * step - g).lpNorm<Eigen::Infinity>() >
        1e-8 * (1.0 + g.lpNorm<Eigen::Infinity>()))
      throw SingularDesign("linkage information matrix is singular");

    double lambda = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h, lambda *= 0.5) {
      const Eigen::VectorXd cand = gamma + lambda * step;
      const Eigen::VectorXd eta_c = X * cand;
      const double ll_c = bernoulli_loglik(y, eta_c);
      if (std::isfinite(ll_c) && ll_c >= ll - 1e-13 * (1.0 + std::fabs(ll))) {
        gamma = cand;
        eta = eta_c;
        ll = ll_c;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw NoConvergence("linkage Newton step-halving stalled");
    if (opts.loglik_trace) opts.loglik_trace->push_back(ll);
    if (gamma.lpNorm<Eigen::Infinity>() > opts.separation_bound) {
      std::ostringstream msg;
      msg << "linkage coefficient exceeded " << opts.separation_bound
          << "; data appear separated";
      throw SeparationDetected(msg.str());
    }
  }
  if (!fit.converged) throw NoConvergence("linkage Newton did not converge");
  fit.gamma_hat = gamma;
  fit.iterations = iter;

  const double n = static_cast<double>(subjects.size());
  fit.info = Eigen::MatrixXd::Zero(d + 1, d + 1);
  {
    Eigen::VectorXd pi(rows.size());
    for (Eigen::Index k = 0; k < pi.size(); ++k) pi[k] = sigmoid(eta[k]);
    Eigen::VectorXd v = (pi.array() * (1.0 - pi.array())).matrix() / n;
    fit.info = X.transpose() * v.asDiagonal() * X;
  }
  fit.pi_hat = Eigen::VectorXd(subjects.size());
  Eigen::VectorXd xi(d + 1);
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    xi[0] = 1.0;
    for (int j = 0; j < d; ++j) xi[j + 1] = subjects[i].z1[idx[j]];
    fit.pi_hat[i] = sigmoid(gamma.dot(xi));
  }
  return fit;
}

WeightVector compute_weights(const std::vector<SubjectRecord>& subjects,
                             const LinkageFit& fit, double floor, bool truncate) {
  if (fit.pi_hat.size() != static_cast<Eigen::Index>(subjects.size()))
    throw InvalidInput("compute_weights: fit does not match subjects");
  WeightVector out;
  out.w = Eigen::VectorXd::Zero(subjects.size());
  double min_pi = 1.0;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const SubjectRecord& s = subjects[i];
    if (s.q) {
      out.w[i] = 1.0;
    } else if (s.l) {
      out.w[i] = 1.0 / fit.pi_hat[i];
      if (truncate) out.w[i] = std::min(out.w[i], 1.0 / floor);
    }
    if (!s.q) min_pi = std::min(min_pi, fit.pi_hat[i]);
  }
  if (min_pi < floor) {
    std::ostringstream msg;
    msg << "positivity assumption (D3) at risk: min fitted linkage probability "
        << min_pi << " is below the floor " << floor
        << (truncate ? "; weights truncated at 1/floor" : "; weights left untruncated");
    out.warnings.push_back(msg.str());
  }
  return out;
}

}  // namespace linkedcox
