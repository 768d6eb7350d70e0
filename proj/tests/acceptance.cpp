// acceptance gate for the simulation study. five criteria, one verdict line
// per criterion on stdout, exit status = number of failed criteria. progress
// and per-cell detail go to stderr so stdout stays machine-checkable.
//
// every tolerance is pinned here. reference cells are recorded at two-decimal
// print resolution, so each table comparison first rounds our statistic to two
// decimals and then requires the gap to the reference cell to stay within the
// stated tolerance (plus 1e-9 slack for the rounding itself):
//   bias cells:     |round2(ours) - ref| <= max(0.02, 3 * empirical_sd / sqrt(1000))
//   coverage cells: |round2(ours) - ref| <= 0.03

#include <linkedcox/coxfit.hpp>
#include <linkedcox/dataset.hpp>
#include <linkedcox/errors.hpp>
#include <linkedcox/estimators.hpp>
#include <linkedcox/linkage.hpp>
#include <linkedcox/montecarlo.hpp>
#include <linkedcox/simgen.hpp>
#include <linkedcox/variance.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace linkedcox;

namespace {

constexpr std::uint64_t kSeed = 20260816ULL;
constexpr int kStudyN = 2000;
constexpr int kStudyReps = 1000;
constexpr double kCoverageTol = 0.03;
constexpr double kBiasTolFloor = 0.02;
constexpr double kSeAnchorTol = 0.003;  // mean-se anchors are printed to 3 decimals

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

bool cell_ok(double ours, double ref, double tol) {
  return std::fabs(round2(ours) - ref) <= tol + 1e-9;
}

// accumulates sub-checks of one criterion; misses carry the measured values
struct Checker {
  int checked = 0;
  std::vector<std::string> misses;
  void require(bool ok, const std::string& what) {
    ++checked;
    if (!ok) {
      misses.push_back(what);
      std::fprintf(stderr, "[acceptance]   miss: %s\n", what.c_str());
    }
  }
  bool ok() const { return misses.empty(); }
};

void verdict(int idx, const Checker& c, const std::string& summary) {
  if (c.ok()) {
    std::printf("criterion %d: PASS - %s (%d checks)\n", idx, summary.c_str(), c.checked);
  } else {
    std::printf("criterion %d: FAIL - %s (%zu of %d checks failed; first miss: %s)\n", idx,
                summary.c_str(), c.misses.size(), c.checked, c.misses.front().c_str());
  }
  std::fflush(stdout);
}

const MethodStats* find_method(const SimReport& rep, Method m) {
  for (const MethodStats& s : rep.methods)
    if (s.method == m) return &s;
  return nullptr;
}

SimReport study(const char* tag, Scenario sc, Mechanism mech, Analysis ana, GapRemedy rem,
                int n, int reps, const std::vector<Method>& methods) {
  ScenarioConfig cfg;
  cfg.scenario = sc;
  cfg.mechanism = mech;
  cfg.analysis = ana;
  cfg.remedy = rem;
  cfg.n = n;
  cfg.seed = kSeed;
  RunOptions opts;
  opts.n_threads = 1;
  const auto t0 = std::chrono::steady_clock::now();
  SimReport rep = run_replications(cfg, methods, reps, opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::fprintf(stderr, "[acceptance] study %s: %d reps in %.1fs\n", tag, reps, secs);
  return rep;
}

// one reference row: per-parameter bias and coverage cells at print resolution
struct RefRow {
  Method method;
  std::vector<double> bias;
  std::vector<double> cov;
};

void check_grid(const SimReport& rep, const std::vector<RefRow>& ref, const std::string& label,
                Checker& c) {
  for (const RefRow& row : ref) {
    const MethodStats* st = find_method(rep, row.method);
    c.require(st != nullptr, label + "/" + method_name(row.method) + ": row missing");
    if (!st) continue;
    for (std::size_t k = 0; k < row.bias.size(); ++k) {
      const std::string cell = label + "/" + method_name(row.method) + "/beta" +
                               std::to_string(k + 1);
      const double esd = st->empirical_sd[static_cast<Eigen::Index>(k)];
      const double btol = std::max(kBiasTolFloor, 3.0 * esd / std::sqrt(1000.0));
      const double b = st->bias[static_cast<Eigen::Index>(k)];
      const double cv = st->coverage[static_cast<Eigen::Index>(k)];
      c.require(cell_ok(b, row.bias[k], btol),
                fmt("%s bias %.4f vs ref %.2f (tol %.3f)", cell.c_str(), b, row.bias[k], btol));
      c.require(cell_ok(cv, row.cov[k], kCoverageTol),
                fmt("%s coverage %.3f vs ref %.2f", cell.c_str(), cv, row.cov[k]));
    }
  }
}

// reference grid, correct specification at n=2000: bias then coverage per
// parameter. the oracle column is mechanism-independent by construction.
std::vector<RefRow> correct_ref(Mechanism mech) {
  const RefRow oracle{Method::Oracle, {-0.00, 0.00, -0.00}, {0.94, 0.95, 0.96}};
  switch (mech) {
    case Mechanism::LCAR:
      return {oracle,
              {Method::CC, {-0.00, 0.00, -0.01}, {0.95, 0.96, 0.96}},
              {Method::CCPlus, {0.13, -0.03, -0.13}, {0.77, 0.86, 0.89}},
              {Method::NLAC, {-0.00, 0.00, -0.01}, {0.94, 0.95, 0.95}},
              {Method::IPLW, {-0.00, 0.00, -0.01}, {0.94, 0.95, 0.95}}};
    case Mechanism::CLAR:
      return {oracle,
              {Method::CC, {-0.18, -0.06, 0.19}, {0.79, 0.75, 0.83}},
              {Method::CCPlus, {-0.07, -0.10, 0.09}, {0.91, 0.23, 0.91}},
              {Method::NLAC, {-0.00, 0.00, -0.00}, {0.94, 0.95, 0.95}},
              {Method::IPLW, {-0.00, 0.00, -0.00}, {0.94, 0.95, 0.96}}};
    case Mechanism::LNAR_T:
      return {oracle,
              {Method::CC, {-0.19, -0.07, 0.20}, {0.79, 0.69, 0.84}},
              {Method::CCPlus, {-0.07, -0.11, 0.09}, {0.92, 0.16, 0.92}},
              {Method::NLAC, {-0.00, 0.00, -0.01}, {0.94, 0.95, 0.95}},
              {Method::IPLW, {-0.00, -0.00, -0.01}, {0.94, 0.95, 0.95}}};
    case Mechanism::LNAR_C2:
      return {oracle,
              {Method::CC, {-0.31, -0.16, 0.33}, {0.47, 0.16, 0.70}},
              {Method::CCPlus, {-0.12, -0.22, 0.14}, {0.83, 0.00, 0.88}},
              {Method::NLAC, {-0.00, 0.00, -0.02}, {0.93, 0.95, 0.95}},
              {Method::IPLW, {-0.00, 0.01, -0.02}, {0.93, 0.94, 0.94}}};
  }
  throw InvalidInput("unknown mechanism");
}

// reference grid, misspecified change-point analysis at n=2000 (two parameters)
std::vector<RefRow> misspec_ref(Mechanism mech) {
  const RefRow oracle{Method::Oracle, {-0.00, 0.00}, {0.93, 0.94}};
  switch (mech) {
    case Mechanism::LCAR:
      return {oracle,
              {Method::CC, {-0.00, 0.00}, {0.93, 0.96}},
              {Method::CCPlus, {-0.00, -0.03}, {0.93, 0.84}},
              {Method::NLAC, {-0.08, 0.00}, {0.82, 0.95}},
              {Method::IPLW, {-0.00, 0.00}, {0.94, 0.95}}};
    case Mechanism::CLAR:
      return {oracle,
              {Method::CC, {-0.04, -0.06}, {0.92, 0.76}},
              {Method::CCPlus, {-0.08, -0.10}, {0.81, 0.25}},
              {Method::NLAC, {-0.05, 0.00}, {0.89, 0.95}},
              {Method::IPLW, {-0.00, 0.00}, {0.93, 0.95}}};
    case Mechanism::LNAR_T:
      return {oracle,
              {Method::CC, {-0.05, -0.07}, {0.91, 0.70}},
              {Method::CCPlus, {-0.09, -0.11}, {0.78, 0.17}},
              {Method::NLAC, {-0.06, -0.00}, {0.88, 0.94}},
              {Method::IPLW, {-0.00, -0.00}, {0.93, 0.95}}};
    default:
      throw InvalidInput("no misspecified reference column for this mechanism");
  }
}

// delayed-follow-up reference coverages with the remedy applied, n=2000
std::vector<RefRow> gap_ref(Mechanism mech) {
  switch (mech) {
    case Mechanism::LCAR:
      return {{Method::NLAC, {}, {0.94, 0.95, 0.94}}, {Method::IPLW, {}, {0.95, 0.95, 0.93}}};
    case Mechanism::CLAR:
      return {{Method::NLAC, {}, {0.95, 0.95, 0.94}}, {Method::IPLW, {}, {0.95, 0.95, 0.94}}};
    case Mechanism::LNAR_T:
      return {{Method::NLAC, {}, {0.94, 0.95, 0.94}}, {Method::IPLW, {}, {0.94, 0.95, 0.94}}};
    case Mechanism::LNAR_C2:
      return {{Method::NLAC, {}, {0.94, 0.95, 0.95}}, {Method::IPLW, {}, {0.94, 0.91, 0.91}}};
  }
  throw InvalidInput("unknown mechanism");
}

void check_gap_coverages(const SimReport& rep, const std::vector<RefRow>& ref,
                         const std::string& label, Checker& c) {
  for (const RefRow& row : ref) {
    const MethodStats* st = find_method(rep, row.method);
    c.require(st != nullptr, label + "/" + method_name(row.method) + ": row missing");
    if (!st) continue;
    for (std::size_t k = 0; k < row.cov.size(); ++k) {
      const double cv = st->coverage[static_cast<Eigen::Index>(k)];
      c.require(cell_ok(cv, row.cov[k], kCoverageTol),
                fmt("%s/%s/beta%zu coverage %.3f vs ref %.2f", label.c_str(),
                    method_name(row.method).c_str(), k + 1, cv, row.cov[k]));
    }
  }
}

const std::vector<Method> kAllMethods = {Method::Oracle, Method::CC, Method::CCPlus,
                                         Method::NLAC, Method::IPLW};

// ---------------------------------------------------------------------------
// criterion 1: correct-specification grid, four mechanisms, five methods

bool criterion1() {
  Checker c;
  for (Mechanism mech :
       {Mechanism::LCAR, Mechanism::CLAR, Mechanism::LNAR_T, Mechanism::LNAR_C2}) {
    const SimReport rep = study(("correct/" + mechanism_name(mech)).c_str(),
                                Scenario::TdChangePoint, mech, Analysis::Correct, GapRemedy::On,
                                kStudyN, kStudyReps, kAllMethods);
    check_grid(rep, correct_ref(mech), "correct/" + mechanism_name(mech), c);
    if (mech == Mechanism::CLAR) {
      // key-cell anchors: the weighted estimator's mean model se per parameter
      const MethodStats* ip = find_method(rep, Method::IPLW);
      const double se_ref[3] = {0.110, 0.040, 0.159};
      for (int k = 0; k < 3 && ip; ++k)
        c.require(std::fabs(ip->mean_se[k] - se_ref[k]) <= kSeAnchorTol,
                  fmt("correct/clar/iplw/beta%d mean se %.4f vs ref %.3f", k + 1, ip->mean_se[k],
                      se_ref[k]));
      // consistency diagnostic only: empirical sd against the mean se
      for (const Method m : {Method::Oracle, Method::NLAC, Method::IPLW}) {
        const MethodStats* st = find_method(rep, m);
        for (int k = 0; k < 3 && st; ++k)
          std::fprintf(stderr, "[acceptance]   sd/se %s beta%d: %.3f\n",
                       method_name(m).c_str(), k + 1, st->empirical_sd[k] / st->mean_se[k]);
      }
    }
  }
  verdict(1, c, "correct-specification grid, 4 mechanisms x 5 methods x 3 parameters");
  return c.ok();
}

// ---------------------------------------------------------------------------
// criterion 2: misspecified grid plus the large-n reference target

bool criterion2() {
  Checker c;
  ScenarioConfig tcfg;
  tcfg.scenario = Scenario::TdChangePoint;
  tcfg.analysis = Analysis::Misspecified;
  tcfg.mechanism = Mechanism::CLAR;
  tcfg.n = kStudyN;
  tcfg.seed = kSeed;
  RunOptions opts;
  opts.n_threads = 1;
  const TargetEstimate target = estimate_target(tcfg, opts);
  c.require(target.provenance == TargetProvenance::OracleLargeN,
            "misspecified target came from the wrong provenance");
  c.require(std::fabs(target.beta_star[0] - (-1.10)) <= 0.02,
            fmt("target beta1* %.4f vs ref -1.10 (tol 0.02)", target.beta_star[0]));
  std::fprintf(stderr, "[acceptance] misspecified target: beta1* %.6f (mc se %.2g)\n",
               target.beta_star[0], target.mc_se[0]);
  for (Mechanism mech : {Mechanism::LCAR, Mechanism::CLAR, Mechanism::LNAR_T}) {
    const SimReport rep = study(("misspec/" + mechanism_name(mech)).c_str(),
                                Scenario::TdChangePoint, mech, Analysis::Misspecified,
                                GapRemedy::On, kStudyN, kStudyReps, kAllMethods);
    check_grid(rep, misspec_ref(mech), "misspec/" + mechanism_name(mech), c);
  }
  verdict(2, c, "misspecified grid, 3 mechanisms x 5 methods x 2 parameters, beta1* target");
  return c.ok();
}

// ---------------------------------------------------------------------------
// criterion 3: squared-covariate study ranking and coverage spread

bool criterion3() {
  Checker c;
  const SimReport rep = study("squared/clar", Scenario::MotivatingSquared, Mechanism::CLAR,
                              Analysis::Misspecified, GapRemedy::On, kStudyN, kStudyReps,
                              kAllMethods);
  const MethodStats* cc = find_method(rep, Method::CC);
  const MethodStats* ccplus = find_method(rep, Method::CCPlus);
  const MethodStats* nlac = find_method(rep, Method::NLAC);
  const MethodStats* iplw = find_method(rep, Method::IPLW);
  c.require(cc && ccplus && nlac && iplw, "missing method rows");
  if (!(cc && ccplus && nlac && iplw)) {
    verdict(3, c, "squared-covariate study");
    return false;
  }
  c.require(std::fabs(ccplus->bias[2]) > std::fabs(cc->bias[2]) &&
                std::fabs(cc->bias[2]) > std::fabs(iplw->bias[2]),
            fmt("beta3* bias ranking |ccplus| > |cc| > |iplw| violated: %.4f / %.4f / %.4f",
                std::fabs(ccplus->bias[2]), std::fabs(cc->bias[2]), std::fabs(iplw->bias[2])));
  for (int k = 0; k < 3; ++k)
    c.require(iplw->coverage[k] >= 0.92 && iplw->coverage[k] <= 0.97,
              fmt("iplw beta%d coverage %.3f outside [0.92, 0.97]", k + 1, iplw->coverage[k]));
  const auto min_cov = [](const MethodStats* s) { return s->coverage.minCoeff(); };
  c.require(min_cov(cc) < 0.90, fmt("cc min coverage %.3f not below 0.90", min_cov(cc)));
  c.require(min_cov(ccplus) < 0.90,
            fmt("ccplus min coverage %.3f not below 0.90", min_cov(ccplus)));
  c.require(min_cov(nlac) < 0.90, fmt("nlac min coverage %.3f not below 0.90", min_cov(nlac)));
  // the nlac coverage deficiency is an asymptotic effect; at n=2000 its
  // undercoverage on beta3* sits above the 0.90 line, so the check above fails
  // there. the larger run documents that the deficiency is real, not a miss of
  // the implementation.
  const SimReport big = study("squared/clar/n10000", Scenario::MotivatingSquared,
                              Mechanism::CLAR, Analysis::Misspecified, GapRemedy::On, 10000,
                              kStudyReps, {Method::NLAC});
  const MethodStats* nlac10k = find_method(big, Method::NLAC);
  const double big_min = nlac10k ? nlac10k->coverage.minCoeff() : 1.0;
  std::fprintf(stderr, "[acceptance] nlac min coverage: %.3f at n=2000, %.3f at n=10000\n",
               min_cov(nlac), big_min);
  verdict(3, c,
          fmt("squared-covariate study: bias ranking, iplw coverage in [0.92, 0.97], "
              "sub-0.90 coverage for cc/ccplus/nlac (nlac min coverage %.2f at n=2000, "
              "%.2f at n=10000)",
              min_cov(nlac), big_min));
  return c.ok();
}

// ---------------------------------------------------------------------------
// criterion 4: delayed-follow-up scenario

bool criterion4() {
  Checker c;
  // interval-censored fraction under the idealized censoring rule
  ScenarioConfig g;
  g.scenario = Scenario::GapScenario;
  g.remedy = GapRemedy::Off;
  g.n = 100000;
  g.seed = kSeed;
  const auto latents = gen_scenario(g);
  int n_interval = 0;
  for (const LatentRecord& r : latents) n_interval += r.interval_censored;
  const double frac = static_cast<double>(n_interval) / static_cast<double>(latents.size());
  c.require(std::fabs(frac - 0.045) <= 0.005,
            fmt("interval-censored fraction %.4f outside 0.045 +/- 0.005", frac));
  std::fprintf(stderr, "[acceptance] interval-censored fraction: %.4f (n=%zu)\n", frac,
               latents.size());

  // negative control: keeping the observational window but right-censoring the
  // interval-censored subjects at c1 wrecks even the oracle's beta1 coverage
  const SimReport naive = study("gap/naive", Scenario::GapScenario, Mechanism::LCAR,
                                Analysis::Correct, GapRemedy::Naive, 10000, kStudyReps,
                                {Method::Oracle});
  const MethodStats* oracle = find_method(naive, Method::Oracle);
  c.require(oracle != nullptr, "gap/naive oracle row missing");
  if (oracle) {
    c.require(oracle->coverage[0] <= 0.70,
              fmt("naive-control oracle beta1 coverage %.3f above 0.70", oracle->coverage[0]));
    std::fprintf(stderr, "[acceptance] naive-control oracle beta1: coverage %.3f, bias %.4f\n",
                 oracle->coverage[0], oracle->bias[0]);
  }

  // with the remedy the weighted and censor-the-unlinked fits are back on the
  // reference coverages
  for (Mechanism mech :
       {Mechanism::LCAR, Mechanism::CLAR, Mechanism::LNAR_T, Mechanism::LNAR_C2}) {
    const SimReport rep = study(("gap/" + mechanism_name(mech)).c_str(), Scenario::GapScenario,
                                mech, Analysis::Correct, GapRemedy::On, kStudyN, kStudyReps,
                                {Method::NLAC, Method::IPLW});
    check_gap_coverages(rep, gap_ref(mech), "gap/" + mechanism_name(mech), c);
  }
  verdict(4, c, "delayed follow-up: interval fraction, naive negative control, remedy grid");
  return c.ok();
}

// ---------------------------------------------------------------------------
// criterion 5: property suite

// random counting-process instance for derivative checks
std::vector<EpisodeRow> random_rows(std::mt19937_64& rng, int n, int p) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::exponential_distribution<double> texp(0.4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<EpisodeRow> rows;
  for (int i = 0; i < n; ++i) {
    EpisodeRow r;
    r.subject_id = i + 1;
    r.x = Eigen::VectorXd::NullaryExpr(p, [&](Eigen::Index) { return z(rng); });
    double t = 0.05 + texp(rng);
    if (u(rng) < 0.5) t = std::ceil(t * 10.0) / 10.0;  // force ties
    r.start = u(rng) < 0.3 ? t * 0.4 * u(rng) : 0.0;   // some delayed entries
    r.stop = t;
    r.event = u(rng) < 0.6;
    r.weight = u(rng) < 0.5 ? 1.0 : 0.5 + 1.5 * u(rng);
    rows.push_back(std::move(r));
  }
  return rows;
}

void property_derivatives(Checker& c) {
  std::mt19937_64 rng(424242);
  std::uniform_int_distribution<int> nsz(15, 40), psz(1, 3);
  std::uniform_real_distribution<double> b(-0.4, 0.4);
  const double h = 1e-6;
  for (int inst = 0; inst < 50; ++inst) {
    const int n = nsz(rng), p = psz(rng);
    const CoxPartialLikelihood pl(random_rows(rng, n, p), n);
    const Eigen::VectorXd beta =
        Eigen::VectorXd::NullaryExpr(p, [&](Eigen::Index) { return b(rng); });
    const Eigen::VectorXd score = pl.score(beta);
    const Eigen::MatrixXd hess = pl.hessian(beta);
    double score_err = 0.0, hess_err = 0.0;
    for (int j = 0; j < p; ++j) {
      Eigen::VectorXd hi = beta, lo = beta;
      hi[j] += h;
      lo[j] -= h;
      const double fd =
          (pl.log_partial_likelihood(hi) - pl.log_partial_likelihood(lo)) / (2.0 * h);
      score_err = std::max(score_err, std::fabs(score[j] - fd) / (1.0 + std::fabs(fd)));
      const Eigen::VectorXd sd = (pl.score(hi) - pl.score(lo)) / (2.0 * h);
      for (int i = 0; i < p; ++i)
        hess_err = std::max(hess_err, std::fabs(-hess(i, j) - sd[i]) / (1.0 + std::fabs(sd[i])));
    }
    c.require(score_err <= 1e-6, fmt("instance %d: score fd error %.2e > 1e-6", inst, score_err));
    c.require(hess_err <= 1e-5, fmt("instance %d: hessian fd error %.2e > 1e-5", inst, hess_err));
  }
}

void property_unit_weights(Checker& c) {
  // with every q=0 subject linked the weighted fit runs on unit weights and
  // must agree with the plain available-case fit
  ScenarioConfig cfg;
  cfg.scenario = Scenario::TdChangePoint;
  cfg.mechanism = Mechanism::CLAR;
  cfg.n = 400;
  cfg.seed = kSeed + 1;
  auto latents = gen_scenario(cfg);
  gen_linkage(latents, cfg);
  std::vector<SubjectRecord> subset;
  for (const SubjectRecord& r : observed_view(latents))
    if (r.l || r.q) subset.push_back(r);
  FitOptions fo;
  fo.changepoints = analysis_plan(cfg).changepoints;
  const FitReport weighted = fit_iplw(subset, fo);
  const FitReport plain = fit_ccplus(subset, fo);
  const double gap = (weighted.cox.beta_hat - plain.cox.beta_hat).cwiseAbs().maxCoeff();
  c.require(gap <= 1e-8, fmt("unit-weight fit differs from unweighted fit by %.2e", gap));
}

void property_cov_bypass(Checker& c) {
  // with unit weights and no linkage correction the adjusted covariance is the
  // robust covariance, bit for bit
  ScenarioConfig cfg;
  cfg.scenario = Scenario::TdChangePoint;
  cfg.mechanism = Mechanism::LCAR;
  cfg.n = 300;
  cfg.seed = kSeed + 2;
  auto latents = gen_scenario(cfg);
  gen_linkage(latents, cfg);
  const std::vector<SubjectRecord> subjects = oracle_view(latents);
  const auto rows = split_episodes(subjects, analysis_plan(cfg).changepoints);
  const CoxPartialLikelihood pl(rows, static_cast<int>(subjects.size()));
  const CoxFit fit = pl.newton_solve();
  InfluenceSet infl = influence_residuals(pl, fit.beta_hat);
  const Eigen::MatrixXd robust =
      cov_robust(fit, infl, static_cast<int>(subjects.size()));
  const Eigen::MatrixXd adjusted =
      cov_iplw(fit, infl, nullptr, subjects, static_cast<int>(subjects.size()));
  const bool same = robust.rows() == adjusted.rows() &&
                    std::memcmp(robust.data(), adjusted.data(),
                                sizeof(double) * robust.size()) == 0;
  c.require(same, "bypass covariance is not bit-identical to the robust covariance");
  c.require(infl.qe_hat.cwiseAbs().maxCoeff() == 0.0, "bypass qe_hat is not exactly zero");
}

void property_logistic_balance(Checker& c) {
  ScenarioConfig cfg;
  cfg.scenario = Scenario::TdChangePoint;
  cfg.mechanism = Mechanism::CLAR;
  cfg.n = 1500;
  cfg.seed = kSeed + 3;
  auto latents = gen_scenario(cfg);
  gen_linkage(latents, cfg);
  const std::vector<SubjectRecord> subjects = observed_view(latents);
  const LinkageFit lf = fit_linkage(subjects);
  c.require(lf.converged, "linkage fit did not converge");
  Eigen::VectorXd balance = Eigen::VectorXd::Zero(1 + subjects[0].z1.size());
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    if (subjects[i].q) continue;
    Eigen::VectorXd x(balance.size());
    x[0] = 1.0;
    x.tail(subjects[i].z1.size()) = subjects[i].z1;
    balance += ((subjects[i].l ? 1.0 : 0.0) - lf.pi_hat[static_cast<Eigen::Index>(i)]) * x;
  }
  c.require(balance.cwiseAbs().maxCoeff() <= 1e-10,
            fmt("logistic score balance %.2e above 1e-10", balance.cwiseAbs().maxCoeff()));
}

void property_survival(Checker& c) {
  // marginal survivor values for the change-point generator, integrated over
  // the covariate distribution by quadrature and frozen here
  struct Anchor {
    int arm;
    double t, s;
  };
  const Anchor anchors[] = {
      {0, 2.5, 0.7872754081257842},  {0, 5.0, 0.6256403538051907},
      {0, 10.5, 0.3881268660300714}, {1, 2.5, 0.941068121221018},
      {1, 5.0, 0.8861798394267568},  {1, 10.5, 0.7162494906194765},
  };
  ScenarioConfig cfg;
  cfg.scenario = Scenario::TdChangePoint;
  cfg.n = 100000;
  cfg.seed = kSeed;
  const auto latents = gen_scenario(cfg);
  for (const Anchor& a : anchors) {
    int n_arm = 0, n_alive = 0;
    for (const LatentRecord& r : latents) {
      if (static_cast<int>(r.obs.z1[0]) != a.arm) continue;
      ++n_arm;
      n_alive += r.t_fail > a.t;
    }
    const double shat = static_cast<double>(n_alive) / n_arm;
    const double se = std::sqrt(a.s * (1.0 - a.s) / n_arm);
    c.require(std::fabs(shat - a.s) <= 3.0 * se,
              fmt("arm %d: S(%.1f) empirical %.4f vs %.4f (3se %.4f)", a.arm, a.t, shat, a.s,
                  3.0 * se));
  }
}

void property_determinism(Checker& c) {
  ScenarioConfig cfg;
  cfg.scenario = Scenario::TdChangePoint;
  cfg.mechanism = Mechanism::CLAR;
  cfg.n = 200;
  cfg.seed = kSeed + 4;
  RunOptions one, three;
  one.n_threads = 1;
  three.n_threads = 3;
  const std::string a =
      simreport_to_json(run_replications(cfg, kAllMethods, 20, one)).dump();
  const std::string b =
      simreport_to_json(run_replications(cfg, kAllMethods, 20, three)).dump();
  c.require(a == b, "reports differ across worker counts");
}

void property_brute_force(Checker& c) {
  // golden-section maximization of the one-parameter partial likelihood; the
  // likelihood is strictly concave so the section search is exact
  std::mt19937_64 rng(171717);
  std::normal_distribution<double> z(0.0, 1.0);
  std::exponential_distribution<double> texp(0.5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int accepted = 0, attempts = 0;
  while (accepted < 10 && attempts < 200) {
    ++attempts;
    const int n = 4 + static_cast<int>(u(rng) * 5.0);  // 4..8 subjects
    std::vector<EpisodeRow> rows;
    int events = 0;
    for (int i = 0; i < n; ++i) {
      EpisodeRow r;
      r.subject_id = i + 1;
      r.x = Eigen::VectorXd::Constant(1, z(rng));
      r.stop = 0.05 + texp(rng);
      r.event = u(rng) < 0.7;
      events += r.event;
      rows.push_back(std::move(r));
    }
    if (events < 2) continue;
    const CoxPartialLikelihood pl(rows, n);
    CoxFit fit;
    try {
      fit = pl.newton_solve();
    } catch (const EstimationFailure&) {
      continue;
    }
    if (!fit.converged || std::fabs(fit.beta_hat[0]) > 5.0) continue;  // monotone cases
    ++accepted;
    const auto ll = [&](double v) {
      return pl.log_partial_likelihood(Eigen::VectorXd::Constant(1, v));
    };
    double a = -20.0, bb = 20.0;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = bb - gr * (bb - a), x2 = a + gr * (bb - a);
    double f1 = ll(x1), f2 = ll(x2);
    while (bb - a > 1e-11) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (bb - a);
        f2 = ll(x2);
      } else {
        bb = x2;
        x2 = x1;
        f2 = f1;
        x1 = bb - gr * (bb - a);
        f1 = ll(x1);
      }
    }
    const double bstar = (a + bb) / 2.0;
    c.require(std::fabs(fit.beta_hat[0] - bstar) <= 1e-6,
              fmt("instance %d: newton %.8f vs section search %.8f", attempts, fit.beta_hat[0],
                  bstar));
  }
  c.require(accepted == 10, fmt("only %d of 10 bounded instances found", accepted));
}

bool criterion5() {
  Checker c;
  property_derivatives(c);
  property_unit_weights(c);
  property_cov_bypass(c);
  property_logistic_balance(c);
  property_survival(c);
  property_determinism(c);
  property_brute_force(c);
  verdict(5, c,
          "properties: derivatives, unit-weight equivalence, covariance bypass, "
          "logistic balance, generator survival, determinism, brute force");
  return c.ok();
}

}  // namespace

int main() {
  int failed = 0;
  const auto run = [&failed](int idx, bool (*fn)()) {
    try {
      if (!fn()) ++failed;
    } catch (const std::exception& e) {
      std::printf("criterion %d: FAIL - unexpected exception: %s\n", idx, e.what());
      std::fflush(stdout);
      ++failed;
    }
  };
  run(1, criterion1);
  run(2, criterion2);
  run(3, criterion3);
  run(4, criterion4);
  run(5, criterion5);
  std::printf("acceptance: %d of 5 criteria passed\n", 5 - failed);
  return failed;
}
