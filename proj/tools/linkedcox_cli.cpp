// command-line front end: fit a dataset, run a simulation study, render reports
//
// exit codes:
//   0  success
//   1  usage error (bad flags, unknown format, reps < 1)
//   2  malformed input (CSV/JSON parse error, schema mismatch, invalid values)
//   3  rank-deficient or separated design (Cox or linkage model)
//   4  Newton iteration failed to converge
//   5  degenerate scenario (too many failed replications)
//   6  numerical failure (empty risk set, singular Hessian, PSD violation)

#include "linkedcox/dataset.hpp"
#include "linkedcox/errors.hpp"
#include "linkedcox/estimators.hpp"
#include "linkedcox/montecarlo.hpp"
#include "linkedcox/rng.hpp"
#include "linkedcox/simgen.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace linkedcox;

const char* error_type(const Error& e) {
  if (dynamic_cast<const ParseError*>(&e)) return "parse-error";
  if (dynamic_cast<const InvalidInput*>(&e)) return "invalid-input";
  if (dynamic_cast<const SingularDesign*>(&e)) return "singular-design";
  if (dynamic_cast<const SeparationDetected*>(&e)) return "separation-detected";
  if (dynamic_cast<const SingularLinkageInfo*>(&e)) return "singular-linkage-info";
  if (dynamic_cast<const NoConvergence*>(&e)) return "no-convergence";
  if (dynamic_cast<const DegenerateScenario*>(&e)) return "degenerate-scenario";
  if (dynamic_cast<const EmptyRiskSet*>(&e)) return "empty-risk-set";
  if (dynamic_cast<const SingularHessian*>(&e)) return "singular-hessian";
  if (dynamic_cast<const NumericalFailure*>(&e)) return "numerical-failure";
  return "error";
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const ParseError*>(&e)) return 2;
  if (dynamic_cast<const InvalidInput*>(&e)) return 2;
  if (dynamic_cast<const SingularDesign*>(&e)) return 3;
  if (dynamic_cast<const SeparationDetected*>(&e)) return 3;
  if (dynamic_cast<const SingularLinkageInfo*>(&e)) return 3;
  if (dynamic_cast<const NoConvergence*>(&e)) return 4;
  if (dynamic_cast<const DegenerateScenario*>(&e)) return 5;
  return 6;
}

// "z1_3" -> 2, validated against the dataset's covariate count
int z1_col_index(const std::string& name, int p) {
  int k = 0;
  const bool prefixed = name.rfind("z1_", 0) == 0;
  const std::string digits = prefixed ? name.substr(3) : name;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || k < 1 || k > p)
    throw InvalidInput("unknown covariate column '" + name + "' (dataset has z1_1..z1_" +
                       std::to_string(p) + ")");
  return k - 1;
}

struct FitArgs {
  std::string csv_path;
  std::string method = "iplw";
  std::vector<double> change_points;
  std::string treatment_col = "z1_1";
  std::vector<std::string> linkage_cols;
  double positivity_floor = 0.01;
  bool truncate_weights = false;
};

// Datasets exported with latent columns keep Class-3 outcomes masked; the
// oracle fit rebuilds them from t_fail under the no-gap rule C = max(c1, c2).
void rebuild_masked_outcomes(std::vector<SubjectRecord>& records) {
  for (SubjectRecord& r : records) {
    if (r.t_obs && r.delta) continue;
    if (!r.t_fail || !r.c2)
      throw InvalidInput("oracle fit needs t_fail and c2 to rebuild a masked outcome");
    const double c = std::max(r.c1, *r.c2);
    r.t_obs = std::min(*r.t_fail, c);
    r.delta = *r.t_fail <= c;
  }
}

int cmd_fit(const FitArgs& args) {
  std::vector<SubjectRecord> records = load_csv(args.csv_path);
  const int p = records.empty() ? 0 : static_cast<int>(records.front().z1.size());
  if (args.method == "oracle") rebuild_masked_outcomes(records);

  FitOptions opts;
  opts.positivity_floor = args.positivity_floor;
  opts.truncate_weights = args.truncate_weights;
  if (!args.change_points.empty()) {
    opts.changepoints.change_times = args.change_points;
    opts.changepoints.treatment_index = z1_col_index(args.treatment_col, p);
  }
  for (const std::string& name : args.linkage_cols)
    opts.linkage_covariates.push_back(z1_col_index(name, p));

  const FitReport report = fit_method(method_from_name(args.method), records, opts);

  nlohmann::json echo{
      {"change_points", opts.changepoints.change_times},
      {"csv", args.csv_path},
      {"linkage_covariates", opts.linkage_covariates},
      {"method", args.method},
      {"newton_max_iter", opts.newton.max_iter},
      {"newton_tol", opts.newton.tol},
      {"positivity_floor", opts.positivity_floor},
      {"treatment_index",
       args.change_points.empty() ? nlohmann::json() : nlohmann::json(opts.changepoints.treatment_index)},
      {"truncate_weights", opts.truncate_weights},
  };
  nlohmann::json out = fitreport_to_json(report);
  out["options"] = std::move(echo);
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct SimArgs {
  std::string scenario;
  std::string mechanism = "clar";
  std::string analysis = "correct";
  std::string remedy = "on";
  std::vector<std::string> methods{"oracle", "cc", "ccplus", "nlac", "iplw"};
  int n = 2000;
  int reps = 1000;
  std::uint64_t seed = 0;
  double lcar_p = 0.0;
  std::string out_path;
  std::string emit_data;
  bool latent = false;
  int threads = 0;
  bool refresh_cache = false;
};

int cmd_simulate(const SimArgs& args) {
  ScenarioConfig cfg;
  cfg.scenario = scenario_from_name(args.scenario);
  cfg.mechanism = mechanism_from_name(args.mechanism);
  cfg.analysis = analysis_from_name(args.analysis);
  cfg.remedy = remedy_from_name(args.remedy);
  cfg.n = args.n;
  cfg.seed = args.seed;
  cfg.lcar_p = args.lcar_p;

  std::vector<Method> methods;
  for (const std::string& name : args.methods) methods.push_back(method_from_name(name));

  RunOptions run;
  run.n_threads = args.threads;
  run.refresh_target_cache = args.refresh_cache;

  std::cerr << "config: " << scenario_config_to_json(cfg).dump() << "\n";

  if (!args.emit_data.empty()) {
    // replication 0's dataset, so a later `fit` reproduces the study's first rep
    ScenarioConfig rc = resolve(cfg);
    rc.seed = derive(derive(rc.seed, Var::Rep), 0);
    std::vector<LatentRecord> latents = gen_scenario(rc);
    gen_linkage(latents, rc);
    save_csv(export_records(latents, args.latent), args.emit_data, args.latent);
    std::cerr << "dataset written to " << args.emit_data << "\n";
    if (args.out_path.empty()) return 0;
  }

  const SimReport report = run_replications(cfg, methods, args.reps, run);

  std::ofstream out(args.out_path);
  if (!out) throw InvalidInput("cannot write '" + args.out_path + "'");
  out << simreport_to_json(report).dump(2) << "\n";
  std::cout << emit_table(report, "markdown");
  return 0;
}

int cmd_report(const std::string& json_path, const std::string& format) {
  std::ifstream in(json_path);
  if (!in) throw ParseError("cannot open '" + json_path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report JSON: ") + e.what());
  }
  std::cout << emit_table(simreport_from_json(j), format);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"linked trial-plus-registry Cox estimators"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit", "fit one estimator to a CSV dataset");
  fit->add_option("csv", fit_args.csv_path, "dataset CSV path")->required();
  fit->add_option("--method", fit_args.method, "oracle|cc|ccplus|nlac|iplw")
      ->check(CLI::IsMember({"oracle", "cc", "ccplus", "nlac", "iplw"}));
  fit->add_option("--change-points", fit_args.change_points,
                  "treatment effect change times, e.g. 6.5,7.5")
      ->delimiter(',');
  fit->add_option("--treatment-col", fit_args.treatment_col,
                  "column whose effect changes (default z1_1)");
  fit->add_option("--linkage-covariates", fit_args.linkage_cols,
                  "columns for the linkage model (default: all)")
      ->delimiter(',');
  fit->add_option("--positivity-floor", fit_args.positivity_floor,
                  "warn when a fitted linkage probability falls below this");
  fit->add_flag("--truncate-weights", fit_args.truncate_weights,
                "cap weights at 1/floor instead of only warning");

  SimArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "run a replication study");
  sim->add_option("--scenario", sim_args.scenario, "td-changepoint|motivating|gap")
      ->required()
      ->check(CLI::IsMember({"td-changepoint", "motivating", "gap"}));
  sim->add_option("--mechanism", sim_args.mechanism, "lcar|clar|lnar-t|lnar-c2")
      ->check(CLI::IsMember({"lcar", "clar", "lnar-t", "lnar-c2"}));
  sim->add_option("--analysis", sim_args.analysis, "correct|misspecified")
      ->check(CLI::IsMember({"correct", "misspecified"}));
  sim->add_option("--remedy", sim_args.remedy, "gap handling: on|off|naive")
      ->check(CLI::IsMember({"on", "off", "naive"}));
  sim->add_option("--methods", sim_args.methods, "subset of oracle,cc,ccplus,nlac,iplw")
      ->delimiter(',');
  sim->add_option("--n", sim_args.n, "sample size per replication")
      ->check(CLI::PositiveNumber);
  sim->add_option("--reps", sim_args.reps, "number of replications")
      ->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_args.seed, "master RNG seed (required)")->required();
  sim->add_option("--lcar-p", sim_args.lcar_p, "LCAR linkage probability override");
  sim->add_option("--out", sim_args.out_path,
                  "SimReport JSON output path (required unless --emit-data)");
  sim->add_option("--emit-data", sim_args.emit_data,
                  "write replication 0's dataset as CSV and skip the study unless --out");
  sim->add_flag("--latent", sim_args.latent,
                "include t_fail and c2 columns in --emit-data output");
  sim->add_option("--threads", sim_args.threads, "worker count (0 = auto)");
  sim->add_flag("--refresh-target-cache", sim_args.refresh_cache,
                "recompute the oracle-large-n target even if cached");

  std::string report_path, report_format = "markdown";
  CLI::App* rep = app.add_subcommand("report", "render a SimReport JSON as a table");
  rep->add_option("json", report_path, "SimReport JSON path")->required();
  rep->add_option("--format", report_format, "markdown|csv")
      ->check(CLI::IsMember({"markdown", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (sim->parsed() && sim_args.out_path.empty() && sim_args.emit_data.empty()) {
    std::cerr << "simulate needs --out and/or --emit-data\n";
    return 1;
  }

  try {
    if (fit->parsed()) return cmd_fit(fit_args);
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (rep->parsed()) return cmd_report(report_path, report_format);
  } catch (const linkedcox::Error& e) {
    nlohmann::json err{{"error", {{"type", error_type(e)}, {"message", e.what()}}}};
    std::cout << err.dump(2) << "\n";
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", {{"type", "internal-error"}, {"message", e.what()}}}};
    std::cout << err.dump(2) << "\n";
    std::cerr << "error: " << e.what() << "\n";
    return 6;
  }
  return 1;
}
