// ceitr: cost-effectiveness-guided individualized treatment rules.
//
// Subcommands cover the full pipeline: simulate a benchmark cohort,
// estimate per-subject incremental-NMB classification weights, train and
// apply treatment rules, sweep the scenario grid, export decision-boundary
// lattices, analyze an external cohort, and rank covariates by conditional
// permutation importance.  Every value can come from a sectioned config
// file; a command-line flag always wins over its config key.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ceitr/config.hpp"
#include "ceitr/csv.hpp"
#include "ceitr/dgp.hpp"
#include "ceitr/forest.hpp"
#include "ceitr/harness.hpp"
#include "ceitr/nuisance.hpp"
#include "ceitr/rng.hpp"
#include "ceitr/rule.hpp"
#include "ceitr/weights.hpp"

namespace {

using ceitr::config::Config;

// The config file is optional; an empty path yields an empty config so
// every lookup falls through to the built-in default.
Config load_config(const std::string& path) {
  if (path.empty()) return Config();
  return Config::from_file(path);
}

// Flag-over-config resolution: a value given on the command line stays,
// otherwise the config key applies, otherwise the default already in the
// variable survives.
void fill_int(const CLI::Option* opt, const Config& cfg,
              const std::string& path, std::size_t& var) {
  if (opt->count() == 0 && cfg.has(path))
    var = static_cast<std::size_t>(cfg.get_int(path, 0));
}

void fill_seed(const CLI::Option* opt, const Config& cfg,
               const std::string& path, std::uint64_t& var) {
  if (opt->count() == 0 && cfg.has(path))
    var = static_cast<std::uint64_t>(cfg.get_int(path, 0));
}

void fill_double(const CLI::Option* opt, const Config& cfg,
                 const std::string& path, double& var) {
  if (opt->count() == 0 && cfg.has(path)) var = cfg.get_double(path, var);
}

void fill_string(const CLI::Option* opt, const Config& cfg,
                 const std::string& path, std::string& var) {
  if (opt->count() == 0 && cfg.has(path)) var = cfg.get_string(path, var);
}

void fill_bool(const CLI::Option* opt, const Config& cfg,
               const std::string& path, bool& var) {
  if (opt->count() == 0 && cfg.has(path)) var = cfg.get_bool(path, var);
}

ceitr::dgp::EffectModification parse_em(const std::string& name) {
  if (name == "em-t" || name == "t") return ceitr::dgp::EffectModification::kTimeOnly;
  if (name == "em-tm" || name == "tm")
    return ceitr::dgp::EffectModification::kTimeAndCost;
  throw CLI::ValidationError("--em", "expected em-t or em-tm, got '" + name + "'");
}

ceitr::dgp::HTEMagnitude parse_hte(const std::string& name) {
  if (name == "small" || name == "s") return ceitr::dgp::HTEMagnitude::kSmall;
  if (name == "large" || name == "l") return ceitr::dgp::HTEMagnitude::kLarge;
  throw CLI::ValidationError("--hte", "expected small or large, got '" + name + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& flag) {
  std::vector<double> out;
  for (const std::string& item : split_list(text)) {
    try {
      out.push_back(ceitr::csv::parse_double(item));
    } catch (const std::exception&) {
      throw CLI::ValidationError(flag, "not a number: '" + item + "'");
    }
  }
  return out;
}

// Shared scenario flags (simulate and the boundary oracle).
struct ScenarioArgs {
  std::size_t n = 1000;
  std::string em = "em-tm";
  std::string hte = "small";
  double censor = 0.0;
  std::size_t intervals = 0;  // 0 = six-month grid
  CLI::Option *n_opt = nullptr, *em_opt = nullptr, *hte_opt = nullptr,
              *censor_opt = nullptr, *intervals_opt = nullptr;

  void add(CLI::App* cmd) {
    n_opt = cmd->add_option("--n", n, "Cohort size");
    em_opt = cmd->add_option(
        "--em", em, "Effect modification: em-t (survival only) or em-tm");
    hte_opt = cmd->add_option("--hte", hte,
                              "Treatment-effect heterogeneity: small or large");
    censor_opt =
        cmd->add_option("--censor", censor, "Target censoring fraction in [0,1)");
    intervals_opt = cmd->add_option(
        "--intervals", intervals,
        "Cost-history intervals on (0,tau]; 0 uses six-month intervals");
  }
  void fill(const Config& cfg) {
    fill_int(n_opt, cfg, "dgp.n", n);
    fill_string(em_opt, cfg, "dgp.em", em);
    fill_string(hte_opt, cfg, "dgp.hte", hte);
    fill_double(censor_opt, cfg, "dgp.censor", censor);
    fill_int(intervals_opt, cfg, "dgp.intervals", intervals);
  }
  void apply(ceitr::dgp::DGPScenario& scenario) const {
    scenario.n = n;
    scenario.em_mode = parse_em(em);
    scenario.hte_mode = parse_hte(hte);
    scenario.censor_target = censor;
    scenario.grid_intervals = intervals;
  }
};

// Cost-effectiveness flags shared by everything downstream of simulate.
struct CeArgs {
  double lambda = 50000.0;
  double tau = 20.0;
  CLI::Option *lambda_opt = nullptr, *tau_opt = nullptr;

  void add(CLI::App* cmd) {
    lambda_opt = cmd->add_option("--lambda", lambda,
                                 "Willingness to pay per life-year");
    tau_opt = cmd->add_option("--tau", tau, "Restriction horizon in years");
  }
  void fill(const Config& cfg) {
    fill_double(lambda_opt, cfg, "ce.lambda", lambda);
    fill_double(tau_opt, cfg, "ce.tau", tau);
  }
};

// Learner flags shared by fit, benchmark, analyze, and importance.
struct LearnerArgs {
  ceitr::harness::LearnerSettings settings;
  CLI::Option *trees_opt = nullptr, *mtry_opt = nullptr,
              *forest_depth_opt = nullptr, *min_node_opt = nullptr,
              *subsample_opt = nullptr, *mincriterion_opt = nullptr,
              *tree_depth_opt = nullptr, *tree_folds_opt = nullptr;

  void add(CLI::App* cmd) {
    trees_opt = cmd->add_option("--trees", settings.forest_config.n_trees,
                                "Trees per forest");
    mtry_opt = cmd->add_option(
        "--mtry", settings.forest_config.mtry,
        "Variables sampled per node; 0 selects by cross-validation");
    forest_depth_opt = cmd->add_option(
        "--forest-depth", settings.forest_config.max_depth, "Forest tree depth");
    min_node_opt = cmd->add_option(
        "--min-node", settings.forest_config.min_node,
        "Minimum subjects per forest daughter node");
    subsample_opt = cmd->add_option(
        "--subsample", settings.forest_config.subsample_fraction,
        "Per-tree subsample fraction (without replacement)");
    mincriterion_opt = cmd->add_option(
        "--mincriterion", settings.forest_config.mincriterion,
        "Required 1 - adjusted p-value before a node may split");
    tree_depth_opt = cmd->add_option("--tree-depth", settings.tree_config.max_depth,
                                     "Decision-tree depth");
    tree_folds_opt = cmd->add_option("--tree-cv-folds", settings.tree_config.cv_folds,
                                     "Folds for cost-complexity pruning");
  }
  void fill(const Config& cfg) {
    fill_int(trees_opt, cfg, "forest.trees", settings.forest_config.n_trees);
    fill_int(mtry_opt, cfg, "forest.mtry", settings.forest_config.mtry);
    fill_int(forest_depth_opt, cfg, "forest.max_depth",
             settings.forest_config.max_depth);
    fill_int(min_node_opt, cfg, "forest.min_node", settings.forest_config.min_node);
    fill_double(subsample_opt, cfg, "forest.subsample",
                settings.forest_config.subsample_fraction);
    fill_double(mincriterion_opt, cfg, "forest.mincriterion",
                settings.forest_config.mincriterion);
    fill_int(tree_depth_opt, cfg, "tree.max_depth", settings.tree_config.max_depth);
    fill_int(tree_folds_opt, cfg, "tree.cv_folds", settings.tree_config.cv_folds);
  }
};

// The partition grid for an external cohort: one uniform interval per
// cost-history column, or a single whole-horizon interval without history.
ceitr::PartitionGrid cohort_grid(const ceitr::Cohort& cohort, double tau) {
  const std::size_t intervals =
      cohort.subjects.empty() ? 0 : cohort.subjects.front().cost_history.size();
  return ceitr::build_uniform_grid(tau, std::max<std::size_t>(1, intervals));
}

int run_simulate(const ScenarioArgs& scenario_args, const CeArgs& ce,
                 std::uint64_t seed, const std::string& out,
                 const std::string& potentials_out) {
  ceitr::dgp::DGPScenario scenario;
  scenario_args.apply(scenario);
  scenario.tau = ce.tau;
  scenario.seed = seed;
  const ceitr::dgp::SimulatedCohort sim =
      ceitr::dgp::assemble_cohort(scenario, ce.lambda);
  ceitr::csv::write_cohort_csv(out, sim.cohort);
  std::cout << "wrote " << sim.cohort.size() << " subjects to " << out
            << " (realized censoring "
            << ceitr::csv::format_double(sim.realized_censoring) << ")\n";
  if (!potentials_out.empty()) {
    ceitr::csv::write_potentials_csv(potentials_out, sim.potentials);
    std::cout << "wrote counterfactuals to " << potentials_out << "\n";
  }
  return 0;
}

int run_weights(const std::string& cohort_path, const std::string& estimator,
                const CeArgs& ce, bool misspecified, const std::string& out) {
  const ceitr::Cohort cohort = ceitr::csv::read_cohort_csv(cohort_path);
  const ceitr::PartitionGrid grid = cohort_grid(cohort, ce.tau);
  ceitr::nuisance::ModelSpec model;
  model.misspecified = misspecified;
  const ceitr::nuisance::NuisanceFit fit =
      ceitr::nuisance::fit_nuisance(cohort, grid, model, ce.tau);

  ceitr::weights::WeightOptions options;
  options.estimator = ceitr::weights::parse_estimator(estimator);
  options.lambda = ce.lambda;
  options.grid = grid;
  const ceitr::WeightVector weights =
      ceitr::weights::compute_weights(cohort, fit, options);
  if (weights.dropped_terms > 0)
    std::cerr << "warning: dropped " << weights.dropped_terms
              << " interval terms with a zero censoring-survivor estimate\n";

  std::vector<std::int64_t> ids;
  ids.reserve(cohort.size());
  for (const ceitr::Subject& s : cohort.subjects) ids.push_back(s.id);
  ceitr::csv::write_weights_csv(out, ids, weights);
  std::cout << "wrote " << weights.size() << " weight rows to " << out << "\n";
  return 0;
}

int run_fit(const std::string& cohort_path, const std::string& method_name,
            const CeArgs& ce, bool misspecified, const LearnerArgs& learners,
            std::uint64_t seed, const std::string& out) {
  const ceitr::Cohort cohort = ceitr::csv::read_cohort_csv(cohort_path);
  const ceitr::PartitionGrid grid = cohort_grid(cohort, ce.tau);
  ceitr::nuisance::ModelSpec model;
  model.misspecified = misspecified;
  const ceitr::nuisance::NuisanceFit fit =
      ceitr::nuisance::fit_nuisance(cohort, grid, model, ce.tau);
  const ceitr::harness::Method method =
      ceitr::harness::parse_method(method_name);
  const ceitr::harness::TrainedRule trained = ceitr::harness::train_method(
      method, cohort, grid, fit, ce.lambda, learners.settings, seed);
  ceitr::rule::write_rule(out, trained.fitted);
  std::cout << "fitted " << method_name << ": " << trained.fitted.annotation
            << "\n";
  if (ceitr::harness::method_is_forest(method))
    std::cout << "mtry " << trained.selected_mtry << "\n";
  std::cout << "wrote rule to " << out << "\n";
  return 0;
}

int run_predict(const std::string& model_path, const std::string& cohort_path,
                const std::string& out) {
  const ceitr::rule::FittedRule fitted = ceitr::rule::read_rule(model_path);
  const ceitr::Cohort cohort = ceitr::csv::read_cohort_csv(cohort_path);
  std::vector<std::vector<double>> x;
  x.reserve(cohort.size());
  for (const ceitr::Subject& s : cohort.subjects) x.push_back(s.x);
  const std::vector<int> labels = ceitr::rule::predict_rule(fitted, x);

  std::ofstream file(out, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open for writing: " + out);
  file << "id,recommendation\n";
  for (std::size_t i = 0; i < cohort.size(); ++i)
    file << cohort.subjects[i].id << "," << labels[i] << "\n";
  std::cout << "wrote " << labels.size() << " recommendations to " << out
            << "\n";
  return 0;
}

int run_benchmark(const Config& cfg, std::size_t n, std::size_t reps,
                  std::uint64_t seed, bool misspecified, std::size_t threads,
                  const std::string& methods_list, const std::string& wtp_list,
                  const std::string& censor_list, const LearnerArgs& learners,
                  const std::string& out) {
  ceitr::harness::BenchmarkSpec spec;
  spec.n = n;
  spec.reps = reps;
  spec.seed = seed;
  spec.misspecified = misspecified;
  spec.threads = threads;
  spec.learners = learners.settings;
  const std::string methods_text =
      methods_list.empty() ? cfg.get_string("harness.methods", "") : methods_list;
  for (const std::string& name : split_list(methods_text))
    spec.methods.push_back(ceitr::harness::parse_method(name));
  if (!wtp_list.empty()) spec.wtp = parse_double_list(wtp_list, "--wtp");
  if (!censor_list.empty())
    spec.censor_rates = parse_double_list(censor_list, "--censor");

  const std::vector<ceitr::harness::ScenarioResult> results =
      ceitr::harness::run_benchmark(spec);
  ceitr::harness::write_benchmark_csv(out, results);
  double total_seconds = 0.0;
  for (const ceitr::harness::ScenarioResult& cell : results)
    total_seconds += cell.runtime_seconds;
  std::cout << "wrote " << results.size() << " scenario cells to " << out
            << " (" << ceitr::csv::format_double(total_seconds) << " s)\n";
  return 0;
}

int run_boundary(const std::string& model_path, bool oracle,
                 const ScenarioArgs& scenario_args, const CeArgs& ce,
                 double x1_min, double x1_max, double x2_min, double x2_max,
                 std::size_t resolution, const std::string& fixed_list,
                 const std::string& out) {
  if (oracle == !model_path.empty())
    throw CLI::ValidationError("boundary",
                               "give exactly one of --model or --oracle");
  std::vector<double> fixed = parse_double_list(fixed_list, "--fixed");

  ceitr::harness::BoundaryGrid grid;
  if (oracle) {
    ceitr::dgp::DGPScenario scenario;
    scenario_args.apply(scenario);
    scenario.tau = ce.tau;
    if (fixed.empty()) fixed.assign(3, 0.0);  // x3..x5 at their means
    grid = ceitr::harness::boundary_grid(
        [&](const std::vector<double>& x) {
          return ceitr::harness::true_rule_label(x, scenario, ce.lambda);
        },
        {x1_min, x1_max}, {x2_min, x2_max}, resolution, fixed);
  } else {
    const ceitr::rule::FittedRule fitted = ceitr::rule::read_rule(model_path);
    if (fitted.n_features < 2)
      throw std::invalid_argument("boundary: rule uses fewer than 2 covariates");
    if (fixed.empty()) fixed.assign(fitted.n_features - 2, 0.0);
    grid = ceitr::harness::boundary_grid(
        [&](const std::vector<double>& x) { return fitted.predict_one(x); },
        {x1_min, x1_max}, {x2_min, x2_max}, resolution, fixed);
  }
  ceitr::harness::write_boundary_csv(out, grid);
  std::cout << "wrote " << grid.label.size() << " lattice cells to " << out
            << "\n";
  return 0;
}

int run_analyze(const std::string& cohort_path, const std::string& method_name,
                const CeArgs& ce, bool misspecified, std::size_t folds,
                std::size_t bootstrap, bool fast, const LearnerArgs& learners,
                std::uint64_t seed, const std::string& out) {
  const ceitr::Cohort cohort = ceitr::csv::read_cohort_csv(cohort_path);
  ceitr::harness::AnalyzeOptions options;
  options.method = ceitr::harness::parse_method(method_name);
  options.lambda = ce.lambda;
  options.tau = ce.tau;
  options.model.misspecified = misspecified;
  options.learners = learners.settings;
  options.folds = folds;
  options.bootstrap = bootstrap;
  options.bootstrap_honest = !fast;
  options.seed = seed;
  const ceitr::harness::AnalyzeReport report =
      ceitr::harness::analyze_external(cohort, options);
  if (!out.empty()) ceitr::harness::write_analysis_csv(out, cohort, report);
  std::cout << ceitr::harness::format_analysis_summary(report);
  if (!out.empty())
    std::cout << "wrote per-subject recommendations to " << out << "\n";
  return 0;
}

int run_importance(const std::string& cohort_path,
                   const std::string& method_name, const CeArgs& ce,
                   bool misspecified, const LearnerArgs& learners,
                   std::size_t permutations, std::uint64_t seed,
                   const std::string& out) {
  const ceitr::harness::Method method =
      ceitr::harness::parse_method(method_name);
  if (!ceitr::harness::method_is_forest(method))
    throw std::invalid_argument(
        "importance: requires a forest method (crf-aipw-np, crf-ipw-p, "
        "crf-aipw-p)");
  const ceitr::Cohort cohort = ceitr::csv::read_cohort_csv(cohort_path);
  const ceitr::PartitionGrid grid = cohort_grid(cohort, ce.tau);
  ceitr::nuisance::ModelSpec model;
  model.misspecified = misspecified;
  const ceitr::nuisance::NuisanceFit fit =
      ceitr::nuisance::fit_nuisance(cohort, grid, model, ce.tau);
  const ceitr::harness::TrainedRule trained = ceitr::harness::train_method(
      method, cohort, grid, fit, ce.lambda, learners.settings,
      ceitr::derive_seed(seed, 0x1F07ULL));

  std::vector<std::vector<double>> x;
  x.reserve(cohort.size());
  for (const ceitr::Subject& s : cohort.subjects) x.push_back(s.x);
  ceitr::forest::ImportanceOptions options;
  options.n_permutations = permutations;
  options.seed = ceitr::derive_seed(seed, 0x13A7ULL);
  const ceitr::forest::ImportanceResult result =
      ceitr::forest::conditional_importance(trained.fitted, x,
                                            trained.weights.z,
                                            trained.weights.abs_w, options);

  std::ofstream file(out, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open for writing: " + out);
  file << "variable,importance,marginal_fallbacks\n";
  for (std::size_t k = 0; k < result.importance.size(); ++k)
    file << "x" << (k + 1) << ","
         << ceitr::csv::format_double(result.importance[k]) << ","
         << result.marginal_fallbacks[k] << "\n";
  std::cout << "wrote importance for " << result.importance.size()
            << " covariates to " << out << " (" << result.trees_used
            << " trees)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cost-effective individualized treatment rules"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path,
                 "Sectioned key-value config file; flags override its keys");

  // simulate
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Generate a benchmark cohort (and optional counterfactuals)");
  ScenarioArgs sim_scenario;
  sim_scenario.add(simulate);
  CeArgs sim_ce;
  sim_ce.add(simulate);
  std::uint64_t sim_seed = 0;
  CLI::Option* sim_seed_opt =
      simulate->add_option("--seed", sim_seed, "Generator seed");
  std::string sim_out = "cohort.csv";
  simulate->add_option("--out", sim_out, "Cohort CSV path");
  std::string sim_potentials;
  simulate->add_option("--potentials", sim_potentials,
                       "Also write the counterfactual records here");

  // weights
  CLI::App* weights_cmd = app.add_subcommand(
      "weights", "Estimate per-subject incremental-NMB classification weights");
  std::string weights_cohort;
  weights_cmd->add_option("--cohort", weights_cohort, "Cohort CSV")->required();
  std::string weights_estimator = "aipw-partitioned";
  CLI::Option* weights_estimator_opt = weights_cmd->add_option(
      "--estimator", weights_estimator,
      "regression, aipw, ipw-partitioned, or aipw-partitioned");
  CeArgs weights_ce;
  weights_ce.add(weights_cmd);
  bool weights_misspecified = false;
  CLI::Option* weights_mis_opt = weights_cmd->add_flag(
      "--misspecified", weights_misspecified,
      "Drop the treatment-x1 interaction from the outcome models");
  std::string weights_out = "weights.csv";
  weights_cmd->add_option("--out", weights_out, "Weight CSV path");

  // fit
  CLI::App* fit_cmd = app.add_subcommand("fit", "Train a treatment rule");
  std::string fit_cohort;
  fit_cmd->add_option("--cohort", fit_cohort, "Cohort CSV")->required();
  std::string fit_method = "crf-aipw-p";
  CLI::Option* fit_method_opt =
      fit_cmd->add_option("--method", fit_method,
                          "reg-naive, dt-aipw-np, dt-ipw-p, dt-aipw-p, "
                          "crf-aipw-np, crf-ipw-p, or crf-aipw-p");
  CeArgs fit_ce;
  fit_ce.add(fit_cmd);
  bool fit_misspecified = false;
  CLI::Option* fit_mis_opt = fit_cmd->add_flag(
      "--misspecified", fit_misspecified,
      "Drop the treatment-x1 interaction from the outcome models");
  LearnerArgs fit_learners;
  fit_learners.add(fit_cmd);
  std::uint64_t fit_seed = 0;
  CLI::Option* fit_seed_opt = fit_cmd->add_option("--seed", fit_seed, "Training seed");
  std::string fit_out = "rule.txt";
  fit_cmd->add_option("--out", fit_out, "Rule file path");

  // predict
  CLI::App* predict_cmd =
      app.add_subcommand("predict", "Apply a saved rule to a cohort");
  std::string predict_model;
  predict_cmd->add_option("--model", predict_model, "Rule file")->required();
  std::string predict_cohort;
  predict_cmd->add_option("--cohort", predict_cohort, "Cohort CSV")->required();
  std::string predict_out = "recommendations.csv";
  predict_cmd->add_option("--out", predict_out, "Recommendation CSV path");

  // benchmark
  CLI::App* benchmark_cmd = app.add_subcommand(
      "benchmark", "Run the scenario grid and write per-method summaries");
  std::size_t bench_n = 1000;
  CLI::Option* bench_n_opt =
      benchmark_cmd->add_option("--n", bench_n, "Subjects per replication");
  std::size_t bench_reps = 50;
  CLI::Option* bench_reps_opt =
      benchmark_cmd->add_option("--reps", bench_reps, "Replications per cell");
  std::uint64_t bench_seed = 0;
  benchmark_cmd->add_option("--seed", bench_seed, "Master seed")->required();
  bool bench_correct = false;
  CLI::Option* bench_correct_opt = benchmark_cmd->add_flag(
      "--correct-models", bench_correct,
      "Fit correctly specified outcome models instead of the benchmark's "
      "misspecified ones");
  std::size_t bench_threads = 1;
  CLI::Option* bench_threads_opt =
      benchmark_cmd->add_option("--threads", bench_threads, "Worker threads");
  std::string bench_methods;
  benchmark_cmd->add_option("--methods", bench_methods,
                            "Comma-separated method subset (default all 7)");
  std::string bench_wtp;
  benchmark_cmd->add_option("--wtp", bench_wtp,
                            "Comma-separated WTP grid (default 50000,100000)");
  std::string bench_censor;
  benchmark_cmd->add_option(
      "--censor", bench_censor,
      "Comma-separated censoring grid (default 0,0.2,0.5,0.7)");
  LearnerArgs bench_learners;
  bench_learners.add(benchmark_cmd);
  std::string bench_out = "benchmark.csv";
  benchmark_cmd->add_option("--out", bench_out, "Results CSV path");

  // boundary
  CLI::App* boundary_cmd = app.add_subcommand(
      "boundary", "Evaluate a rule or the closed-form oracle on an (x1,x2) lattice");
  std::string boundary_model;
  boundary_cmd->add_option("--model", boundary_model, "Rule file");
  bool boundary_oracle = false;
  boundary_cmd->add_flag("--oracle", boundary_oracle,
                         "Use the scenario's true optimal rule");
  ScenarioArgs boundary_scenario;
  boundary_scenario.add(boundary_cmd);
  CeArgs boundary_ce;
  boundary_ce.add(boundary_cmd);
  double b_x1_min = -2.0, b_x1_max = 4.0, b_x2_min = -2.0, b_x2_max = 4.0;
  boundary_cmd->add_option("--x1-min", b_x1_min, "Lattice lower bound for x1");
  boundary_cmd->add_option("--x1-max", b_x1_max, "Lattice upper bound for x1");
  boundary_cmd->add_option("--x2-min", b_x2_min, "Lattice lower bound for x2");
  boundary_cmd->add_option("--x2-max", b_x2_max, "Lattice upper bound for x2");
  std::size_t boundary_resolution = 101;
  boundary_cmd->add_option("--resolution", boundary_resolution,
                           "Lattice points per axis");
  std::string boundary_fixed;
  boundary_cmd->add_option("--fixed", boundary_fixed,
                           "Comma-separated values for the remaining "
                           "covariates (default all 0)");
  std::string boundary_out = "boundary.csv";
  boundary_cmd->add_option("--out", boundary_out, "Lattice CSV path");

  // analyze
  CLI::App* analyze_cmd = app.add_subcommand(
      "analyze", "Cross-validated rule analysis of an external cohort");
  std::string analyze_cohort;
  analyze_cmd->add_option("--cohort", analyze_cohort, "Cohort CSV")->required();
  std::string analyze_method = "crf-aipw-p";
  CLI::Option* analyze_method_opt =
      analyze_cmd->add_option("--method", analyze_method, "Rule method");
  CeArgs analyze_ce;
  analyze_ce.add(analyze_cmd);
  bool analyze_misspecified = false;
  CLI::Option* analyze_mis_opt = analyze_cmd->add_flag(
      "--misspecified", analyze_misspecified,
      "Drop the treatment-x1 interaction from the outcome models");
  std::size_t analyze_folds = 10;
  CLI::Option* analyze_folds_opt =
      analyze_cmd->add_option("--folds", analyze_folds, "Cross-validation folds");
  std::size_t analyze_bootstrap = 1000;
  CLI::Option* analyze_bootstrap_opt = analyze_cmd->add_option(
      "--bootstrap", analyze_bootstrap, "Bootstrap resamples (0 disables CIs)");
  bool analyze_fast = false;
  CLI::Option* analyze_fast_opt = analyze_cmd->add_flag(
      "--fast-bootstrap", analyze_fast,
      "Resample only the evaluation instead of the whole pipeline");
  LearnerArgs analyze_learners;
  analyze_learners.settings = ceitr::harness::analysis_learners();
  analyze_learners.add(analyze_cmd);
  std::uint64_t analyze_seed = 0;
  CLI::Option* analyze_seed_opt =
      analyze_cmd->add_option("--seed", analyze_seed, "Analysis seed");
  std::string analyze_out;
  analyze_cmd->add_option("--out", analyze_out,
                          "Per-subject recommendation CSV path");

  // importance
  CLI::App* importance_cmd = app.add_subcommand(
      "importance", "Conditional permutation importance of a forest rule");
  std::string importance_cohort;
  importance_cmd->add_option("--cohort", importance_cohort, "Cohort CSV")
      ->required();
  std::string importance_method = "crf-aipw-p";
  CLI::Option* importance_method_opt =
      importance_cmd->add_option("--method", importance_method, "Forest method");
  CeArgs importance_ce;
  importance_ce.add(importance_cmd);
  bool importance_misspecified = false;
  CLI::Option* importance_mis_opt = importance_cmd->add_flag(
      "--misspecified", importance_misspecified,
      "Drop the treatment-x1 interaction from the outcome models");
  LearnerArgs importance_learners;
  importance_learners.add(importance_cmd);
  std::size_t importance_permutations = 5;
  importance_cmd->add_option("--permutations", importance_permutations,
                             "Permutations per (tree, covariate) pair");
  std::uint64_t importance_seed = 0;
  CLI::Option* importance_seed_opt =
      importance_cmd->add_option("--seed", importance_seed, "Importance seed");
  std::string importance_out = "importance.csv";
  importance_cmd->add_option("--out", importance_out, "Importance CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    const Config cfg = load_config(config_path);

    if (app.got_subcommand(simulate)) {
      sim_scenario.fill(cfg);
      sim_ce.fill(cfg);
      fill_seed(sim_seed_opt, cfg, "dgp.seed", sim_seed);
      return run_simulate(sim_scenario, sim_ce, sim_seed, sim_out,
                          sim_potentials);
    }
    if (app.got_subcommand(weights_cmd)) {
      weights_ce.fill(cfg);
      fill_string(weights_estimator_opt, cfg, "nuisance.estimator",
                  weights_estimator);
      fill_bool(weights_mis_opt, cfg, "nuisance.misspecified",
                weights_misspecified);
      return run_weights(weights_cohort, weights_estimator, weights_ce,
                         weights_misspecified, weights_out);
    }
    if (app.got_subcommand(fit_cmd)) {
      fit_ce.fill(cfg);
      fit_learners.fill(cfg);
      fill_string(fit_method_opt, cfg, "harness.method", fit_method);
      fill_bool(fit_mis_opt, cfg, "nuisance.misspecified", fit_misspecified);
      fill_seed(fit_seed_opt, cfg, "harness.seed", fit_seed);
      return run_fit(fit_cohort, fit_method, fit_ce, fit_misspecified,
                     fit_learners, fit_seed, fit_out);
    }
    if (app.got_subcommand(predict_cmd))
      return run_predict(predict_model, predict_cohort, predict_out);
    if (app.got_subcommand(benchmark_cmd)) {
      bench_learners.fill(cfg);
      fill_int(bench_n_opt, cfg, "dgp.n", bench_n);
      fill_int(bench_reps_opt, cfg, "harness.reps", bench_reps);
      fill_int(bench_threads_opt, cfg, "harness.threads", bench_threads);
      bool misspecified = !bench_correct;
      if (bench_correct_opt->count() == 0 && cfg.has("nuisance.misspecified"))
        misspecified = cfg.get_bool("nuisance.misspecified", true);
      return run_benchmark(cfg, bench_n, bench_reps, bench_seed, misspecified,
                           bench_threads, bench_methods, bench_wtp,
                           bench_censor, bench_learners, bench_out);
    }
    if (app.got_subcommand(boundary_cmd)) {
      boundary_scenario.fill(cfg);
      boundary_ce.fill(cfg);
      return run_boundary(boundary_model, boundary_oracle, boundary_scenario,
                          boundary_ce, b_x1_min, b_x1_max, b_x2_min, b_x2_max,
                          boundary_resolution, boundary_fixed, boundary_out);
    }
    if (app.got_subcommand(analyze_cmd)) {
      analyze_ce.fill(cfg);
      analyze_learners.fill(cfg);
      fill_string(analyze_method_opt, cfg, "harness.method", analyze_method);
      fill_bool(analyze_mis_opt, cfg, "nuisance.misspecified",
                analyze_misspecified);
      fill_int(analyze_folds_opt, cfg, "harness.folds", analyze_folds);
      fill_int(analyze_bootstrap_opt, cfg, "harness.bootstrap",
               analyze_bootstrap);
      bool honest = !analyze_fast;
      if (analyze_fast_opt->count() == 0 && cfg.has("harness.honest"))
        honest = cfg.get_bool("harness.honest", true);
      analyze_fast = !honest;
      fill_seed(analyze_seed_opt, cfg, "harness.seed", analyze_seed);
      return run_analyze(analyze_cohort, analyze_method, analyze_ce,
                         analyze_misspecified, analyze_folds, analyze_bootstrap,
                         analyze_fast, analyze_learners, analyze_seed,
                         analyze_out);
    }
    if (app.got_subcommand(importance_cmd)) {
      importance_ce.fill(cfg);
      importance_learners.fill(cfg);
      fill_string(importance_method_opt, cfg, "harness.method",
                  importance_method);
      fill_bool(importance_mis_opt, cfg, "nuisance.misspecified",
                importance_misspecified);
      fill_seed(importance_seed_opt, cfg, "harness.seed", importance_seed);
      return run_importance(importance_cohort, importance_method, importance_ce,
                            importance_misspecified, importance_learners,
                            importance_permutations, importance_seed,
                            importance_out);
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
