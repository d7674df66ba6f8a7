#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "ceitr/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ceitr/csv.hpp"
#include "ceitr/dgp.hpp"
#include "ceitr/metrics.hpp"
#include "ceitr/rng.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace ceitr;
using harness::Method;
using ceitr::test::make_subject;

namespace {

// Minimal nuisance stub with constant predictions for value-estimator
// hand computations.
struct FixedValueNuisance : nuisance::NuisanceInterface {
  double e = 0.5;
  double k1 = 1.0, k0 = 1.0;
  double h1 = 8.0, h0 = 6.0;
  double m1 = 40000.0, m0 = 30000.0;

  double propensity(const std::vector<double>&) const override { return e; }
  double censor_survivor(int arm, double) const override {
    return arm == 1 ? k1 : k0;
  }
  double restricted_mean(const std::vector<double>&, int arm) const override {
    return arm == 1 ? h1 : h0;
  }
  double total_cost_mean(const std::vector<double>&, int arm) const override {
    return arm == 1 ? m1 : m0;
  }
  double interval_cost_mean(std::size_t, const std::vector<double>&,
                            int) const override {
    return 0.0;
  }
  bool has_interval_cost() const override { return false; }
};

std::vector<PotentialOutcomes> toy_potentials() {
  std::vector<PotentialOutcomes> rows(3);
  rows[0].y0 = 10.0;
  rows[0].y1 = 30.0;
  rows[0].g_opt = 1;
  rows[1].y0 = 50.0;
  rows[1].y1 = 20.0;
  rows[1].g_opt = 0;
  rows[2].y0 = -5.0;
  rows[2].y1 = -1.0;
  rows[2].g_opt = 1;
  return rows;
}

harness::ScenarioSpec quick_spec(std::size_t n, std::size_t reps,
                                 double censor, std::uint64_t seed) {
  harness::ScenarioSpec spec;
  spec.scenario.n = n;
  spec.scenario.censor_target = censor;
  spec.scenario.grid_intervals = 4;
  spec.reps = reps;
  spec.seed = seed;
  spec.learners.forest_config.mtry = 2;
  spec.learners.forest_config.n_trees = 30;
  return spec;
}

bool same_summary(const harness::MethodSummary& a,
                  const harness::MethodSummary& b) {
  return a.method == b.method && a.reps_used == b.reps_used &&
         a.accuracy_mean == b.accuracy_mean && a.accuracy_sd == b.accuracy_sd &&
         a.nmb_mean == b.nmb_mean && a.nmb_sd == b.nmb_sd;
}

}  // namespace

TEST_CASE("classification accuracy matches agreement fractions") {
  CHECK(metrics::classification_accuracy({1, 0, 1}, {1, 0, 1}) == 1.0);
  CHECK(metrics::classification_accuracy({0, 1, 0}, {1, 0, 1}) == 0.0);
  CHECK(metrics::classification_accuracy({1, 0, 0, 1}, {1, 1, 0, 0}) == 0.5);
  CHECK_THROWS_AS(metrics::classification_accuracy({1}, {1, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(metrics::classification_accuracy({}, {}),
                  std::invalid_argument);
}

TEST_CASE("mean NMB under a rule averages the chosen potential outcomes") {
  const std::vector<PotentialOutcomes> pot = toy_potentials();
  CHECK(metrics::mean_nmb_under_rule(pot, {0, 0, 0}) ==
        doctest::Approx((10.0 + 50.0 - 5.0) / 3.0).epsilon(1e-12));
  CHECK(metrics::mean_nmb_under_rule(pot, {1, 1, 1}) ==
        doctest::Approx((30.0 + 20.0 - 1.0) / 3.0).epsilon(1e-12));
  // The oracle picks the pointwise maximum.
  CHECK(metrics::oracle_mean_nmb(pot) ==
        doctest::Approx((30.0 + 50.0 - 1.0) / 3.0).epsilon(1e-12));
  CHECK(metrics::oracle_labels(pot) == std::vector<int>{1, 0, 1});
  CHECK_THROWS_AS(metrics::mean_nmb_under_rule(pot, {1}),
                  std::invalid_argument);
}

TEST_CASE("metrics are permutation equivariant in subject order") {
  const std::vector<PotentialOutcomes> pot = toy_potentials();
  const std::vector<int> g = {1, 1, 0};
  std::vector<PotentialOutcomes> reversed(pot.rbegin(), pot.rend());
  const std::vector<int> g_reversed(g.rbegin(), g.rend());
  CHECK(metrics::mean_nmb_under_rule(pot, g) ==
        doctest::Approx(metrics::mean_nmb_under_rule(reversed, g_reversed))
            .epsilon(1e-12));
  CHECK(metrics::classification_accuracy(g, metrics::oracle_labels(pot)) ==
        metrics::classification_accuracy(g_reversed,
                                         metrics::oracle_labels(reversed)));
}

TEST_CASE("method names round-trip and classify learners correctly") {
  CHECK(harness::all_methods().size() == 7);
  for (Method method : harness::all_methods()) {
    CHECK(harness::parse_method(harness::method_name(method)) == method);
  }
  CHECK_THROWS_AS(harness::parse_method("gradient-boost"),
                  std::invalid_argument);
  CHECK(harness::method_is_naive(Method::kRegNaive));
  CHECK(!harness::method_is_forest(Method::kDtAipwPartitioned));
  CHECK(harness::method_is_forest(Method::kCrfIpwPartitioned));
  CHECK(harness::method_estimator(Method::kCrfAipwPartitioned) ==
        weights::Estimator::kAipwPartitioned);
  CHECK(harness::method_estimator(Method::kDtIpwPartitioned) ==
        weights::Estimator::kIpwPartitioned);
}

TEST_CASE("a fixed seed reproduces a scenario run exactly") {
  const harness::ScenarioSpec spec = quick_spec(250, 2, 0.2, 42);
  const std::vector<Method> methods = {Method::kRegNaive,
                                       Method::kDtAipwPartitioned};
  const harness::ScenarioResult a = harness::run_scenario(spec, methods);
  const harness::ScenarioResult b = harness::run_scenario(spec, methods);
  CHECK(a.reps_failed == b.reps_failed);
  CHECK(a.oracle_nmb_mean == b.oracle_nmb_mean);
  CHECK(a.oracle_nmb_sd == b.oracle_nmb_sd);
  REQUIRE(a.methods.size() == b.methods.size());
  for (std::size_t i = 0; i < a.methods.size(); ++i)
    CHECK(same_summary(a.methods[i], b.methods[i]));
}

TEST_CASE("thread count does not change scenario results") {
  harness::ScenarioSpec spec = quick_spec(200, 3, 0.0, 7);
  const std::vector<Method> methods = {Method::kDtAipwUnpartitioned,
                                       Method::kCrfAipwPartitioned};
  const harness::ScenarioResult serial = harness::run_scenario(spec, methods);
  spec.threads = 3;
  const harness::ScenarioResult parallel = harness::run_scenario(spec, methods);
  CHECK(serial.oracle_nmb_mean == parallel.oracle_nmb_mean);
  for (std::size_t i = 0; i < serial.methods.size(); ++i)
    CHECK(same_summary(serial.methods[i], parallel.methods[i]));
}

TEST_CASE("method training seeds ignore which methods ride along") {
  const harness::ScenarioSpec spec = quick_spec(220, 1, 0.0, 99);
  const harness::ScenarioResult alone =
      harness::run_scenario(spec, {Method::kDtAipwPartitioned});
  const harness::ScenarioResult crowd = harness::run_scenario(
      spec, {Method::kRegNaive, Method::kCrfIpwPartitioned,
             Method::kDtAipwPartitioned});
  CHECK(same_summary(alone.methods[0], crowd.methods[2]));
}

TEST_CASE("the naive rule is near-oracle when its models are correct and "
          "censoring is absent") {
  dgp::DGPScenario scenario;
  scenario.n = 10000;
  scenario.grid_intervals = 2;
  scenario.seed = 11;
  const double lambda = 50000.0;
  const dgp::SimulatedCohort sim = dgp::assemble_cohort(scenario, lambda);
  nuisance::ModelSpec model;  // correctly specified
  const nuisance::NuisanceFit fit =
      nuisance::fit_nuisance(sim.cohort, sim.grid, model, scenario.tau);
  const harness::TrainedRule trained =
      harness::train_method(Method::kRegNaive, sim.cohort, sim.grid, fit,
                            lambda, harness::LearnerSettings{}, 11);

  // Against the deterministic optimal rule the plug-in contrast should be
  // nearly exact.  Against realized per-subject labels no rule can clear
  // the noise ceiling (repeating each subject's follow-up under both arms
  // ties or flips a nontrivial share), so that bound is looser.
  std::size_t match_true = 0;
  std::vector<int> predicted;
  predicted.reserve(sim.cohort.size());
  for (const Subject& s : sim.cohort.subjects) {
    const int label = trained.fitted.predict_one(s.x);
    predicted.push_back(label);
    if (label == harness::true_rule_label(s.x, scenario, lambda)) ++match_true;
  }
  CHECK(static_cast<double>(match_true) / sim.cohort.size() >= 0.95);
  const double realized = metrics::classification_accuracy(
      predicted, metrics::oracle_labels(sim.potentials));
  CHECK(realized >= 0.88);
}

TEST_CASE("no method beats the oracle and accuracies stay in range") {
  const harness::ScenarioSpec spec = quick_spec(400, 2, 0.2, 123);
  const harness::ScenarioResult result =
      harness::run_scenario(spec, harness::all_methods());
  CHECK(result.reps_failed == 0);
  for (const harness::MethodSummary& m : result.methods) {
    CHECK(m.reps_used == 2);
    CHECK(m.accuracy_mean >= 0.0);
    CHECK(m.accuracy_mean <= 1.0);
    CHECK(m.nmb_mean <= result.oracle_nmb_mean + 1e-9);
  }
}

TEST_CASE("naive rule predictions reproduce the fitted-model contrast") {
  dgp::DGPScenario scenario;
  scenario.n = 400;
  scenario.grid_intervals = 2;
  scenario.seed = 17;
  const dgp::SimulatedCohort sim = dgp::assemble_cohort(scenario, 50000.0);
  nuisance::ModelSpec model;
  const nuisance::NuisanceFit fit =
      nuisance::fit_nuisance(sim.cohort, sim.grid, model, scenario.tau);
  const harness::TrainedRule trained =
      harness::train_method(Method::kRegNaive, sim.cohort, sim.grid, fit,
                            50000.0, harness::LearnerSettings{}, 5);
  for (std::size_t i = 0; i < 25; ++i) {
    const std::vector<double>& x = sim.cohort.subjects[i].x;
    const double gain = 50000.0 * (fit.survival_fit.restricted_mean(x, 1) -
                                   fit.survival_fit.restricted_mean(x, 0)) -
                        (fit.cost_fit.predict(x, 1) - fit.cost_fit.predict(x, 0));
    CHECK(trained.fitted.predict_one(x) == (gain > 0.0 ? 1 : 0));
  }
}

TEST_CASE("forest training selects mtry by cross-validation when unset") {
  dgp::DGPScenario scenario;
  scenario.n = 260;
  scenario.grid_intervals = 4;
  scenario.seed = 23;
  const dgp::SimulatedCohort sim = dgp::assemble_cohort(scenario, 50000.0);
  nuisance::ModelSpec model;
  const nuisance::NuisanceFit fit =
      nuisance::fit_nuisance(sim.cohort, sim.grid, model, scenario.tau);
  harness::LearnerSettings learners;
  learners.forest_config.n_trees = 15;
  learners.forest_config.mtry = 0;  // request cross-validated selection
  learners.mtry_folds = 3;
  learners.mtry_candidates = {1, 2};
  const harness::TrainedRule a =
      harness::train_method(Method::kCrfAipwPartitioned, sim.cohort, sim.grid,
                            fit, 50000.0, learners, 77);
  CHECK((a.selected_mtry == 1 || a.selected_mtry == 2));
  const harness::TrainedRule b =
      harness::train_method(Method::kCrfAipwPartitioned, sim.cohort, sim.grid,
                            fit, 50000.0, learners, 77);
  CHECK(a.selected_mtry == b.selected_mtry);
}

TEST_CASE("boundary lattices evaluate rules over the covariate plane") {
  const harness::BoundaryGrid zeros = harness::boundary_grid(
      [](const std::vector<double>&) { return 0; }, {-1.0, 1.0}, {-1.0, 1.0},
      5, {0.0, 0.0});
  CHECK(zeros.label.size() == 25);
  CHECK(std::count(zeros.label.begin(), zeros.label.end(), 0) == 25);

  // Depth-one split on x1 at 0: the lattice separates into half-planes.
  rule::FittedRule stump;
  stump.kind = rule::RuleKind::kTree;
  stump.n_features = 3;
  rule::Tree tree;
  tree.nodes.resize(3);
  tree.nodes[0].var = 0;
  tree.nodes[0].threshold = 0.0;
  tree.nodes[0].left = 1;
  tree.nodes[0].right = 2;
  tree.nodes[1].label = 0;
  tree.nodes[2].label = 1;
  stump.trees.push_back(tree);
  const harness::BoundaryGrid half = harness::boundary_grid(
      [&](const std::vector<double>& x) { return stump.predict_one(x); },
      {-2.0, 2.0}, {-2.0, 2.0}, 9, {0.5});
  for (std::size_t i = 0; i < half.label.size(); ++i)
    CHECK(half.label[i] == (half.x1[i] > 0.0 ? 1 : 0));

  const std::string path = "boundary_test.csv";
  harness::write_boundary_csv(path, half);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "x1,x2,label");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  in.close();
  std::remove(path.c_str());
  CHECK(rows == 81);
  CHECK_THROWS_AS(harness::boundary_grid(
                      [](const std::vector<double>&) { return 0; }, {0.0, 1.0},
                      {0.0, 1.0}, 1, {}),
                  std::invalid_argument);
}

TEST_CASE("fitted forest boundary agrees with the oracle lattice under no "
          "censoring") {
  // Decision-boundary counterpart of the benchmark: effect modification on
  // both outcomes, large heterogeneity, lattice over the two modifiers.
  dgp::DGPScenario scenario;
  scenario.n = 3000;
  scenario.em_mode = dgp::EffectModification::kTimeAndCost;
  scenario.hte_mode = dgp::HTEMagnitude::kLarge;
  scenario.grid_intervals = 4;
  scenario.seed = 314;
  const double lambda = 50000.0;
  const dgp::SimulatedCohort sim = dgp::assemble_cohort(scenario, lambda);
  nuisance::ModelSpec model;
  model.misspecified = true;
  const nuisance::NuisanceFit fit =
      nuisance::fit_nuisance(sim.cohort, sim.grid, model, scenario.tau);
  const harness::TrainedRule trained =
      harness::train_method(Method::kCrfAipwPartitioned, sim.cohort, sim.grid,
                            fit, lambda, harness::LearnerSettings{}, 2718);
  const std::vector<double> others = {0.0, 0.0, 0.0};
  const harness::BoundaryGrid fitted_grid = harness::boundary_grid(
      [&](const std::vector<double>& x) { return trained.fitted.predict_one(x); },
      {-2.0, 3.0}, {-2.0, 3.0}, 21, others);
  const harness::BoundaryGrid oracle_grid = harness::boundary_grid(
      [&](const std::vector<double>& x) {
        return harness::true_rule_label(x, scenario, lambda);
      },
      {-2.0, 3.0}, {-2.0, 3.0}, 21, others);
  double agree = 0.0;
  for (std::size_t i = 0; i < fitted_grid.label.size(); ++i)
    agree += fitted_grid.label[i] == oracle_grid.label[i];
  CHECK(agree / static_cast<double>(fitted_grid.label.size()) >= 0.85);
}

TEST_CASE("the rule value estimator matches hand computations and skips "
          "zero censoring weights") {
  Cohort cohort;
  cohort.subjects.push_back(make_subject(1, {0.0}, 1, 10.0, 1, 50000.0));
  cohort.subjects.push_back(make_subject(2, {0.0}, 0, 5.0, 1, 20000.0));
  FixedValueNuisance fit;
  fit.h1 = 10.0;
  fit.m1 = 40000.0;
  fit.h0 = 3.0;
  fit.m0 = 30000.0;
  const double lambda = 10000.0;
  // q1 = 60000, q0 = 0.
  std::size_t dropped = 9;
  const double treat_all =
      harness::rule_value_estimate(cohort, {1, 1}, fit, lambda, &dropped);
  CHECK(dropped == 0);
  // subject 1: 1*50000/0.5 - 0.5*60000/0.5 = 40000
  // subject 2: 0 - (0 - 0.5)*60000/0.5 = 60000
  CHECK(treat_all == doctest::Approx(50000.0).epsilon(1e-12));
  const double treat_none =
      harness::rule_value_estimate(cohort, {0, 0}, fit, lambda, nullptr);
  // subject 1: -(0 - 0.5)*0/0.5 = 0; subject 2: 30000/0.5 - 0.5*0/0.5 = 60000
  CHECK(treat_none == doctest::Approx(30000.0).epsilon(1e-12));

  fit.k0 = 0.0;  // subject 2's censoring weight collapses
  const double partial =
      harness::rule_value_estimate(cohort, {1, 1}, fit, lambda, &dropped);
  CHECK(dropped == 1);
  CHECK(partial == doctest::Approx(40000.0).epsilon(1e-12));
  CHECK_THROWS_AS(harness::rule_value_estimate(cohort, {1}, fit, lambda, nullptr),
                  std::invalid_argument);
}

TEST_CASE("analysis of a simulated cohort beats both uniform rules in at "
          "least 18 of 20 seeded runs") {
  int wins = 0;
  for (int run = 0; run < 20; ++run) {
    dgp::DGPScenario scenario;
    scenario.n = 600;
    scenario.censor_target = 0.2;
    scenario.grid_intervals = 4;
    scenario.hte_mode = dgp::HTEMagnitude::kLarge;
    scenario.seed = 5000 + static_cast<std::uint64_t>(run);
    const dgp::SimulatedCohort sim = dgp::assemble_cohort(scenario, 50000.0);
    harness::AnalyzeOptions options;
    options.method = Method::kCrfAipwPartitioned;
    options.lambda = 50000.0;
    options.tau = scenario.tau;
    options.folds = 10;
    options.bootstrap = 0;
    options.seed = static_cast<std::uint64_t>(run);
    options.learners.forest_config.mtry = 2;
    options.learners.forest_config.n_trees = 30;
    const harness::AnalyzeReport report =
        harness::analyze_external(sim.cohort, options);
    if (report.value_rule >=
        std::max(report.value_treat_all, report.value_treat_none))
      ++wins;
  }
  CHECK(wins >= 18);
}

TEST_CASE("fast bootstrap intervals bracket the point estimate") {
  dgp::DGPScenario scenario;
  scenario.n = 300;
  scenario.grid_intervals = 4;
  scenario.seed = 808;
  const dgp::SimulatedCohort sim = dgp::assemble_cohort(scenario, 50000.0);
  harness::AnalyzeOptions options;
  options.method = Method::kDtAipwPartitioned;
  options.bootstrap = 60;
  options.bootstrap_honest = false;
  options.seed = 4;
  const harness::AnalyzeReport report =
      harness::analyze_external(sim.cohort, options);
  CHECK(report.bootstrap_resamples == 60);
  CHECK(report.rule_ci_lower <= report.value_rule);
  CHECK(report.rule_ci_upper >= report.value_rule);
  CHECK(report.rule_ci_lower <= report.rule_ci_upper);
  CHECK(report.proportion_treated >= 0.0);
  CHECK(report.proportion_treated <= 1.0);
  CHECK(report.oof_labels.size() == sim.cohort.size());
  CHECK(report.importance.empty());  // tree method: no importance table

  // Analysis runs are deterministic in the seed.
  const harness::AnalyzeReport again =
      harness::analyze_external(sim.cohort, options);
  CHECK(again.value_rule == report.value_rule);
  CHECK(again.rule_ci_lower == report.rule_ci_lower);
  CHECK(again.oof_labels == report.oof_labels);
}

TEST_CASE("honest bootstrap reruns the pipeline and forest analyses report "
          "importance") {
  dgp::DGPScenario scenario;
  scenario.n = 250;
  scenario.grid_intervals = 4;
  scenario.seed = 909;
  const dgp::SimulatedCohort sim = dgp::assemble_cohort(scenario, 50000.0);
  harness::AnalyzeOptions options;
  options.method = Method::kCrfAipwPartitioned;
  options.bootstrap = 5;
  options.bootstrap_honest = true;
  options.folds = 5;
  options.seed = 21;
  options.learners.forest_config.mtry = 2;
  options.learners.forest_config.n_trees = 10;
  const harness::AnalyzeReport report =
      harness::analyze_external(sim.cohort, options);
  CHECK(report.bootstrap_resamples == 5);
  CHECK(report.importance.size() == sim.cohort.n_covariates());
  CHECK(report.rule_ci_lower <= report.rule_ci_upper);

  const std::string path = "analysis_test.csv";
  harness::write_analysis_csv(path, sim.cohort, report);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "id,recommendation");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  in.close();
  std::remove(path.c_str());
  CHECK(rows == sim.cohort.size());
  const std::string summary = harness::format_analysis_summary(report);
  CHECK(summary.find("crf-aipw-p") != std::string::npos);
  CHECK(summary.find("importance:") != std::string::npos);
}

TEST_CASE("partitioned analysis without cost history raises an actionable "
          "error") {
  Cohort cohort;
  cohort.subjects.push_back(make_subject(1, {0.5, 0.2}, 1, 4.0, 1, 1000.0));
  cohort.subjects.push_back(make_subject(2, {0.1, -0.2}, 0, 3.0, 1, 800.0));
  harness::AnalyzeOptions options;
  options.method = Method::kCrfAipwPartitioned;
  bool caught = false;
  try {
    harness::analyze_external(cohort, options);
  } catch (const std::invalid_argument& err) {
    caught = true;
    CHECK(std::string(err.what()).find("m_1..m_J") != std::string::npos);
  }
  CHECK(caught);
}

TEST_CASE("the benchmark grid covers 2x2x2x4 cells and round-trips to CSV") {
  harness::BenchmarkSpec spec;
  spec.n = 150;
  spec.reps = 1;
  spec.seed = 60;
  spec.methods = {Method::kRegNaive};
  spec.learners.tree_config.cv_folds = 2;
  std::vector<harness::ScenarioResult> results = harness::run_benchmark(spec);
  CHECK(results.size() == 32);

  const std::string path = "benchmark_test.csv";
  harness::write_benchmark_csv(path, results);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("em,hte,wtp,censor_rate,reps,failed,oracle_nmb_mean,"
                   "oracle_nmb_sd,reg-naive_reps",
                   0) == 0);
  std::size_t rows = 0;
  std::size_t em_t_rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    if (line.rfind("em-t,", 0) == 0) ++em_t_rows;
  }
  in.close();
  std::remove(path.c_str());
  CHECK(rows == 32);
  CHECK(em_t_rows == 16);
}
