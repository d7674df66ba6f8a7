#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ceitr/core.hpp"
#include "ceitr/dgp.hpp"
#include "ceitr/forest.hpp"
#include "ceitr/nuisance.hpp"
#include "ceitr/rule.hpp"
#include "ceitr/tree.hpp"
#include "ceitr/weights.hpp"

namespace ceitr::harness {

// The seven benchmarked methods: the regression-naive baseline plus each
// classifier (decision tree DT, conditional random forest CRF) paired with
// each incremental-NMB weight estimator.
enum class Method {
  kRegNaive,
  kDtAipwUnpartitioned,
  kDtIpwPartitioned,
  kDtAipwPartitioned,
  kCrfAipwUnpartitioned,
  kCrfIpwPartitioned,
  kCrfAipwPartitioned,
};

const std::vector<Method>& all_methods();
std::string method_name(Method method);
Method parse_method(const std::string& name);
bool method_is_naive(Method method);
bool method_is_forest(Method method);
// The weight estimator behind a non-naive method.
weights::Estimator method_estimator(Method method);

// Classifier settings shared by the scenario runner and the analysis
// pipeline.  A forest mtry of 0 requests per-fit cross-validated selection
// over `mtry_candidates` (default_mtry_candidates(p) when empty).
struct LearnerSettings {
  tree::TreeConfig tree_config;
  // Benchmark-tuned forest: deeper trees than the standalone default and a
  // fixed mtry of 3, which cross-validation selects most often on the
  // simulated designs; runs that want per-fit selection set mtry back to 0.
  forest::ForestConfig forest_config{
      .n_trees = 100, .mtry = 3, .max_depth = 8};
  std::size_t mtry_folds = 10;
  std::vector<std::size_t> mtry_candidates;
};

// Learner settings for external-cohort analysis: identical to the
// benchmark defaults except that mtry is selected by cross-validation.
inline LearnerSettings analysis_learners() {
  LearnerSettings settings;
  settings.forest_config.mtry = 0;
  return settings;
}

// One method's rule trained on one cohort.
struct TrainedRule {
  rule::FittedRule fitted;
  // Classification inputs (empty for the naive baseline).
  WeightVector weights;
  std::size_t selected_mtry = 0;  // forest methods only
};

// Fit a method's treatment rule from a cohort and its fitted nuisances.
// The naive baseline repackages the outcome regressions; the others build
// classification weights and train the matching learner.
TrainedRule train_method(Method method, const Cohort& cohort,
                         const PartitionGrid& grid,
                         const nuisance::NuisanceFit& fit, double lambda,
                         const LearnerSettings& learners, std::uint64_t seed);

struct ScenarioSpec {
  dgp::DGPScenario scenario;  // per-replication seeds derive from `seed`
  double lambda = 50000.0;
  // Omit the treatment interaction with x1 from the fitted outcome models.
  bool misspecified = true;
  std::size_t reps = 50;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  LearnerSettings learners;
};

struct MethodSummary {
  Method method = Method::kRegNaive;
  std::size_t reps_used = 0;
  std::size_t reps_failed = 0;
  double accuracy_mean = 0.0;
  double accuracy_sd = 0.0;
  double nmb_mean = 0.0;
  double nmb_sd = 0.0;
};

struct ScenarioResult {
  dgp::EffectModification em_mode = dgp::EffectModification::kTimeAndCost;
  dgp::HTEMagnitude hte_mode = dgp::HTEMagnitude::kSmall;
  double wtp = 0.0;
  double censor_rate = 0.0;
  std::size_t reps_requested = 0;
  std::size_t reps_failed = 0;  // whole-replication failures
  double oracle_nmb_mean = 0.0;
  double oracle_nmb_sd = 0.0;
  std::vector<MethodSummary> methods;
  double runtime_seconds = 0.0;
};

// Simulate `reps` cohorts, fit every method on each, and score both
// metrics against each replication's own counterfactuals.  Replications
// are independent units with derived seeds; failures are excluded and
// counted (whole replication or single method).  Results do not depend on
// the thread count.
ScenarioResult run_scenario(const ScenarioSpec& spec,
                            const std::vector<Method>& methods);

// The full 2 (effect modification) x 2 (effect size) x 2 (willingness to
// pay) x 4 (censoring) benchmark grid.
struct BenchmarkSpec {
  std::size_t n = 1000;
  std::size_t reps = 50;
  std::uint64_t seed = 0;
  bool misspecified = true;
  std::size_t threads = 1;
  LearnerSettings learners;
  std::vector<Method> methods;  // empty = all seven
  std::vector<double> wtp = {50000.0, 100000.0};
  std::vector<double> censor_rates = {0.0, 0.2, 0.5, 0.7};
};

std::vector<ScenarioResult> run_benchmark(const BenchmarkSpec& spec);

// results CSV: one row per scenario cell, scenario fields then per-method
// accuracy/NMB summaries.
void write_benchmark_csv(const std::string& path,
                         const std::vector<ScenarioResult>& results);

// Decision-boundary lattice: evaluates a labeler over an (x1, x2) grid
// with the remaining covariates fixed.
struct BoundaryGrid {
  std::vector<double> x1;
  std::vector<double> x2;
  std::vector<int> label;
};

BoundaryGrid boundary_grid(
    const std::function<int(const std::vector<double>&)>& labeler,
    std::pair<double, double> x1_range, std::pair<double, double> x2_range,
    std::size_t resolution, const std::vector<double>& fixed_others);

// CSV columns x1,x2,label.
void write_boundary_csv(const std::string& path, const BoundaryGrid& grid);

// The true-optimal label at x under a simulation scenario: treat when
// wtp * (h1 - h0) - (m1 - m0) > 0 in closed form.
int true_rule_label(const std::vector<double>& x,
                    const dgp::DGPScenario& scenario, double lambda);

// External-cohort analysis: 10-fold cross-validated rule labels, an AIPW
// value estimate for the learned and uniform rules, percentile bootstrap
// intervals, and (for forest methods) variable importance.
struct AnalyzeOptions {
  Method method = Method::kCrfAipwPartitioned;
  double lambda = 50000.0;
  double tau = 20.0;
  nuisance::ModelSpec model;  // defaults to correctly specified
  // External cohorts have no tuned mtry, so analysis runs select it by
  // cross-validation (mtry = 0) instead of the benchmark's fixed value.
  LearnerSettings learners = analysis_learners();
  std::size_t folds = 10;
  std::size_t bootstrap = 1000;
  // Honest resamples rerun the whole cross-validation pipeline; the fast
  // mode keeps the point-estimate rule and resamples only the evaluation.
  bool bootstrap_honest = true;
  std::uint64_t seed = 0;
};

struct AnalyzeReport {
  std::size_t n = 0;
  std::size_t folds = 0;
  Method method = Method::kCrfAipwPartitioned;
  std::vector<int> oof_labels;  // out-of-fold recommendation per subject
  double proportion_treated = 0.0;
  double value_rule = 0.0;
  double value_treat_all = 0.0;
  double value_treat_none = 0.0;
  double rule_ci_lower = 0.0, rule_ci_upper = 0.0;
  double treat_all_ci_lower = 0.0, treat_all_ci_upper = 0.0;
  double treat_none_ci_lower = 0.0, treat_none_ci_upper = 0.0;
  std::size_t bootstrap_resamples = 0;
  // Subjects skipped by the value estimator because a censoring-survivor
  // estimate hit zero.
  std::size_t dropped_value_terms = 0;
  std::vector<double> importance;  // per covariate; empty for non-forests
};

AnalyzeReport analyze_external(const Cohort& cohort,
                               const AnalyzeOptions& options);

// AIPW value of fixed arm recommendations on observed data.  For subject i
// with recommendation g, propensity-of-recommended-arm e_g and censoring
// survivor K of the observed arm at u:
//   I{A=g} * Y * delta / (e_g K) - (I{A=g} - e_g) * Qhat_g / (e_g K)
// averaged over subjects, where Y = lambda*u - cost and Qhat_g is the
// regression NMB prediction under arm g.  Subjects with K <= 0 are skipped
// and counted through `dropped`.
double rule_value_estimate(const Cohort& cohort, const std::vector<int>& g,
                           const nuisance::NuisanceInterface& fit,
                           double lambda, std::size_t* dropped);

// report CSV (one row per subject: id, recommendation) plus a human
// summary block; see the analyze subcommand.
void write_analysis_csv(const std::string& path, const Cohort& cohort,
                        const AnalyzeReport& report);
std::string format_analysis_summary(const AnalyzeReport& report);

}  // namespace ceitr::harness
