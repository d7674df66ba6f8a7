#include "ceitr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ceitr/csv.hpp"
#include "ceitr/errors.hpp"
#include "ceitr/metrics.hpp"
#include "ceitr/rng.hpp"

namespace ceitr::harness {

namespace {

std::vector<std::vector<double>> covariate_matrix(const Cohort& cohort) {
  std::vector<std::vector<double>> x;
  x.reserve(cohort.size());
  for (const Subject& s : cohort.subjects) x.push_back(s.x);
  return x;
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

// Sample standard deviation across replications (n - 1 denominator).
double sd_of(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double center = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - center) * (v - center);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

// Nearest-rank order statistic of a copy of `values` at probability prob.
double percentile(std::vector<double> values, double prob) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto b = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(prob * b));
  rank = std::min(std::max<std::size_t>(rank, 1), values.size());
  return values[rank - 1];
}

struct RepMethodOutcome {
  bool ok = false;
  double accuracy = 0.0;
  double nmb = 0.0;
};

struct RepOutcome {
  bool ok = false;
  double oracle = 0.0;
  std::vector<RepMethodOutcome> methods;
};

RepOutcome run_one_replication(const ScenarioSpec& spec,
                               const std::vector<Method>& methods,
                               std::size_t rep) {
  RepOutcome out;
  out.methods.resize(methods.size());
  dgp::DGPScenario scenario = spec.scenario;
  scenario.seed = derive_seed(spec.seed, 0xA110C000ULL + rep);
  dgp::SimulatedCohort sim;
  nuisance::NuisanceFit fit;
  try {
    sim = dgp::assemble_cohort(scenario, spec.lambda);
    nuisance::ModelSpec model;
    model.misspecified = spec.misspecified;
    fit = nuisance::fit_nuisance(sim.cohort, sim.grid, model, scenario.tau);
  } catch (const std::exception&) {
    return out;  // whole-replication failure
  }
  out.ok = true;
  out.oracle = metrics::oracle_mean_nmb(sim.potentials);
  const std::vector<int> truth = metrics::oracle_labels(sim.potentials);
  const std::vector<std::vector<double>> x = covariate_matrix(sim.cohort);
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    try {
      // The training seed depends on the method identity, not on which
      // subset of methods this run requested.
      const std::uint64_t seed = derive_seed(
          scenario.seed, 0xB000ULL + static_cast<std::uint64_t>(methods[mi]));
      const TrainedRule trained =
          train_method(methods[mi], sim.cohort, sim.grid, fit, spec.lambda,
                       spec.learners, seed);
      const std::vector<int> labels = rule::predict_rule(trained.fitted, x);
      out.methods[mi].accuracy = metrics::classification_accuracy(labels, truth);
      out.methods[mi].nmb = metrics::mean_nmb_under_rule(sim.potentials, labels);
      out.methods[mi].ok = true;
    } catch (const std::exception&) {
      // method-level failure: excluded and counted
    }
  }
  return out;
}

}  // namespace

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = {
      Method::kRegNaive,           Method::kDtAipwUnpartitioned,
      Method::kDtIpwPartitioned,   Method::kDtAipwPartitioned,
      Method::kCrfAipwUnpartitioned, Method::kCrfIpwPartitioned,
      Method::kCrfAipwPartitioned,
  };
  return methods;
}

std::string method_name(Method method) {
  switch (method) {
    case Method::kRegNaive:
      return "reg-naive";
    case Method::kDtAipwUnpartitioned:
      return "dt-aipw-np";
    case Method::kDtIpwPartitioned:
      return "dt-ipw-p";
    case Method::kDtAipwPartitioned:
      return "dt-aipw-p";
    case Method::kCrfAipwUnpartitioned:
      return "crf-aipw-np";
    case Method::kCrfIpwPartitioned:
      return "crf-ipw-p";
    case Method::kCrfAipwPartitioned:
      return "crf-aipw-p";
  }
  throw std::logic_error("unknown method");
}

Method parse_method(const std::string& name) {
  for (Method method : all_methods())
    if (method_name(method) == name) return method;
  throw std::invalid_argument("unknown method: " + name);
}

bool method_is_naive(Method method) { return method == Method::kRegNaive; }

bool method_is_forest(Method method) {
  return method == Method::kCrfAipwUnpartitioned ||
         method == Method::kCrfIpwPartitioned ||
         method == Method::kCrfAipwPartitioned;
}

weights::Estimator method_estimator(Method method) {
  switch (method) {
    case Method::kRegNaive:
      return weights::Estimator::kRegression;
    case Method::kDtAipwUnpartitioned:
    case Method::kCrfAipwUnpartitioned:
      return weights::Estimator::kAipwUnpartitioned;
    case Method::kDtIpwPartitioned:
    case Method::kCrfIpwPartitioned:
      return weights::Estimator::kIpwPartitioned;
    case Method::kDtAipwPartitioned:
    case Method::kCrfAipwPartitioned:
      return weights::Estimator::kAipwPartitioned;
  }
  throw std::logic_error("unknown method");
}

TrainedRule train_method(Method method, const Cohort& cohort,
                         const PartitionGrid& grid,
                         const nuisance::NuisanceFit& fit, double lambda,
                         const LearnerSettings& learners, std::uint64_t seed) {
  TrainedRule out;
  if (method_is_naive(method)) {
    out.fitted.kind = rule::RuleKind::kNaive;
    out.fitted.n_features = cohort.n_covariates();
    out.fitted.seed = seed;
    out.fitted.lambda = lambda;
    out.fitted.survival = fit.survival_fit;
    out.fitted.cost = fit.cost_fit;
    out.fitted.annotation = "naive regression rule";
    return out;
  }

  weights::WeightOptions options;
  options.estimator = method_estimator(method);
  options.lambda = lambda;
  options.grid = grid;
  out.weights = weights::compute_weights(cohort, fit, options);
  const std::vector<std::vector<double>> x = covariate_matrix(cohort);

  if (method_is_forest(method)) {
    forest::ForestConfig config = learners.forest_config;
    config.seed = derive_seed(seed, 0xF07E57ULL);
    // A fixed mtry tuned for the five-covariate benchmark may exceed the
    // width of a narrow external cohort; cap it instead of rejecting.
    if (config.mtry > cohort.n_covariates())
      config.mtry = cohort.n_covariates();
    if (config.mtry == 0) {
      std::vector<std::size_t> candidates =
          learners.mtry_candidates.empty()
              ? forest::default_mtry_candidates(cohort.n_covariates())
              : learners.mtry_candidates;
      config.mtry = candidates.size() == 1
                        ? candidates.front()
                        : forest::select_mtry_cv(x, out.weights.z,
                                                 out.weights.abs_w, candidates,
                                                 learners.mtry_folds, config);
    }
    out.selected_mtry = config.mtry;
    out.fitted =
        forest::fit_conditional_forest(x, out.weights.z, out.weights.abs_w,
                                       config);
  } else {
    tree::TreeConfig config = learners.tree_config;
    config.seed = derive_seed(seed, 0x73EEULL);
    out.fitted =
        tree::fit_weighted_tree(x, out.weights.z, out.weights.abs_w, config);
  }
  return out;
}

ScenarioResult run_scenario(const ScenarioSpec& spec,
                            const std::vector<Method>& methods) {
  if (methods.empty())
    throw std::invalid_argument("run_scenario: no methods requested");
  if (spec.reps == 0)
    throw std::invalid_argument("run_scenario: reps must be >= 1");
  const auto start = std::chrono::steady_clock::now();

  std::vector<RepOutcome> outcomes(spec.reps);
  const std::size_t threads =
      std::max<std::size_t>(1, std::min(spec.threads, spec.reps));
  if (threads == 1) {
    for (std::size_t rep = 0; rep < spec.reps; ++rep)
      outcomes[rep] = run_one_replication(spec, methods, rep);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&]() {
        for (;;) {
          const std::size_t rep = next.fetch_add(1);
          if (rep >= spec.reps) return;
          outcomes[rep] = run_one_replication(spec, methods, rep);
        }
      });
    }
    for (std::thread& worker : pool) worker.join();
  }

  ScenarioResult result;
  result.em_mode = spec.scenario.em_mode;
  result.hte_mode = spec.scenario.hte_mode;
  result.wtp = spec.lambda;
  result.censor_rate = spec.scenario.censor_target;
  result.reps_requested = spec.reps;

  std::vector<double> oracle;
  for (const RepOutcome& rep : outcomes) {
    if (rep.ok)
      oracle.push_back(rep.oracle);
    else
      ++result.reps_failed;
  }
  result.oracle_nmb_mean = mean_of(oracle);
  result.oracle_nmb_sd = sd_of(oracle);

  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    MethodSummary summary;
    summary.method = methods[mi];
    std::vector<double> accuracy, nmb;
    for (const RepOutcome& rep : outcomes) {
      if (rep.ok && rep.methods[mi].ok) {
        accuracy.push_back(rep.methods[mi].accuracy);
        nmb.push_back(rep.methods[mi].nmb);
      }
    }
    summary.reps_used = accuracy.size();
    summary.reps_failed = spec.reps - summary.reps_used;
    summary.accuracy_mean = mean_of(accuracy);
    summary.accuracy_sd = sd_of(accuracy);
    summary.nmb_mean = mean_of(nmb);
    summary.nmb_sd = sd_of(nmb);
    result.methods.push_back(summary);
  }
  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

std::vector<ScenarioResult> run_benchmark(const BenchmarkSpec& spec) {
  const std::vector<Method> methods =
      spec.methods.empty() ? all_methods() : spec.methods;
  std::vector<ScenarioResult> results;
  std::uint64_t cell = 0;
  for (dgp::EffectModification em :
       {dgp::EffectModification::kTimeOnly,
        dgp::EffectModification::kTimeAndCost}) {
    for (dgp::HTEMagnitude hte :
         {dgp::HTEMagnitude::kSmall, dgp::HTEMagnitude::kLarge}) {
      for (double wtp : spec.wtp) {
        for (double censor : spec.censor_rates) {
          ScenarioSpec scenario_spec;
          scenario_spec.scenario.n = spec.n;
          scenario_spec.scenario.em_mode = em;
          scenario_spec.scenario.hte_mode = hte;
          scenario_spec.scenario.censor_target = censor;
          scenario_spec.lambda = wtp;
          scenario_spec.misspecified = spec.misspecified;
          scenario_spec.reps = spec.reps;
          scenario_spec.threads = spec.threads;
          scenario_spec.learners = spec.learners;
          scenario_spec.seed = derive_seed(spec.seed, 0xCE11ULL + cell);
          results.push_back(run_scenario(scenario_spec, methods));
          ++cell;
        }
      }
    }
  }
  return results;
}

void write_benchmark_csv(const std::string& path,
                         const std::vector<ScenarioResult>& results) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  // No timestamps or runtimes in the file: rerunning with the same seed
  // must reproduce it byte for byte.
  out << "em,hte,wtp,censor_rate,reps,failed,oracle_nmb_mean,oracle_nmb_sd";
  if (!results.empty()) {
    for (const MethodSummary& m : results.front().methods) {
      const std::string name = method_name(m.method);
      out << "," << name << "_reps," << name << "_acc_mean," << name
          << "_acc_sd," << name << "_nmb_mean," << name << "_nmb_sd";
    }
  }
  out << "\n";
  for (const ScenarioResult& row : results) {
    out << (row.em_mode == dgp::EffectModification::kTimeOnly ? "em-t"
                                                              : "em-tm")
        << "," << (row.hte_mode == dgp::HTEMagnitude::kSmall ? "small" : "large")
        << "," << csv::format_double(row.wtp) << ","
        << csv::format_double(row.censor_rate) << "," << row.reps_requested
        << "," << row.reps_failed << ","
        << csv::format_double(row.oracle_nmb_mean) << ","
        << csv::format_double(row.oracle_nmb_sd);
    for (const MethodSummary& m : row.methods) {
      out << "," << m.reps_used << "," << csv::format_double(m.accuracy_mean)
          << "," << csv::format_double(m.accuracy_sd) << ","
          << csv::format_double(m.nmb_mean) << ","
          << csv::format_double(m.nmb_sd);
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

BoundaryGrid boundary_grid(
    const std::function<int(const std::vector<double>&)>& labeler,
    std::pair<double, double> x1_range, std::pair<double, double> x2_range,
    std::size_t resolution, const std::vector<double>& fixed_others) {
  if (resolution < 2)
    throw std::invalid_argument("boundary_grid: resolution must be >= 2");
  BoundaryGrid grid;
  grid.x1.reserve(resolution * resolution);
  std::vector<double> row(2 + fixed_others.size());
  std::copy(fixed_others.begin(), fixed_others.end(), row.begin() + 2);
  const double step1 =
      (x1_range.second - x1_range.first) / static_cast<double>(resolution - 1);
  const double step2 =
      (x2_range.second - x2_range.first) / static_cast<double>(resolution - 1);
  for (std::size_t i = 0; i < resolution; ++i) {
    row[0] = x1_range.first + static_cast<double>(i) * step1;
    for (std::size_t j = 0; j < resolution; ++j) {
      row[1] = x2_range.first + static_cast<double>(j) * step2;
      grid.x1.push_back(row[0]);
      grid.x2.push_back(row[1]);
      grid.label.push_back(labeler(row));
    }
  }
  return grid;
}

void write_boundary_csv(const std::string& path, const BoundaryGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "x1,x2,label\n";
  for (std::size_t i = 0; i < grid.label.size(); ++i) {
    out << csv::format_double(grid.x1[i]) << ","
        << csv::format_double(grid.x2[i]) << "," << grid.label[i] << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

int true_rule_label(const std::vector<double>& x,
                    const dgp::DGPScenario& scenario, double lambda) {
  const double gain = lambda * (dgp::true_restricted_mean(x, 1, scenario) -
                                dgp::true_restricted_mean(x, 0, scenario)) -
                      (dgp::true_total_cost_mean(x, 1, scenario) -
                       dgp::true_total_cost_mean(x, 0, scenario));
  return gain > 0.0 ? 1 : 0;
}

double rule_value_estimate(const Cohort& cohort, const std::vector<int>& g,
                           const nuisance::NuisanceInterface& fit,
                           double lambda, std::size_t* dropped) {
  if (g.size() != cohort.size())
    throw std::invalid_argument("rule_value_estimate: label length mismatch");
  double total = 0.0;
  std::size_t used = 0;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const Subject& s = cohort.subjects[i];
    const double e = fit.propensity(s.x);
    const double e_g = g[i] != 0 ? e : 1.0 - e;
    const double k = fit.censor_survivor(s.a, s.u);
    if (!(k > 0.0)) {
      ++skipped;
      continue;
    }
    const double match = s.a == g[i] ? 1.0 : 0.0;
    const double y = lambda * s.u - s.total_cost;
    const double q = lambda * fit.restricted_mean(s.x, g[i]) -
                     fit.total_cost_mean(s.x, g[i]);
    total += match * y * static_cast<double>(s.delta) / (e_g * k) -
             (match - e_g) * q / (e_g * k);
    ++used;
  }
  if (dropped != nullptr) *dropped = skipped;
  return used > 0 ? total / static_cast<double>(used) : 0.0;
}

namespace {

// Cross-validated out-of-fold rule labels for one cohort.
std::vector<int> cross_validated_labels(const Cohort& cohort,
                                        const PartitionGrid& grid,
                                        const AnalyzeOptions& options,
                                        std::uint64_t seed) {
  const std::size_t n = cohort.size();
  const std::size_t folds = std::max<std::size_t>(
      2, std::min<std::size_t>(options.folds, n));
  std::vector<std::size_t> shuffled(n);
  std::iota(shuffled.begin(), shuffled.end(), 0);
  Rng rng(derive_seed(seed, 0xCF01D5ULL));
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(shuffled[i - 1], shuffled[j]);
  }
  std::vector<int> labels(n, 0);
  for (std::size_t f = 0; f < folds; ++f) {
    Cohort train;
    std::vector<std::size_t> test;
    for (std::size_t i = 0; i < n; ++i) {
      if (i % folds == f)
        test.push_back(shuffled[i]);
      else
        train.subjects.push_back(cohort.subjects[shuffled[i]]);
    }
    if (train.subjects.empty() || test.empty()) continue;
    const nuisance::NuisanceFit fit =
        nuisance::fit_nuisance(train, grid, options.model, options.tau);
    const TrainedRule trained =
        train_method(options.method, train, grid, fit, options.lambda,
                     options.learners, derive_seed(seed, 0xF01D00ULL + f));
    for (std::size_t i : test)
      labels[i] = trained.fitted.predict_one(cohort.subjects[i].x);
  }
  return labels;
}

struct ValueTriple {
  double rule = 0.0;
  double treat_all = 0.0;
  double treat_none = 0.0;
};

ValueTriple cohort_values(const Cohort& cohort, const std::vector<int>& labels,
                          const nuisance::NuisanceInterface& fit, double lambda,
                          std::size_t* dropped) {
  ValueTriple out;
  out.rule = rule_value_estimate(cohort, labels, fit, lambda, dropped);
  const std::vector<int> all_ones(cohort.size(), 1);
  const std::vector<int> all_zeros(cohort.size(), 0);
  out.treat_all = rule_value_estimate(cohort, all_ones, fit, lambda, nullptr);
  out.treat_none = rule_value_estimate(cohort, all_zeros, fit, lambda, nullptr);
  return out;
}

PartitionGrid analysis_grid(const Cohort& cohort, const AnalyzeOptions& options) {
  const std::size_t intervals =
      cohort.subjects.empty() ? 0 : cohort.subjects.front().cost_history.size();
  return build_uniform_grid(options.tau, std::max<std::size_t>(1, intervals));
}

}  // namespace

AnalyzeReport analyze_external(const Cohort& cohort,
                               const AnalyzeOptions& options) {
  if (cohort.size() == 0)
    throw std::invalid_argument("analyze: empty cohort");
  const bool partitioned =
      !method_is_naive(options.method) &&
      weights::is_partitioned(method_estimator(options.method));
  const bool has_history = cohort.subjects.front().has_cost_history();
  if (partitioned && !has_history) {
    throw std::invalid_argument(
        "analyze: method " + method_name(options.method) +
        " needs the interval cost history; add m_1..m_J columns to the "
        "cohort CSV or pick an unpartitioned method");
  }
  const PartitionGrid grid = analysis_grid(cohort, options);

  AnalyzeReport report;
  report.n = cohort.size();
  report.folds = std::max<std::size_t>(
      2, std::min<std::size_t>(options.folds, cohort.size()));
  report.method = options.method;
  report.oof_labels = cross_validated_labels(cohort, grid, options, options.seed);
  double treated = 0.0;
  for (int label : report.oof_labels) treated += label;
  report.proportion_treated = treated / static_cast<double>(cohort.size());

  const nuisance::NuisanceFit full_fit =
      nuisance::fit_nuisance(cohort, grid, options.model, options.tau);
  const ValueTriple point =
      cohort_values(cohort, report.oof_labels, full_fit, options.lambda,
                    &report.dropped_value_terms);
  report.value_rule = point.rule;
  report.value_treat_all = point.treat_all;
  report.value_treat_none = point.treat_none;

  if (options.bootstrap > 0) {
    std::vector<double> rule_values, all_values, none_values;
    rule_values.reserve(options.bootstrap);
    for (std::size_t b = 0; b < options.bootstrap; ++b) {
      Rng rng(derive_seed(options.seed, 0xB0075000ULL + b));
      std::vector<std::size_t> draw(cohort.size());
      for (std::size_t& idx : draw)
        idx = static_cast<std::size_t>(rng.below(cohort.size()));
      try {
        if (options.bootstrap_honest) {
          Cohort resampled;
          resampled.subjects.reserve(draw.size());
          for (std::size_t idx : draw)
            resampled.subjects.push_back(cohort.subjects[idx]);
          const std::vector<int> labels = cross_validated_labels(
              resampled, grid, options, derive_seed(options.seed, 0xCB00ULL + b));
          const nuisance::NuisanceFit fit = nuisance::fit_nuisance(
              resampled, grid, options.model, options.tau);
          const ValueTriple values =
              cohort_values(resampled, labels, fit, options.lambda, nullptr);
          rule_values.push_back(values.rule);
          all_values.push_back(values.treat_all);
          none_values.push_back(values.treat_none);
        } else {
          // Fast mode: fixed out-of-fold labels and point nuisances;
          // resample only the evaluation.
          Cohort resampled;
          resampled.subjects.reserve(draw.size());
          std::vector<int> labels;
          labels.reserve(draw.size());
          for (std::size_t idx : draw) {
            resampled.subjects.push_back(cohort.subjects[idx]);
            labels.push_back(report.oof_labels[idx]);
          }
          const ValueTriple values =
              cohort_values(resampled, labels, full_fit, options.lambda,
                            nullptr);
          rule_values.push_back(values.rule);
          all_values.push_back(values.treat_all);
          none_values.push_back(values.treat_none);
        }
      } catch (const std::exception&) {
        // resample failure: excluded from the percentile distribution
      }
    }
    report.bootstrap_resamples = rule_values.size();
    if (!rule_values.empty()) {
      report.rule_ci_lower = percentile(rule_values, 0.025);
      report.rule_ci_upper = percentile(rule_values, 0.975);
      report.treat_all_ci_lower = percentile(all_values, 0.025);
      report.treat_all_ci_upper = percentile(all_values, 0.975);
      report.treat_none_ci_lower = percentile(none_values, 0.025);
      report.treat_none_ci_upper = percentile(none_values, 0.975);
    }
  }

  if (method_is_forest(options.method)) {
    const TrainedRule full_rule =
        train_method(options.method, cohort, grid, full_fit, options.lambda,
                     options.learners, derive_seed(options.seed, 0x1F07ULL));
    forest::ImportanceOptions importance;
    importance.n_permutations = 5;
    importance.seed = derive_seed(options.seed, 0x13A7ULL);
    report.importance =
        forest::conditional_importance(full_rule.fitted,
                                       covariate_matrix(cohort),
                                       full_rule.weights.z,
                                       full_rule.weights.abs_w, importance)
            .importance;
  }
  return report;
}

void write_analysis_csv(const std::string& path, const Cohort& cohort,
                        const AnalyzeReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "id,recommendation\n";
  for (std::size_t i = 0; i < cohort.size(); ++i)
    out << cohort.subjects[i].id << "," << report.oof_labels[i] << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string format_analysis_summary(const AnalyzeReport& report) {
  std::ostringstream out;
  out << "method: " << method_name(report.method) << "\n";
  out << "subjects: " << report.n << "  cv_folds: " << report.folds << "\n";
  out << "proportion_treated: " << csv::format_double(report.proportion_treated)
      << "\n";
  out << "value_rule: " << csv::format_double(report.value_rule) << "  ci: ["
      << csv::format_double(report.rule_ci_lower) << ", "
      << csv::format_double(report.rule_ci_upper) << "]\n";
  out << "value_treat_all: " << csv::format_double(report.value_treat_all)
      << "  ci: [" << csv::format_double(report.treat_all_ci_lower) << ", "
      << csv::format_double(report.treat_all_ci_upper) << "]\n";
  out << "value_treat_none: " << csv::format_double(report.value_treat_none)
      << "  ci: [" << csv::format_double(report.treat_none_ci_lower) << ", "
      << csv::format_double(report.treat_none_ci_upper) << "]\n";
  out << "bootstrap_resamples: " << report.bootstrap_resamples << "\n";
  out << "dropped_value_terms: " << report.dropped_value_terms << "\n";
  if (!report.importance.empty()) {
    out << "importance:";
    for (double v : report.importance) out << " " << csv::format_double(v);
    out << "\n";
  }
  return out.str();
}

}  // namespace ceitr::harness
