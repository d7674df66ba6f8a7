#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "ceitr/core.hpp"

namespace ceitr::nuisance {

// Specification for the working models: which covariates get treatment
// interactions, the misspecification toggle, propensity clipping, and
// solver tolerances.
struct ModelSpec {
  bool misspecified = false;  // drop the A*x1 interaction from outcome models
  // Covariate indices that interact with treatment in the outcome models.
  std::vector<std::size_t> interaction_covariates{0, 1};
  double propensity_clip = 0.01;
  // Interval cost fits with fewer usable subjects fall back to arm means.
  std::size_t min_interval_count = 10;
  std::size_t max_iterations = 100;
  double tolerance = 1e-8;

  // Interaction set actually used by outcome models.
  std::vector<std::size_t> active_interactions() const;
};

// Design row for the outcome models: [1, x, a, a*x_k for active k].
std::vector<double> outcome_design_row(const std::vector<double>& x, int a,
                                       const ModelSpec& spec);

// Abstract nuisance supplier consumed by the weight estimators.  The
// fitted implementation below is the production path; tests inject
// closed-form truths through the same interface.
class NuisanceInterface {
 public:
  virtual ~NuisanceInterface() = default;
  virtual double propensity(const std::vector<double>& x) const = 0;
  // Censoring survivor K_a evaluated as the left limit K_a(t^-).
  virtual double censor_survivor(int arm, double t) const = 0;
  virtual double restricted_mean(const std::vector<double>& x,
                                 int arm) const = 0;
  virtual double total_cost_mean(const std::vector<double>& x,
                                 int arm) const = 0;
  virtual double interval_cost_mean(std::size_t interval,
                                    const std::vector<double>& x,
                                    int arm) const = 0;
  virtual bool has_interval_cost() const = 0;
};

// Logistic propensity model over [1, x1..xp].
struct PropensityFit {
  std::vector<double> coef;
  double clip = 0.01;
  bool separation_flag = false;

  double predict(const std::vector<double>& x) const;
};

// Nonincreasing right-continuous step function with value 1 at t=0,
// dropping at each recorded jump time; evaluated at left limits.
struct StepFunction {
  std::vector<double> jump_times;   // ascending
  std::vector<double> after_value;  // value just after each jump

  double left_limit(double t) const;
};

// Arm-stratified product-limit estimate of the censoring survivor.
struct CensorFit {
  std::array<StepFunction, 2> survivor;

  double eval(int arm, double t) const {
    return survivor[static_cast<std::size_t>(arm)].left_limit(t);
  }
};

// Exponential proportional-hazards outcome model; log-rate is linear in
// the outcome design row.
struct SurvivalFit {
  std::vector<double> coef;
  ModelSpec spec;
  double tau = 20.0;

  double rate(const std::vector<double>& x, int a) const;
  double restricted_mean(const std::vector<double>& x, int a) const;
  double survivor(double t, const std::vector<double>& x, int a) const;
};

// Gamma GLM (log link) for the total cost.
struct CostFit {
  std::vector<double> coef;
  ModelSpec spec;
  // Largest response seen at fit time; predictions are capped here so a
  // log-link extrapolation cannot leave the observed cost range.
  double response_cap = 0.0;

  double predict(const std::vector<double>& x, int a) const;
};

// Per-interval gamma GLMs for the cost accrued in each grid interval,
// with a stratified-mean fallback for sparse or degenerate intervals.
struct IntervalCostFit {
  struct Interval {
    bool fallback = false;
    std::array<double, 2> arm_mean{0.0, 0.0};
    std::vector<double> coef;
    double response_cap = 0.0;
  };
  std::vector<Interval> intervals;
  ModelSpec spec;

  std::size_t fallback_count() const;
  double predict(std::size_t interval, const std::vector<double>& x,
                 int a) const;
};

// All fitted nuisances bundled behind the estimator-facing interface.
class NuisanceFit : public NuisanceInterface {
 public:
  PropensityFit propensity_fit;
  CensorFit censor_fit;
  SurvivalFit survival_fit;
  CostFit cost_fit;
  IntervalCostFit interval_cost_fit;  // empty when no cost history

  double propensity(const std::vector<double>& x) const override {
    return propensity_fit.predict(x);
  }
  double censor_survivor(int arm, double t) const override {
    return censor_fit.eval(arm, t);
  }
  double restricted_mean(const std::vector<double>& x, int arm) const override {
    return survival_fit.restricted_mean(x, arm);
  }
  double total_cost_mean(const std::vector<double>& x, int arm) const override {
    return cost_fit.predict(x, arm);
  }
  double interval_cost_mean(std::size_t interval, const std::vector<double>& x,
                            int arm) const override {
    return interval_cost_fit.predict(interval, x, arm);
  }
  bool has_interval_cost() const override {
    return !interval_cost_fit.intervals.empty();
  }
};

// Fitters.  X is row-major n x p; A, U, delta, M are aligned columns.
PropensityFit fit_propensity(const std::vector<std::vector<double>>& X,
                             const std::vector<int>& A, const ModelSpec& spec);

CensorFit fit_censor_survivor(const std::vector<double>& U,
                              const std::vector<int>& delta,
                              const std::vector<int>& A);

// `events` flags observed deaths; everyone else is right-censored at U.
SurvivalFit fit_survival_outcome(const std::vector<std::vector<double>>& X,
                                 const std::vector<int>& A,
                                 const std::vector<double>& U,
                                 const std::vector<int>& events,
                                 const ModelSpec& spec, double tau);

CostFit fit_cost_outcome(const std::vector<std::vector<double>>& X,
                         const std::vector<int>& A,
                         const std::vector<double>& M,
                         const std::vector<int>& delta, const ModelSpec& spec);

IntervalCostFit fit_interval_cost(const Cohort& cohort,
                                  const PartitionGrid& grid,
                                  const ModelSpec& spec);

// One-stop fit of everything the weight estimators need.  The interval
// cost models are fitted only when every subject carries a cost history
// matching the grid.
NuisanceFit fit_nuisance(const Cohort& cohort, const PartitionGrid& grid,
                         const ModelSpec& spec, double tau);

}  // namespace ceitr::nuisance
