#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "ceitr/core.hpp"

namespace ceitr::dgp {

// Restricted mean of an exponential survival time: E[min(T, tau)] for
// T ~ Exp(rate).  Stable for rates near zero.
double restricted_mean_exponential(double rate, double tau);

enum class EffectModification { kTimeAndCost, kTimeOnly };  // EM-TM vs EM-T
enum class HTEMagnitude { kSmall, kLarge };

// Synthetic-cohort recipe: confounded treatment, exponential survival with
// treatment-covariate interactions, three-part gamma costs, and censoring
// calibrated to a target rate on top of a five-year follow-up floor.
struct DGPScenario {
  std::size_t n = 1000;
  EffectModification em_mode = EffectModification::kTimeAndCost;
  HTEMagnitude hte_mode = HTEMagnitude::kSmall;
  std::array<double, 5> beta_t{0.8, 0.8, 0.3, 0.3, 0.3};
  std::array<double, 5> beta_m{0.8, 0.8, 0.3, 0.3, 0.3};
  double gamma_m = 0.03;
  double kappa = 2.5;
  double baseline_hazard = 0.1;
  double censor_target = 0.0;  // fraction in [0, 1)
  double tau = 20.0;
  double cost_multiplier = 1000.0;
  std::uint64_t seed = 0;
  // Number of uniform cost-history intervals; 0 means six-month intervals.
  std::size_t grid_intervals = 0;
  // When set, treatment is randomized Bernoulli(p) instead of confounded.
  std::optional<double> randomized_propensity;

  std::array<double, 2> gamma_t() const {
    return hte_mode == HTEMagnitude::kSmall ? std::array<double, 2>{2.0, 1.5}
                                            : std::array<double, 2>{2.5, 2.0};
  }
  std::size_t effective_grid_intervals() const {
    return grid_intervals > 0
               ? grid_intervals
               : static_cast<std::size_t>(2.0 * tau + 0.5);
  }
  void validate() const;
};

// n x 5 covariate draw: X1, X2 ~ N(1, 2); X3..X5 ~ N(0, 1).
std::vector<std::vector<double>> sample_covariates(std::size_t n,
                                                   std::uint64_t seed);

double treatment_logit(const std::vector<double>& x);

std::vector<int> assign_treatment(const std::vector<std::vector<double>>& X,
                                  std::uint64_t seed,
                                  std::optional<double> randomized = {});

// Hazard rate for arm a given covariates.
double survival_rate(const std::vector<double>& x, int a,
                     const DGPScenario& scenario);

struct PotentialSurvival {
  std::vector<double> t_star0, t_star1;  // unrestricted
  std::vector<double> t0, t1;            // restricted at tau
};

// Inversion sampling with one shared uniform per subject across arms, so
// counterfactual contrasts are smooth in the covariates.
PotentialSurvival sample_potential_survival(
    const std::vector<std::vector<double>>& X, const DGPScenario& scenario,
    std::uint64_t seed);

struct CensoringDraw {
  double rate = 0.0;            // calibrated exponential rate past the floor
  std::vector<double> times;    // censoring times, +inf when target is zero
  double realized_rate = 0.0;   // fraction censored at the calibrated rate
};

// Censoring times C = 5 + Exp(rate); the rate is found by bisection so the
// realized fraction with C < min(T*, tau) lands within +-1% of the target.
// Throws CalibrationFailure when 100 bisection steps cannot get there.
CensoringDraw calibrate_censoring(const DGPScenario& scenario,
                                  const std::vector<double>& t_star_assigned,
                                  std::uint64_t seed);

// Three-part cost components for one subject and arm, already scaled by the
// gamma draws but not yet by the currency multiplier: an initial lump, an
// ongoing per-year rate, and a death lump.
struct CostComponents {
  double initial = 0.0;
  double ongoing = 0.0;
  double death = 0.0;
};

// Gamma scale parameter for the cost components.
double cost_theta(const std::vector<double>& x, int a,
                  const DGPScenario& scenario);

// One unit-gamma triple per subject, shared across arms; arm components are
// the shared draws rescaled by the arm's theta.
std::vector<std::array<CostComponents, 2>> sample_costs(
    const std::vector<std::vector<double>>& X, const DGPScenario& scenario,
    std::uint64_t seed);

struct SimulatedCohort {
  Cohort cohort;
  std::vector<PotentialOutcomes> potentials;
  PartitionGrid grid;
  double censor_rate_param = 0.0;  // calibrated rate, 0 when uncensored
  double realized_censoring = 0.0;
};

// Full generation pass: covariates, treatment, potential survival, costs,
// calibrated censoring, observed data with an interval cost history on the
// scenario grid, and per-subject counterfactual records.
SimulatedCohort assemble_cohort(const DGPScenario& scenario, double lambda);

// Closed-form conditional means under the scenario, used as oracle
// nuisances and for lattice exports of the true rule.
double true_restricted_mean(const std::vector<double>& x, int a,
                            const DGPScenario& scenario);
double true_total_cost_mean(const std::vector<double>& x, int a,
                            const DGPScenario& scenario);
double true_interval_cost_mean(const std::vector<double>& x, int a,
                               const PartitionGrid& grid, std::size_t interval,
                               const DGPScenario& scenario);
double true_delta_y(const std::vector<double>& x, double lambda,
                    const DGPScenario& scenario);

}  // namespace ceitr::dgp
