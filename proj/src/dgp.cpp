#include "ceitr/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ceitr/errors.hpp"
#include "ceitr/rng.hpp"

namespace ceitr::dgp {

namespace {

constexpr std::uint64_t kCovariateTag = 1;
constexpr std::uint64_t kTreatmentTag = 2;
constexpr std::uint64_t kSurvivalTag = 3;
constexpr std::uint64_t kCensorTag = 4;
constexpr std::uint64_t kCostTag = 5;

constexpr double kFollowUpFloor = 5.0;  // years guaranteed before censoring

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double restricted_mean_exponential(double rate, double tau) {
  if (rate <= 0.0) return tau;
  const double rt = rate * tau;
  if (rt < 1e-12) return tau * (1.0 - 0.5 * rt);
  return -std::expm1(-rt) / rate;
}

void DGPScenario::validate() const {
  if (n == 0) throw std::invalid_argument("cohort size must be positive");
  if (censor_target < 0.0 || censor_target >= 1.0) {
    throw std::invalid_argument("censor_target must lie in [0, 1)");
  }
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!(baseline_hazard > 0.0)) {
    throw std::invalid_argument("baseline hazard must be positive");
  }
  if (randomized_propensity &&
      (*randomized_propensity <= 0.0 || *randomized_propensity >= 1.0)) {
    throw std::invalid_argument("randomized propensity must lie in (0, 1)");
  }
}

std::vector<std::vector<double>> sample_covariates(std::size_t n,
                                                   std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("need at least one subject");
  Rng rng(derive_seed(seed, kCovariateTag));
  const double sd12 = std::sqrt(2.0);
  std::vector<std::vector<double>> X(n, std::vector<double>(5));
  for (std::size_t i = 0; i < n; ++i) {
    X[i][0] = rng.normal(1.0, sd12);
    X[i][1] = rng.normal(1.0, sd12);
    X[i][2] = rng.normal();
    X[i][3] = rng.normal();
    X[i][4] = rng.normal();
  }
  return X;
}

double treatment_logit(const std::vector<double>& x) {
  return 0.5 * x[0] + 0.5 * x[1] + 0.9 * x[2];
}

std::vector<int> assign_treatment(const std::vector<std::vector<double>>& X,
                                  std::uint64_t seed,
                                  std::optional<double> randomized) {
  Rng rng(derive_seed(seed, kTreatmentTag));
  std::vector<int> a(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (X[i].size() < 3) throw std::invalid_argument("need 5 covariates");
    const double p = randomized ? *randomized : expit(treatment_logit(X[i]));
    a[i] = rng.bernoulli(p) ? 1 : 0;
  }
  return a;
}

double survival_rate(const std::vector<double>& x, int a,
                     const DGPScenario& scenario) {
  double lin = 0.0;
  for (std::size_t k = 0; k < 5; ++k) lin += scenario.beta_t[k] * x[k];
  if (a == 1) {
    const auto gamma = scenario.gamma_t();
    lin -= gamma[0] * x[0] + gamma[1] * x[1];
  }
  return scenario.baseline_hazard * std::exp(lin);
}

PotentialSurvival sample_potential_survival(
    const std::vector<std::vector<double>>& X, const DGPScenario& scenario,
    std::uint64_t seed) {
  Rng rng(derive_seed(seed, kSurvivalTag));
  const std::size_t n = X.size();
  PotentialSurvival out;
  out.t_star0.resize(n);
  out.t_star1.resize(n);
  out.t0.resize(n);
  out.t1.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = -std::log(rng.uniform_pos());  // shared across arms
    out.t_star0[i] = e / survival_rate(X[i], 0, scenario);
    out.t_star1[i] = e / survival_rate(X[i], 1, scenario);
    out.t0[i] = std::min(out.t_star0[i], scenario.tau);
    out.t1[i] = std::min(out.t_star1[i], scenario.tau);
  }
  return out;
}

CensoringDraw calibrate_censoring(const DGPScenario& scenario,
                                  const std::vector<double>& t_star_assigned,
                                  std::uint64_t seed) {
  const std::size_t n = t_star_assigned.size();
  CensoringDraw draw;
  if (scenario.censor_target == 0.0) {
    draw.times.assign(n, std::numeric_limits<double>::infinity());
    return draw;
  }

  Rng rng(derive_seed(seed, kCensorTag));
  std::vector<double> exp_units(n);  // C = floor + unit / rate
  for (std::size_t i = 0; i < n; ++i) {
    exp_units[i] = -std::log(rng.uniform_pos());
  }

  const auto realized = [&](double rate) {
    std::size_t censored = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = kFollowUpFloor + exp_units[i] / rate;
      if (c < std::min(t_star_assigned[i], scenario.tau)) ++censored;
    }
    return static_cast<double>(censored) / static_cast<double>(n);
  };

  const double tol = 0.01;
  double lo = 1e-10, hi = 1.0;
  // Expand until the upper end overshoots the target (or provably cannot).
  for (int k = 0; k < 60 && realized(hi) < scenario.censor_target; ++k) {
    hi *= 4.0;
  }
  double rate = hi, f = realized(hi);
  bool ok = std::fabs(f - scenario.censor_target) <= tol;
  for (int it = 0; it < 100 && !ok; ++it) {
    rate = 0.5 * (lo + hi);
    f = realized(rate);
    if (std::fabs(f - scenario.censor_target) <= tol) {
      ok = true;
      break;
    }
    if (f < scenario.censor_target) {
      lo = rate;
    } else {
      hi = rate;
    }
  }
  if (!ok) {
    throw CalibrationFailure(
        "censoring calibration did not reach target " +
        std::to_string(scenario.censor_target) + " (best " +
        std::to_string(f) + ")");
  }

  draw.rate = rate;
  draw.realized_rate = f;
  draw.times.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    draw.times[i] = kFollowUpFloor + exp_units[i] / rate;
  }
  return draw;
}

double cost_theta(const std::vector<double>& x, int a,
                  const DGPScenario& scenario) {
  double lin = 0.0;
  for (std::size_t k = 0; k < 5; ++k) lin += scenario.beta_m[k] * x[k];
  if (a == 1) {
    lin += scenario.em_mode == EffectModification::kTimeAndCost
               ? scenario.gamma_m * (x[0] + x[1])
               : 2.0 * scenario.gamma_m;
  }
  return std::exp(lin);
}

std::vector<std::array<CostComponents, 2>> sample_costs(
    const std::vector<std::vector<double>>& X, const DGPScenario& scenario,
    std::uint64_t seed) {
  Rng rng(derive_seed(seed, kCostTag));
  std::vector<std::array<CostComponents, 2>> out(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) {
    // Unit-scale gamma draws shared across arms; only theta differs.
    const double g_init = rng.gamma(scenario.kappa, 1.0);
    const double g_ongoing = rng.gamma(scenario.kappa, 1.0);
    const double g_death = rng.gamma(scenario.kappa, 1.0);
    for (int a = 0; a < 2; ++a) {
      const double theta = cost_theta(X[i], a, scenario);
      out[i][a].initial = g_init * theta;
      out[i][a].ongoing = g_ongoing * 0.6 * theta;
      out[i][a].death = g_death * 0.2 * theta;
    }
  }
  return out;
}

namespace {

// Allocate one subject's observed cost over the grid: initial lump in the
// first interval, ongoing cost proportional to time alive, death lump in
// the interval containing an observed death.
std::vector<double> allocate_cost_history(const CostComponents& parts,
                                          double mult, double u,
                                          int death_observed,
                                          const PartitionGrid& grid) {
  const std::size_t J = grid.intervals();
  std::vector<double> m(J, 0.0);
  m[0] += mult * parts.initial;
  for (std::size_t j = 0; j < J; ++j) {
    const double left = grid.knots[j];
    const double right = grid.knots[j + 1];
    const double overlap = std::max(0.0, std::min(u, right) - left);
    m[j] += mult * parts.ongoing * overlap;
    if (death_observed == 1) {
      const bool in_interval = (u > left && u <= right) || (j == 0 && u == 0.0);
      if (in_interval) m[j] += mult * parts.death;
    }
  }
  return m;
}

}  // namespace

SimulatedCohort assemble_cohort(const DGPScenario& scenario, double lambda) {
  scenario.validate();
  const std::size_t n = scenario.n;
  const std::uint64_t seed = scenario.seed;

  auto X = sample_covariates(n, seed);
  auto a = assign_treatment(X, seed, scenario.randomized_propensity);
  auto surv = sample_potential_survival(X, scenario, seed);
  auto costs = sample_costs(X, scenario, seed);

  std::vector<double> t_star_assigned(n);
  for (std::size_t i = 0; i < n; ++i) {
    t_star_assigned[i] = a[i] == 1 ? surv.t_star1[i] : surv.t_star0[i];
  }
  auto censor = calibrate_censoring(scenario, t_star_assigned, seed);

  SimulatedCohort sim;
  sim.grid = build_uniform_grid(scenario.tau, scenario.effective_grid_intervals());
  sim.censor_rate_param = censor.rate;
  sim.realized_censoring = censor.realized_rate;
  sim.cohort.subjects.resize(n);
  sim.potentials.resize(n);

  const double mult = scenario.cost_multiplier;
  for (std::size_t i = 0; i < n; ++i) {
    const double t_star = t_star_assigned[i];
    const double c = censor.times[i];
    const double u = std::min({t_star, c, scenario.tau});
    const int delta = std::min(t_star, scenario.tau) <= c ? 1 : 0;
    const int death_observed = t_star <= std::min(c, scenario.tau) ? 1 : 0;

    const CostComponents& parts = costs[i][a[i]];
    Subject& s = sim.cohort.subjects[i];
    s.id = static_cast<std::int64_t>(i) + 1;
    s.x = X[i];
    s.a = a[i];
    s.u = u;
    s.delta = delta;
    s.death_observed = death_observed;
    s.total_cost =
        mult * (parts.initial + parts.ongoing * u + parts.death * death_observed);
    s.cost_history =
        allocate_cost_history(parts, mult, u, death_observed, sim.grid);

    PotentialOutcomes& po = sim.potentials[i];
    po.t0 = surv.t0[i];
    po.t1 = surv.t1[i];
    const int d0 = surv.t_star0[i] <= scenario.tau ? 1 : 0;
    const int d1 = surv.t_star1[i] <= scenario.tau ? 1 : 0;
    po.m0 = mult * (costs[i][0].initial + costs[i][0].ongoing * po.t0 +
                    costs[i][0].death * d0);
    po.m1 = mult * (costs[i][1].initial + costs[i][1].ongoing * po.t1 +
                    costs[i][1].death * d1);
    po.y0 = lambda * po.t0 - po.m0;
    po.y1 = lambda * po.t1 - po.m1;
    po.delta_y = po.y1 - po.y0;
    po.g_opt = po.delta_y > 0.0 ? 1 : 0;
  }
  return sim;
}

double true_restricted_mean(const std::vector<double>& x, int a,
                            const DGPScenario& scenario) {
  return restricted_mean_exponential(survival_rate(x, a, scenario),
                                     scenario.tau);
}

double true_total_cost_mean(const std::vector<double>& x, int a,
                            const DGPScenario& scenario) {
  const double rate = survival_rate(x, a, scenario);
  const double theta = cost_theta(x, a, scenario);
  const double mean_t = restricted_mean_exponential(rate, scenario.tau);
  const double p_death = -std::expm1(-rate * scenario.tau);
  return scenario.cost_multiplier * scenario.kappa * theta *
         (1.0 + 0.6 * mean_t + 0.2 * p_death);
}

double true_interval_cost_mean(const std::vector<double>& x, int a,
                               const PartitionGrid& grid, std::size_t interval,
                               const DGPScenario& scenario) {
  const double rate = survival_rate(x, a, scenario);
  const double theta = cost_theta(x, a, scenario);
  const double left = grid.knots[interval];
  const double right = grid.knots[interval + 1];
  const double surv_mass = std::exp(-rate * left) - std::exp(-rate * right);
  // E[time alive within the interval] and P(death in the interval).
  const double mean_overlap = surv_mass / rate;
  double value = 0.6 * mean_overlap + 0.2 * surv_mass;
  if (interval == 0) value += 1.0;
  return scenario.cost_multiplier * scenario.kappa * theta * value;
}

double true_delta_y(const std::vector<double>& x, double lambda,
                    const DGPScenario& scenario) {
  const double dt =
      true_restricted_mean(x, 1, scenario) - true_restricted_mean(x, 0, scenario);
  const double dm =
      true_total_cost_mean(x, 1, scenario) - true_total_cost_mean(x, 0, scenario);
  return lambda * dt - dm;
}

}  // namespace ceitr::dgp
