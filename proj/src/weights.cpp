#include "ceitr/weights.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "ceitr/errors.hpp"

namespace ceitr::weights {

namespace {

// Survival contrast shared by both augmented estimators: IPW terms with
// model augmentation for complete observations, model imputation for
// censored ones.  No censoring survivor enters here.
double augmented_survival_contrast(const Subject& s, double e, double h1,
                                   double h0) {
  const double a = static_cast<double>(s.a);
  if (s.delta == 1) {
    const double arm1 = a * s.u / e - (a - e) * h1 / e;
    const double arm0 = (1.0 - a) * s.u / (1.0 - e) + (a - e) * h0 / (1.0 - e);
    return arm1 - arm0;
  }
  return a * h1 - (1.0 - a) * h0;
}

// Survival contrast for the plain IPW estimator: observed restricted
// time reweighted by treatment probability, model imputation when
// censored.
double ipw_survival_contrast(const Subject& s, double e, double h1, double h0) {
  const double a = static_cast<double>(s.a);
  if (s.delta == 1) return a * s.u / e - (1.0 - a) * s.u / (1.0 - e);
  return a * h1 - (1.0 - a) * h0;
}

}  // namespace

Estimator parse_estimator(const std::string& name) {
  if (name == "regression") return Estimator::kRegression;
  if (name == "aipw") return Estimator::kAipwUnpartitioned;
  if (name == "ipw-partitioned") return Estimator::kIpwPartitioned;
  if (name == "aipw-partitioned") return Estimator::kAipwPartitioned;
  throw std::invalid_argument("unknown estimator: " + name);
}

std::string estimator_name(Estimator estimator) {
  switch (estimator) {
    case Estimator::kRegression:
      return "regression";
    case Estimator::kAipwUnpartitioned:
      return "aipw";
    case Estimator::kIpwPartitioned:
      return "ipw-partitioned";
    case Estimator::kAipwPartitioned:
      return "aipw-partitioned";
  }
  throw InvalidState("unreachable estimator value");
}

bool is_partitioned(Estimator estimator) {
  return estimator == Estimator::kIpwPartitioned ||
         estimator == Estimator::kAipwPartitioned;
}

WeightVector compute_weights(const Cohort& cohort,
                             const nuisance::NuisanceInterface& nuisance,
                             const WeightOptions& options) {
  const std::size_t n = cohort.subjects.size();
  const bool partitioned = is_partitioned(options.estimator);
  const std::size_t J = options.grid.intervals();
  if (partitioned && J == 0)
    throw InvalidState("partitioned estimators need a partition grid");
  if (partitioned && options.estimator == Estimator::kAipwPartitioned &&
      !nuisance.has_interval_cost())
    throw InvalidState("augmented partitioned estimator needs interval cost models");

  if (partitioned) {
    for (const Subject& s : cohort.subjects)
      if (s.cost_history.size() != J)
        throw InvalidState("cost history does not match the partition grid");
  }

  WeightVector out;
  out.delta_t_hat.resize(n);
  out.delta_m_hat.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const Subject& s = cohort.subjects[i];
    const double a = static_cast<double>(s.a);
    const double e = nuisance.propensity(s.x);
    const double h1 = nuisance.restricted_mean(s.x, 1);
    const double h0 = nuisance.restricted_mean(s.x, 0);

    double dt = 0.0;
    double dm = 0.0;
    switch (options.estimator) {
      case Estimator::kRegression: {
        dt = h1 - h0;
        dm = nuisance.total_cost_mean(s.x, 1) - nuisance.total_cost_mean(s.x, 0);
        break;
      }
      case Estimator::kAipwUnpartitioned: {
        dt = augmented_survival_contrast(s, e, h1, h0);
        if (s.delta == 1) {
          const double k1 = nuisance.censor_survivor(1, s.u);
          const double k0 = nuisance.censor_survivor(0, s.u);
          if (k1 <= 0.0 || k0 <= 0.0)
            throw DegenerateWeight(
                "censoring survivor is zero at an observed event time");
          const double m1 = nuisance.total_cost_mean(s.x, 1);
          const double m0 = nuisance.total_cost_mean(s.x, 0);
          const double arm1 =
              a * s.total_cost / (e * k1) - (a - e) * m1 / (e * k1);
          const double arm0 = (1.0 - a) * s.total_cost / ((1.0 - e) * k0) +
                              (a - e) * m0 / ((1.0 - e) * k0);
          dm = arm1 - arm0;
        }
        break;
      }
      case Estimator::kIpwPartitioned: {
        dt = ipw_survival_contrast(s, e, h1, h0);
        const IntervalQuantities parts = interval_quantities(s, options.grid);
        for (std::size_t j = 0; j < J; ++j) {
          if (parts.delta[j] != 1) continue;
          const double k = nuisance.censor_survivor(s.a, parts.u[j]);
          if (k <= 0.0) {
            ++out.dropped_terms;
            continue;
          }
          const double mj = s.cost_history[j];
          dm += a * mj / (e * k) - (1.0 - a) * mj / ((1.0 - e) * k);
        }
        break;
      }
      case Estimator::kAipwPartitioned: {
        dt = augmented_survival_contrast(s, e, h1, h0);
        const IntervalQuantities parts = interval_quantities(s, options.grid);
        for (std::size_t j = 0; j < J; ++j) {
          if (parts.delta[j] != 1) continue;
          const double k1 = nuisance.censor_survivor(1, parts.u[j]);
          const double k0 = nuisance.censor_survivor(0, parts.u[j]);
          if (k1 <= 0.0 || k0 <= 0.0) {
            ++out.dropped_terms;
            continue;
          }
          const double mj = s.cost_history[j];
          const double mj1 = nuisance.interval_cost_mean(j, s.x, 1);
          const double mj0 = nuisance.interval_cost_mean(j, s.x, 0);
          const double arm1 = a * mj / (e * k1) - (a - e) * mj1 / (e * k1);
          const double arm0 = (1.0 - a) * mj / ((1.0 - e) * k0) +
                              (a - e) * mj0 / ((1.0 - e) * k0);
          dm += arm1 - arm0;
        }
        break;
      }
    }
    if (!std::isfinite(dt) || !std::isfinite(dm))
      throw DegenerateWeight("non-finite benefit contrast for subject " +
                             std::to_string(s.id));
    out.delta_t_hat[i] = dt;
    out.delta_m_hat[i] = dm;
  }

  out.finalize(options.lambda);
  return out;
}

}  // namespace ceitr::weights
