#pragma once

#include <string>

#include "ceitr/core.hpp"
#include "ceitr/nuisance.hpp"

namespace ceitr::weights {

// Contrast estimators for the per-subject net-monetary-benefit weight.
//
//   kRegression        plug-in regression differences; no censoring or
//                      treatment-assignment correction
//   kAipwUnpartitioned augmented IPW on the whole follow-up interval
//   kIpwPartitioned    IPW with the cost accumulated per grid interval
//   kAipwPartitioned   augmented IPW with per-interval cost terms
enum class Estimator {
  kRegression,
  kAipwUnpartitioned,
  kIpwPartitioned,
  kAipwPartitioned,
};

Estimator parse_estimator(const std::string& name);
std::string estimator_name(Estimator estimator);
bool is_partitioned(Estimator estimator);

struct WeightOptions {
  Estimator estimator = Estimator::kAipwPartitioned;
  double lambda = 50000.0;  // willingness to pay per unit of survival
  PartitionGrid grid;       // required by the partitioned estimators
};

// Computes the per-subject survival and cost contrasts, combines them
// into weights w = lambda * dT - dM, and derives class labels
// z = I{w > 0} (ties resolved to the control arm).
//
// Throws DegenerateWeight when the unpartitioned estimator needs a
// censoring survivor value that is exactly zero.  The partitioned
// estimators instead drop the affected interval terms and count them in
// WeightVector::dropped_terms.
WeightVector compute_weights(const Cohort& cohort,
                             const nuisance::NuisanceInterface& nuisance,
                             const WeightOptions& options);

}  // namespace ceitr::weights
