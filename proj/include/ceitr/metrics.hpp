#pragma once

#include <vector>

#include "ceitr/core.hpp"

namespace ceitr::metrics {

// Fraction of subjects assigned to the same arm by both rules.  Throws
// std::invalid_argument on a length mismatch or empty input.
double classification_accuracy(const std::vector<int>& g_hat,
                               const std::vector<int>& g_opt);

// Mean counterfactual net monetary benefit realized under a rule:
// mean of y1 * g + y0 * (1 - g).
double mean_nmb_under_rule(const std::vector<PotentialOutcomes>& potentials,
                           const std::vector<int>& g_hat);

// The per-subject optimal labels recorded with the potentials.
std::vector<int> oracle_labels(const std::vector<PotentialOutcomes>& potentials);

// Mean NMB under the oracle rule; no estimated rule can beat it on the
// same potentials.
double oracle_mean_nmb(const std::vector<PotentialOutcomes>& potentials);

}  // namespace ceitr::metrics
