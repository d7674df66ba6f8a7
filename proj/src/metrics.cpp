#include "ceitr/metrics.hpp"

#include <stdexcept>

namespace ceitr::metrics {

double classification_accuracy(const std::vector<int>& g_hat,
                               const std::vector<int>& g_opt) {
  if (g_hat.size() != g_opt.size())
    throw std::invalid_argument("classification_accuracy: length mismatch");
  if (g_hat.empty())
    throw std::invalid_argument("classification_accuracy: empty input");
  double agree = 0.0;
  for (std::size_t i = 0; i < g_hat.size(); ++i)
    agree += g_hat[i] == g_opt[i];
  return agree / static_cast<double>(g_hat.size());
}

double mean_nmb_under_rule(const std::vector<PotentialOutcomes>& potentials,
                           const std::vector<int>& g_hat) {
  if (potentials.size() != g_hat.size())
    throw std::invalid_argument("mean_nmb_under_rule: length mismatch");
  if (potentials.empty())
    throw std::invalid_argument("mean_nmb_under_rule: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < potentials.size(); ++i)
    total += g_hat[i] != 0 ? potentials[i].y1 : potentials[i].y0;
  return total / static_cast<double>(potentials.size());
}

std::vector<int> oracle_labels(
    const std::vector<PotentialOutcomes>& potentials) {
  std::vector<int> labels;
  labels.reserve(potentials.size());
  for (const PotentialOutcomes& row : potentials) labels.push_back(row.g_opt);
  return labels;
}

double oracle_mean_nmb(const std::vector<PotentialOutcomes>& potentials) {
  return mean_nmb_under_rule(potentials, oracle_labels(potentials));
}

}  // namespace ceitr::metrics
