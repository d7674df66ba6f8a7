#include "ceitr/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ceitr {

void CEConfig::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (discount_rate < 0.0 || discount_rate >= 1.0) {
    throw std::invalid_argument("discount_rate must lie in [0, 1)");
  }
}

void PartitionGrid::validate() const {
  if (knots.size() < 2) {
    throw std::invalid_argument("grid needs at least two knots");
  }
  if (knots.front() != 0.0) {
    throw std::invalid_argument("first grid knot must be 0");
  }
  for (std::size_t j = 1; j < knots.size(); ++j) {
    if (!(knots[j] > knots[j - 1])) {
      throw std::invalid_argument("grid knots must be strictly increasing");
    }
  }
}

PartitionGrid build_uniform_grid(double tau, std::size_t intervals) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (intervals == 0) {
    throw std::invalid_argument("grid needs at least one interval");
  }
  PartitionGrid grid;
  grid.knots.resize(intervals + 1);
  for (std::size_t j = 0; j <= intervals; ++j) {
    grid.knots[j] = tau * static_cast<double>(j) / static_cast<double>(intervals);
  }
  grid.knots.front() = 0.0;
  grid.knots.back() = tau;
  grid.validate();
  return grid;
}

PartitionGrid parse_grid(const std::string& knot_list) {
  PartitionGrid grid;
  std::stringstream ss(knot_list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    grid.knots.push_back(std::stod(item));
  }
  grid.validate();
  return grid;
}

void WeightVector::finalize(double lambda) {
  const std::size_t n = delta_t_hat.size();
  w_hat.resize(n);
  z.resize(n);
  abs_w.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w_hat[i] = lambda * delta_t_hat[i] - delta_m_hat[i];
    z[i] = w_hat[i] > 0.0 ? 1 : 0;
    abs_w[i] = std::fabs(w_hat[i]);
  }
}

IntervalQuantities interval_quantities(const Subject& subject,
                                       const PartitionGrid& grid) {
  grid.validate();
  const std::size_t J = grid.intervals();
  if (subject.cost_history.size() != J) {
    throw std::invalid_argument(
        "cost history length does not match the grid (" +
        std::to_string(subject.cost_history.size()) + " entries for " +
        std::to_string(J) + " intervals)");
  }
  IntervalQuantities out;
  out.u.resize(J);
  out.delta.resize(J);
  out.cost = subject.cost_history;
  for (std::size_t j = 0; j < J; ++j) {
    const double right = grid.knots[j + 1];
    out.u[j] = std::min(subject.u, right);
    // Complete when the subject is fully observed, or was still under
    // follow-up at the interval's right endpoint.
    out.delta[j] = (subject.delta == 1 || subject.u >= right) ? 1 : 0;
  }
  return out;
}

void validate_subject(const Subject& subject, const PartitionGrid& grid) {
  const double tau = grid.tau();
  if (subject.u < 0.0 || subject.u > tau + 1e-12) {
    throw std::invalid_argument("subject time outside [0, tau]");
  }
  if (subject.total_cost < 0.0) {
    throw std::invalid_argument("negative total cost");
  }
  if (subject.a != 0 && subject.a != 1) {
    throw std::invalid_argument("treatment must be 0 or 1");
  }
  if (subject.u >= tau && subject.delta != 1) {
    throw std::invalid_argument("subjects reaching the horizon are complete");
  }
  if (subject.has_cost_history()) {
    if (subject.cost_history.size() != grid.intervals()) {
      throw std::invalid_argument("cost history misaligned with grid");
    }
    double sum = 0.0;
    for (double m : subject.cost_history) {
      if (m < 0.0) throw std::invalid_argument("negative interval cost");
      sum += m;
    }
    const double scale = std::max(1.0, std::fabs(subject.total_cost));
    if (std::fabs(sum - subject.total_cost) > 1e-9 * scale) {
      throw std::invalid_argument("interval costs do not telescope to total");
    }
  }
}

}  // namespace ceitr
