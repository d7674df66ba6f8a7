#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ceitr {

// Cost-effectiveness configuration: willingness-to-pay per life-year,
// restriction horizon, and an optional annual discount rate.
struct CEConfig {
  double lambda = 50000.0;    // currency per life-year
  double tau = 20.0;          // years
  double discount_rate = 0.0; // fraction per year

  void validate() const;
};

// Partition of (0, tau] into J subintervals (t_j, t_{j+1}];
// knots[0] == 0 and knots[J] == tau.
struct PartitionGrid {
  std::vector<double> knots;

  std::size_t intervals() const { return knots.empty() ? 0 : knots.size() - 1; }
  double tau() const { return knots.empty() ? 0.0 : knots.back(); }
  void validate() const;
};

// J+1 equally spaced knots from 0 to tau.
PartitionGrid build_uniform_grid(double tau, std::size_t intervals);

// Parse "0,0.5,...,20" into a grid (validated).
PartitionGrid parse_grid(const std::string& knot_list);

// One observed subject.  Times are restricted to [0, tau]; cost_history,
// when present, holds the cost accrued in each grid interval (entries for
// intervals fully after u are zero).
struct Subject {
  std::int64_t id = 0;
  std::vector<double> x;          // covariates
  int a = 0;                      // treatment arm
  double u = 0.0;                 // min(T*, C, tau)
  int delta = 0;                  // I{min(T*, tau) <= C}
  int death_observed = 0;         // I{T* <= min(C, tau)}
  double total_cost = 0.0;        // M(U)
  std::vector<double> cost_history;

  bool has_cost_history() const { return !cost_history.empty(); }
};

struct Cohort {
  std::vector<Subject> subjects;

  std::size_t size() const { return subjects.size(); }
  std::size_t n_covariates() const {
    return subjects.empty() ? 0 : subjects.front().x.size();
  }
};

// Simulation-only counterfactual record for one subject.
struct PotentialOutcomes {
  double t0 = 0.0, t1 = 0.0;  // restricted potential survival times
  double m0 = 0.0, m1 = 0.0;  // potential cumulative costs
  double y0 = 0.0, y1 = 0.0;  // potential NMBs, y_a = lambda * t_a - m_a
  double delta_y = 0.0;       // y1 - y0
  int g_opt = 0;              // I{delta_y > 0}, ties map to 0
};

// Per-subject classification inputs derived from an estimated incremental
// NMB: z is the class label I{w_hat > 0} and abs_w the classification weight.
struct WeightVector {
  std::vector<double> delta_t_hat;
  std::vector<double> delta_m_hat;
  std::vector<double> w_hat;
  std::vector<int> z;
  std::vector<double> abs_w;
  // Interval terms skipped because a censoring weight hit zero.
  std::size_t dropped_terms = 0;

  std::size_t size() const { return w_hat.size(); }
  void resize(std::size_t n) {
    delta_t_hat.assign(n, 0.0);
    delta_m_hat.assign(n, 0.0);
    w_hat.assign(n, 0.0);
    z.assign(n, 0);
    abs_w.assign(n, 0.0);
  }
  // Derive w_hat, z, abs_w from the delta components at the given lambda.
  void finalize(double lambda);
};

// Quantities for one subinterval of a subject's follow-up: the truncated
// time min(u, t_{j+1}), the interval completeness flag, and the interval
// cost.  Flags are a prefix of ones; an uncensored subject is complete in
// every interval.
struct IntervalQuantities {
  std::vector<double> u;      // per interval, min(subject u, right knot)
  std::vector<int> delta;     // per interval completeness flag
  std::vector<double> cost;   // per interval accrued cost
};

IntervalQuantities interval_quantities(const Subject& subject,
                                       const PartitionGrid& grid);

// Throws std::invalid_argument when the subject violates a domain
// invariant (u outside [0, tau], negative cost, cost history that fails to
// telescope to the total, or delta = 0 at the horizon).
void validate_subject(const Subject& subject, const PartitionGrid& grid);

}  // namespace ceitr
