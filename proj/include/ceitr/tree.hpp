#pragma once

#include <cstdint>
#include <vector>

#include "ceitr/rule.hpp"

namespace ceitr::tree {

// Configuration for the weighted classification tree.
struct TreeConfig {
  std::size_t max_depth = 6;
  // Minimum fraction of the total weight that every leaf must retain.
  double min_node = 0.01;
  // Candidate cost-complexity parameters (fractions of the root risk);
  // the final value minimizes cross-validated weighted misclassification,
  // ties resolved toward the simplest (largest) candidate.
  std::vector<double> cp_grid = {0.0,   0.0005, 0.001, 0.002, 0.005,
                                 0.01,  0.02,   0.05,  0.1};
  std::size_t cv_folds = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

// Greedy weighted-Gini recursive partitioning with cost-complexity
// pruning.  x holds one row per subject, z the 0/1 class labels, w the
// nonnegative classification weights.  Throws std::invalid_argument on
// shape mismatches or when every weight is zero.
rule::FittedRule fit_weighted_tree(const std::vector<std::vector<double>>& x,
                                   const std::vector<int>& z,
                                   const std::vector<double>& w,
                                   const TreeConfig& config);

// Weighted misclassification risk sum_i w_i * I{labels_i != z_i}.
double weighted_misclassification(const std::vector<int>& labels,
                                  const std::vector<int>& z,
                                  const std::vector<double>& w);

}  // namespace ceitr::tree
