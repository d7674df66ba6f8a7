#pragma once

#include <cstdint>
#include <vector>

#include "ceitr/rule.hpp"

namespace ceitr::forest {

// Configuration for the conditional-inference forest.
struct ForestConfig {
  std::size_t n_trees = 50;
  // Variables sampled per node; 0 means floor(sqrt(p)), otherwise must lie
  // in [1, p].  Production runs select this by cross-validation.
  std::size_t mtry = 0;
  std::size_t max_depth = 5;
  // Per-tree subsample drawn without replacement.
  double subsample_fraction = 0.632;
  // A node splits only when 1 - (Bonferroni-adjusted p-value of the best
  // association test) is at least this; 0 lets the best variable always
  // split, 0.95 reproduces the standalone conditional tree.
  double mincriterion = 0.0;
  // Minimum subject count per daughter node.
  std::size_t min_node = 7;
  // When false the association and split-point statistics ignore the
  // classification weights (leaf votes stay weighted); the default treats
  // the weights as case weights everywhere.
  bool weighted_statistics = true;
  std::uint64_t seed = 0;

  std::size_t resolved_mtry(std::size_t p) const;
  void validate(std::size_t p) const;
};

// Mean and variance of T = sum_i c_i * z_{pi(i)} under a uniform random
// permutation pi of the responses z with c fixed:
//   E[T] = (sum c)(sum z)/n,  Var[T] = S_c * S_z / (n - 1)
// with S the centered sum of squares.  n < 2 yields variance 0.
void permutation_moments(const std::vector<double>& c,
                         const std::vector<double>& z, double* mean,
                         double* variance);

// Forest of conditional-inference trees on subsamples: each node tests the
// sampled variables with standardized permutation statistics, Bonferroni
// screens the best one against mincriterion, and the split point maximizes
// the standardized two-sample statistic between daughters.
rule::FittedRule fit_conditional_forest(
    const std::vector<std::vector<double>>& x, const std::vector<int>& z,
    const std::vector<double>& w, const ForestConfig& config);

// {1, 2, 3, p} clipped to [1, p]: the default mtry grid.
std::vector<std::size_t> default_mtry_candidates(std::size_t p);

// Cross-validated mtry: minimizes out-of-fold weighted misclassification
// of forests grown with each candidate; ties go to the smallest candidate.
std::size_t select_mtry_cv(const std::vector<std::vector<double>>& x,
                           const std::vector<int>& z,
                           const std::vector<double>& w,
                           const std::vector<std::size_t>& candidates,
                           std::size_t folds, const ForestConfig& config);

struct ImportanceOptions {
  // Covariates correlated with the target variable beyond this enter the
  // conditioning grid.
  double cor_threshold = 0.2;
  std::size_t n_permutations = 1;
  std::uint64_t seed = 0;
};

struct ImportanceResult {
  // Per covariate: average drop in weighted out-of-subsample accuracy
  // when the covariate is permuted within the conditioning cells.
  std::vector<double> importance;
  // Per covariate: trees that fell back to marginal permutation because
  // no correlated covariate contributed a split threshold.
  std::vector<std::size_t> marginal_fallbacks;
  std::size_t trees_used = 0;
};

// Conditional permutation importance evaluated on each tree's
// out-of-subsample rows; requires the forest's subsample bookkeeping, so
// the covariate matrix must be the training matrix.
ImportanceResult conditional_importance(const rule::FittedRule& forest,
                                        const std::vector<std::vector<double>>& x,
                                        const std::vector<int>& z,
                                        const std::vector<double>& w,
                                        const ImportanceOptions& options);

}  // namespace ceitr::forest
