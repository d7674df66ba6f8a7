#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ceitr/nuisance.hpp"

namespace ceitr::rule {

// One node of a binary decision tree stored in array form.  Internal nodes
// route x[var] <= threshold to `left` and the rest to `right`; leaves have
// var == -1 and carry the treatment label.
struct Node {
  int var = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;

  bool is_leaf() const { return var < 0; }
};

// A decision tree plus, for forest members, the training-row indices the
// tree was grown on (used by out-of-subsample evaluation; meaningless once
// the rule is separated from its training data).
struct Tree {
  std::vector<Node> nodes;
  std::vector<std::size_t> subsample;

  int predict(const std::vector<double>& x) const;
  std::size_t leaf_count() const;
  // Distinct thresholds this tree uses on the given variable.
  std::vector<double> thresholds_on(int var) const;
};

enum class RuleKind { kNaive, kTree, kForest };

std::string rule_kind_name(RuleKind kind);
RuleKind parse_rule_kind(const std::string& name);

// A fitted treatment rule.  Tree rules hold one tree, forest rules hold
// n_trees of them (majority vote, ties to 0), and the naive rule carries
// the outcome regressions it thresholds.
struct FittedRule {
  RuleKind kind = RuleKind::kTree;
  std::size_t n_features = 0;
  std::uint64_t seed = 0;
  // One-line human-readable summary of the training configuration.
  std::string annotation;

  std::vector<Tree> trees;

  // Naive-rule payload: recommend arm 1 when
  // lambda * (h1(x) - h0(x)) - (m1(x) - m0(x)) > 0.
  double lambda = 0.0;
  nuisance::SurvivalFit survival;
  nuisance::CostFit cost;

  int predict_one(const std::vector<double>& x) const;
};

// Apply a rule to a covariate matrix.  Throws std::invalid_argument on a
// column-count mismatch.
std::vector<int> predict_rule(const FittedRule& fitted,
                              const std::vector<std::vector<double>>& x);

// Versioned line-oriented text serialization; doubles round-trip exactly.
void write_rule(const std::string& path, const FittedRule& fitted);
FittedRule read_rule(const std::string& path);

}  // namespace ceitr::rule
