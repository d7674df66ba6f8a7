#include "ceitr/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ceitr/csv.hpp"
#include "ceitr/rng.hpp"

namespace ceitr::tree {

namespace {

// Gini contribution of one child: total weight times impurity, which for
// two classes is 2 * W0 * W1 / (W0 + W1).
double child_gini(double w0, double w1) {
  const double total = w0 + w1;
  return total > 0.0 ? 2.0 * w0 * w1 / total : 0.0;
}

struct SplitChoice {
  bool found = false;
  std::size_t var = 0;
  double threshold = 0.0;
  double objective = std::numeric_limits<double>::infinity();
};

// Grows a full-depth tree on a row subset and records, per node, the
// weighted misclassification risk of collapsing that node to a leaf.
class Builder {
 public:
  Builder(const std::vector<std::vector<double>>& x, const std::vector<int>& z,
          const std::vector<double>& w, const TreeConfig& config,
          double min_leaf_weight)
      : x_(x), z_(z), w_(w), config_(config),
        min_leaf_weight_(min_leaf_weight) {}

  std::size_t grow(std::vector<std::size_t> rows, std::size_t depth) {
    double w0 = 0.0, w1 = 0.0;
    for (std::size_t i : rows) (z_[i] != 0 ? w1 : w0) += w_[i];
    const std::size_t at = nodes_.size();
    rule::Node node;
    node.label = w1 > w0 ? 1 : 0;
    nodes_.push_back(node);
    risk_.push_back(std::min(w0, w1));

    if (depth < config_.max_depth && w0 > 0.0 && w1 > 0.0) {
      const SplitChoice split = best_split(rows, w0, w1);
      if (split.found) {
        std::vector<std::size_t> left, right;
        left.reserve(rows.size());
        right.reserve(rows.size());
        for (std::size_t i : rows) {
          (x_[i][split.var] <= split.threshold ? left : right).push_back(i);
        }
        rows.clear();
        rows.shrink_to_fit();
        const std::size_t left_at = grow(std::move(left), depth + 1);
        const std::size_t right_at = grow(std::move(right), depth + 1);
        nodes_[at].var = static_cast<int>(split.var);
        nodes_[at].threshold = split.threshold;
        nodes_[at].left = static_cast<int>(left_at);
        nodes_[at].right = static_cast<int>(right_at);
      }
    }
    return at;
  }

  std::vector<rule::Node> take_nodes() { return std::move(nodes_); }
  std::vector<double> take_risk() { return std::move(risk_); }

 private:
  SplitChoice best_split(const std::vector<std::size_t>& rows, double w0,
                         double w1) const {
    const double parent = child_gini(w0, w1);
    SplitChoice best;
    const std::size_t p = x_.front().size();
    std::vector<std::size_t> order;
    for (std::size_t k = 0; k < p; ++k) {
      order = rows;
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) {
                  return x_[a][k] != x_[b][k] ? x_[a][k] < x_[b][k] : a < b;
                });
      double cum0 = 0.0, cum1 = 0.0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const std::size_t row = order[i];
        (z_[row] != 0 ? cum1 : cum0) += w_[row];
        const double lo = x_[row][k];
        const double hi = x_[order[i + 1]][k];
        if (lo == hi) continue;
        const double wl = cum0 + cum1;
        const double wr = (w0 - cum0) + (w1 - cum1);
        if (wl < min_leaf_weight_ || wr < min_leaf_weight_) continue;
        const double objective =
            child_gini(cum0, cum1) + child_gini(w0 - cum0, w1 - cum1);
        if (objective < best.objective - 1e-12 * (1.0 + parent)) {
          best.found = true;
          best.var = k;
          best.threshold = 0.5 * (lo + hi);
          best.objective = objective;
        }
      }
    }
    // Require a strict impurity decrease; otherwise the node stays a leaf.
    if (best.found && best.objective >= parent - 1e-12 * (1.0 + parent)) {
      best.found = false;
    }
    return best;
  }

  const std::vector<std::vector<double>>& x_;
  const std::vector<int>& z_;
  const std::vector<double>& w_;
  const TreeConfig& config_;
  double min_leaf_weight_;
  std::vector<rule::Node> nodes_;
  std::vector<double> risk_;
};

// Weakest-link pruning: collapse every internal node whose risk reduction
// fails to pay for its extra leaves at price cp * scale per leaf.  Returns
// the subtree risk and leaf count at `at` after pruning in place.
std::pair<double, std::size_t> prune_node(std::vector<rule::Node>& nodes,
                                          const std::vector<double>& risk,
                                          std::size_t at, double cp,
                                          double scale) {
  rule::Node& node = nodes[at];
  if (node.is_leaf()) return {risk[at], 1};
  const auto [left_risk, left_leaves] =
      prune_node(nodes, risk, static_cast<std::size_t>(node.left), cp, scale);
  const auto [right_risk, right_leaves] =
      prune_node(nodes, risk, static_cast<std::size_t>(node.right), cp, scale);
  const double sub_risk = left_risk + right_risk;
  const std::size_t leaves = left_leaves + right_leaves;
  const double price = cp * scale * static_cast<double>(leaves - 1);
  // A subtree survives when its risk reduction is at least the complexity
  // price of its extra leaves; cp = 0 therefore keeps the grown tree.
  if (risk[at] - sub_risk <= price - 1e-12 * (1.0 + scale)) {
    node.var = -1;
    node.left = -1;
    node.right = -1;
    return {risk[at], 1};
  }
  return {sub_risk, leaves};
}

// Preorder copy of the live subtree rooted at old_at; returns the new index.
std::size_t copy_subtree(const std::vector<rule::Node>& nodes,
                         std::size_t old_at, std::vector<rule::Node>& out) {
  const std::size_t at = out.size();
  out.push_back(nodes[old_at]);
  if (nodes[old_at].is_leaf()) {
    out[at].left = -1;
    out[at].right = -1;
  } else {
    const std::size_t left =
        copy_subtree(nodes, static_cast<std::size_t>(nodes[old_at].left), out);
    const std::size_t right =
        copy_subtree(nodes, static_cast<std::size_t>(nodes[old_at].right), out);
    out[at].left = static_cast<int>(left);
    out[at].right = static_cast<int>(right);
  }
  return at;
}

// Drop nodes orphaned by pruning and renumber depth-first.
std::vector<rule::Node> compact(const std::vector<rule::Node>& nodes) {
  std::vector<rule::Node> out;
  if (nodes.empty()) return out;
  out.reserve(nodes.size());
  copy_subtree(nodes, 0, out);
  return out;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

double total_weight(const std::vector<std::size_t>& rows,
                    const std::vector<double>& w) {
  double total = 0.0;
  for (std::size_t i : rows) total += w[i];
  return total;
}

// Grown-and-pruned tree for one cp value on a row subset.
rule::Tree fit_on_rows(const std::vector<std::vector<double>>& x,
                       const std::vector<int>& z, const std::vector<double>& w,
                       const TreeConfig& config,
                       const std::vector<std::size_t>& rows, double cp) {
  const double weight = total_weight(rows, w);
  Builder builder(x, z, w, config, config.min_node * weight);
  builder.grow(rows, 0);
  std::vector<rule::Node> nodes = builder.take_nodes();
  const std::vector<double> risk = builder.take_risk();
  const double scale = std::max(risk.front(), 1e-300);
  prune_node(nodes, risk, 0, cp, scale);
  rule::Tree tree;
  tree.nodes = compact(nodes);
  return tree;
}

}  // namespace

void TreeConfig::validate() const {
  if (max_depth < 1) throw std::invalid_argument("tree: max_depth must be >= 1");
  if (!(min_node >= 0.0 && min_node <= 0.5))
    throw std::invalid_argument("tree: min_node must lie in [0, 0.5]");
  if (cp_grid.empty()) throw std::invalid_argument("tree: empty cp grid");
  for (double cp : cp_grid)
    if (!(cp >= 0.0)) throw std::invalid_argument("tree: cp must be >= 0");
  if (cv_folds < 2) throw std::invalid_argument("tree: cv_folds must be >= 2");
}

double weighted_misclassification(const std::vector<int>& labels,
                                  const std::vector<int>& z,
                                  const std::vector<double>& w) {
  if (labels.size() != z.size() || z.size() != w.size())
    throw std::invalid_argument("weighted_misclassification: length mismatch");
  double risk = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i)
    if (labels[i] != z[i]) risk += w[i];
  return risk;
}

rule::FittedRule fit_weighted_tree(const std::vector<std::vector<double>>& x,
                                   const std::vector<int>& z,
                                   const std::vector<double>& w,
                                   const TreeConfig& config) {
  config.validate();
  const std::size_t n = x.size();
  if (n == 0) throw std::invalid_argument("tree: empty training set");
  if (z.size() != n || w.size() != n)
    throw std::invalid_argument("tree: x, z, w lengths differ");
  const std::size_t p = x.front().size();
  if (p == 0) throw std::invalid_argument("tree: no covariates");
  double weight = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i].size() != p) throw std::invalid_argument("tree: ragged matrix");
    if (z[i] != 0 && z[i] != 1)
      throw std::invalid_argument("tree: labels must be 0/1");
    if (!(w[i] >= 0.0))
      throw std::invalid_argument("tree: weights must be nonnegative");
    weight += w[i];
  }
  if (!(weight > 0.0))
    throw std::invalid_argument("tree: all classification weights are zero");

  // Pick cp by cross-validated weighted misclassification when the grid
  // offers a choice and the sample supports folding.
  std::vector<double> cp_grid = config.cp_grid;
  std::sort(cp_grid.begin(), cp_grid.end());
  double chosen_cp = cp_grid.front();
  const std::size_t folds = std::min<std::size_t>(config.cv_folds, n);
  if (cp_grid.size() > 1 && folds >= 2) {
    std::vector<std::size_t> shuffled = all_rows(n);
    Rng rng(derive_seed(config.seed, 0xCA47F01DULL));
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.below(i));
      std::swap(shuffled[i - 1], shuffled[j]);
    }
    std::vector<double> cv_risk(cp_grid.size(), 0.0);
    for (std::size_t f = 0; f < folds; ++f) {
      std::vector<std::size_t> train, test;
      for (std::size_t i = 0; i < n; ++i)
        (i % folds == f ? test : train).push_back(shuffled[i]);
      if (train.empty() || test.empty()) continue;
      for (std::size_t c = 0; c < cp_grid.size(); ++c) {
        const rule::Tree fitted =
            fit_on_rows(x, z, w, config, train, cp_grid[c]);
        for (std::size_t i : test)
          if (fitted.predict(x[i]) != z[i]) cv_risk[c] += w[i];
      }
    }
    // Ties go to the largest cp among the minimizers: the simpler tree.
    const double min_risk = *std::min_element(cv_risk.begin(), cv_risk.end());
    std::size_t best = 0;
    for (std::size_t c = 0; c < cv_risk.size(); ++c)
      if (cv_risk[c] <= min_risk + 1e-12 * (1.0 + weight)) best = c;
    chosen_cp = cp_grid[best];
  }

  rule::FittedRule fitted;
  fitted.kind = rule::RuleKind::kTree;
  fitted.n_features = p;
  fitted.seed = config.seed;
  fitted.trees.push_back(fit_on_rows(x, z, w, config, all_rows(n), chosen_cp));
  std::ostringstream note;
  note << "weighted-gini max_depth=" << config.max_depth
       << " min_node=" << csv::format_double(config.min_node)
       << " cp=" << csv::format_double(chosen_cp)
       << " cv_folds=" << config.cv_folds;
  fitted.annotation = note.str();
  return fitted;
}

}  // namespace ceitr::tree
