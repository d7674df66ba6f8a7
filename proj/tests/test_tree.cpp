#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "ceitr/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "ceitr/rng.hpp"
#include "ceitr/rule.hpp"
#include "doctest.h"

using namespace ceitr;
using tree::TreeConfig;
using tree::fit_weighted_tree;

namespace {

struct Problem {
  std::vector<std::vector<double>> x;
  std::vector<int> z;
  std::vector<double> w;
};

Problem random_problem(std::size_t n, std::size_t p, Rng& rng) {
  Problem prob;
  prob.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    prob.x[i].resize(p);
    for (std::size_t k = 0; k < p; ++k) prob.x[i][k] = rng.normal();
    prob.z.push_back(rng.bernoulli(0.5) ? 1 : 0);
    prob.w.push_back(rng.uniform(0.5, 2.0));
  }
  // Keep both classes represented.
  prob.z[0] = 0;
  prob.z[n - 1] = 1;
  return prob;
}

// Independent exhaustive root-split search minimizing the weighted-Gini
// objective, mirroring the production tie rules (first candidate in
// (variable, threshold) order wins near-ties).
struct OracleSplit {
  bool found = false;
  std::size_t var = 0;
  double threshold = 0.0;
  double objective = std::numeric_limits<double>::infinity();
};

double oracle_child_gini(double w0, double w1) {
  const double total = w0 + w1;
  return total > 0.0 ? 2.0 * w0 * w1 / total : 0.0;
}

OracleSplit oracle_root_split(const Problem& prob, double min_node) {
  const std::size_t n = prob.x.size();
  const std::size_t p = prob.x.front().size();
  double w0 = 0.0, w1 = 0.0, total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    (prob.z[i] != 0 ? w1 : w0) += prob.w[i];
    total += prob.w[i];
  }
  const double parent = oracle_child_gini(w0, w1);
  const double min_leaf = min_node * total;
  OracleSplit best;
  for (std::size_t k = 0; k < p; ++k) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return prob.x[a][k] != prob.x[b][k] ? prob.x[a][k] < prob.x[b][k]
                                          : a < b;
    });
    double cum0 = 0.0, cum1 = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const std::size_t row = order[i];
      (prob.z[row] != 0 ? cum1 : cum0) += prob.w[row];
      const double lo = prob.x[row][k];
      const double hi = prob.x[order[i + 1]][k];
      if (lo == hi) continue;
      const double wl = cum0 + cum1;
      const double wr = (w0 - cum0) + (w1 - cum1);
      if (wl < min_leaf || wr < min_leaf) continue;
      const double objective = oracle_child_gini(cum0, cum1) +
                               oracle_child_gini(w0 - cum0, w1 - cum1);
      if (objective < best.objective - 1e-12 * (1.0 + parent)) {
        best.found = true;
        best.var = k;
        best.threshold = 0.5 * (lo + hi);
        best.objective = objective;
      }
    }
  }
  if (best.found && best.objective >= parent - 1e-12 * (1.0 + parent))
    best.found = false;
  return best;
}

TreeConfig stump_config() {
  TreeConfig config;
  config.max_depth = 1;
  config.min_node = 0.0;
  config.cp_grid = {0.0};
  return config;
}

double leaf_weight_minimum(const rule::FittedRule& fitted, const Problem& prob) {
  const rule::Tree& tr = fitted.trees.front();
  std::vector<double> leaf_weight(tr.nodes.size(), 0.0);
  for (std::size_t i = 0; i < prob.x.size(); ++i) {
    std::size_t at = 0;
    while (!tr.nodes[at].is_leaf()) {
      const rule::Node& node = tr.nodes[at];
      at = static_cast<std::size_t>(
          prob.x[i][static_cast<std::size_t>(node.var)] <= node.threshold
              ? node.left
              : node.right);
    }
    leaf_weight[at] += prob.w[i];
  }
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t at = 0; at < tr.nodes.size(); ++at)
    if (tr.nodes[at].is_leaf()) lowest = std::min(lowest, leaf_weight[at]);
  return lowest;
}

bool same_structure(const rule::Tree& a, const rule::Tree& b) {
  if (a.nodes.size() != b.nodes.size()) return false;
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    const rule::Node& na = a.nodes[i];
    const rule::Node& nb = b.nodes[i];
    if (na.var != nb.var || na.left != nb.left || na.right != nb.right ||
        na.label != nb.label)
      return false;
    if (!na.is_leaf() && na.threshold != nb.threshold) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("separable one-dimensional labels produce a depth-one split at 0") {
  Problem prob;
  for (double v : {-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0}) {
    prob.x.push_back({v});
    prob.z.push_back(v > 0.0 ? 1 : 0);
    prob.w.push_back(1.0);
  }
  TreeConfig config;
  config.max_depth = 4;
  config.min_node = 0.0;
  const rule::FittedRule fitted = fit_weighted_tree(prob.x, prob.z, prob.w, config);
  const rule::Tree& tr = fitted.trees.front();
  REQUIRE(tr.nodes.size() == 3);
  CHECK(tr.nodes[0].var == 0);
  CHECK(tr.nodes[0].threshold == doctest::Approx(0.0));
  CHECK(tr.predict({-0.1}) == 0);
  CHECK(tr.predict({0.1}) == 1);
  CHECK(tree::weighted_misclassification(rule::predict_rule(fitted, prob.x),
                                         prob.z, prob.w) == 0.0);
}

TEST_CASE("root split matches exhaustive weighted-Gini search on 50 random "
          "8-point problems") {
  Rng rng(20240811);
  int splits_seen = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const Problem prob = random_problem(8, 3, rng);
    const rule::FittedRule fitted =
        fit_weighted_tree(prob.x, prob.z, prob.w, stump_config());
    const OracleSplit oracle = oracle_root_split(prob, 0.0);
    const rule::Tree& tr = fitted.trees.front();
    if (!oracle.found) {
      CHECK(tr.nodes.size() == 1);
      continue;
    }
    ++splits_seen;
    REQUIRE(tr.nodes.size() == 3);
    CHECK(tr.nodes[0].var == static_cast<int>(oracle.var));
    CHECK(tr.nodes[0].threshold == oracle.threshold);
  }
  // Random labels with both classes present nearly always admit a split.
  CHECK(splits_seen >= 40);
}

TEST_CASE("duplicating every row at half weight reproduces the tree") {
  Rng rng(77);
  const Problem prob = random_problem(40, 3, rng);
  Problem doubled;
  for (std::size_t i = 0; i < prob.x.size(); ++i) {
    for (int copy = 0; copy < 2; ++copy) {
      doubled.x.push_back(prob.x[i]);
      doubled.z.push_back(prob.z[i]);
      doubled.w.push_back(prob.w[i] / 2.0);
    }
  }
  TreeConfig config;
  config.max_depth = 4;
  config.cp_grid = {0.001};
  const rule::FittedRule base = fit_weighted_tree(prob.x, prob.z, prob.w, config);
  const rule::FittedRule twin =
      fit_weighted_tree(doubled.x, doubled.z, doubled.w, config);
  CHECK(same_structure(base.trees.front(), twin.trees.front()));
}

TEST_CASE("rescaling the weights by a positive constant leaves the tree "
          "unchanged") {
  Rng rng(4096);
  const Problem prob = random_problem(60, 4, rng);
  std::vector<double> scaled = prob.w;
  for (double& v : scaled) v *= 4.0;
  TreeConfig config;
  config.seed = 5;
  const rule::FittedRule base = fit_weighted_tree(prob.x, prob.z, prob.w, config);
  const rule::FittedRule twin = fit_weighted_tree(prob.x, prob.z, scaled, config);
  CHECK(same_structure(base.trees.front(), twin.trees.front()));
}

TEST_CASE("invalid training inputs are rejected") {
  const std::vector<std::vector<double>> x = {{0.0}, {1.0}};
  const std::vector<int> z = {0, 1};
  TreeConfig config;
  CHECK_THROWS_AS(fit_weighted_tree(x, z, {0.0, 0.0}, config),
                  std::invalid_argument);
  CHECK_THROWS_AS(fit_weighted_tree(x, z, {1.0, -0.5}, config),
                  std::invalid_argument);
  CHECK_THROWS_AS(fit_weighted_tree(x, {0, 2}, {1.0, 1.0}, config),
                  std::invalid_argument);
  CHECK_THROWS_AS(fit_weighted_tree(x, {0}, {1.0, 1.0}, config),
                  std::invalid_argument);
  CHECK_THROWS_AS(fit_weighted_tree({{0.0}, {1.0, 2.0}}, z, {1.0, 1.0}, config),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      fit_weighted_tree({}, {}, {}, config), std::invalid_argument);
  TreeConfig bad = config;
  bad.max_depth = 0;
  CHECK_THROWS_AS(fit_weighted_tree(x, z, {1.0, 1.0}, bad),
                  std::invalid_argument);
}

TEST_CASE("constant covariates yield a single weighted-majority leaf") {
  std::vector<std::vector<double>> x(6, {3.0, -1.0});
  const std::vector<int> z = {1, 1, 0, 0, 0, 1};
  const std::vector<double> w = {1.0, 1.0, 0.4, 0.4, 0.4, 1.0};
  const rule::FittedRule fitted = fit_weighted_tree(x, z, w, TreeConfig{});
  REQUIRE(fitted.trees.front().nodes.size() == 1);
  CHECK(fitted.trees.front().nodes[0].label == 1);
}

TEST_CASE("training risk never exceeds the trivial constant rules") {
  Rng rng(9001);
  for (int rep = 0; rep < 20; ++rep) {
    const Problem prob = random_problem(80, 3, rng);
    double w0 = 0.0, w1 = 0.0;
    for (std::size_t i = 0; i < prob.z.size(); ++i)
      (prob.z[i] != 0 ? w1 : w0) += prob.w[i];
    TreeConfig config;
    config.seed = static_cast<std::uint64_t>(rep);
    const rule::FittedRule fitted =
        fit_weighted_tree(prob.x, prob.z, prob.w, config);
    const double risk = tree::weighted_misclassification(
        rule::predict_rule(fitted, prob.x), prob.z, prob.w);
    CHECK(risk <= std::min(w0, w1) + 1e-9);
  }
}

TEST_CASE("cost-complexity pruning never grows the tree past its cp=0 size") {
  Rng rng(31337);
  Problem prob = random_problem(200, 3, rng);
  // Pure noise labels: cross-validation should not reward deep trees.
  for (std::size_t i = 0; i < prob.z.size(); ++i)
    prob.z[i] = rng.bernoulli(0.5) ? 1 : 0;
  prob.z[0] = 0;
  prob.z[1] = 1;
  TreeConfig full;
  full.cp_grid = {0.0};
  TreeConfig tuned;
  tuned.seed = full.seed = 12;
  const rule::FittedRule grown = fit_weighted_tree(prob.x, prob.z, prob.w, full);
  const rule::FittedRule pruned =
      fit_weighted_tree(prob.x, prob.z, prob.w, tuned);
  CHECK(pruned.trees.front().leaf_count() <= grown.trees.front().leaf_count());
}

TEST_CASE("planted signal with label noise is recovered out of sample") {
  Rng rng(2718);
  Problem prob;
  for (int i = 0; i < 300; ++i) {
    prob.x.push_back({rng.normal(), rng.normal()});
    const int truth = prob.x.back()[0] > 0.0 ? 1 : 0;
    prob.z.push_back(rng.bernoulli(0.1) ? 1 - truth : truth);
    prob.w.push_back(1.0);
  }
  TreeConfig config;
  config.seed = 1;
  const rule::FittedRule fitted = fit_weighted_tree(prob.x, prob.z, prob.w, config);
  int agree = 0, total = 0;
  for (double v = -2.0; v <= 2.0; v += 0.05) {
    if (std::fabs(v) < 0.15) continue;  // skip the boundary band
    for (double u = -2.0; u <= 2.0; u += 0.5) {
      const int want = v > 0.0 ? 1 : 0;
      agree += fitted.predict_one({v, u}) == want;
      ++total;
    }
  }
  CHECK(static_cast<double>(agree) / total >= 0.9);
}

TEST_CASE("every leaf honors the minimum weighted fraction") {
  Rng rng(515);
  const Problem prob = random_problem(120, 3, rng);
  TreeConfig config;
  config.min_node = 0.2;
  config.cp_grid = {0.0};
  const rule::FittedRule fitted = fit_weighted_tree(prob.x, prob.z, prob.w, config);
  double total = 0.0;
  for (double v : prob.w) total += v;
  CHECK(leaf_weight_minimum(fitted, prob) >= 0.2 * total - 1e-9);
}

TEST_CASE("fitted trees serialize and reload exactly") {
  Rng rng(846);
  const Problem prob = random_problem(100, 3, rng);
  TreeConfig config;
  config.seed = 99;
  const rule::FittedRule fitted = fit_weighted_tree(prob.x, prob.z, prob.w, config);
  const std::string path = "tree_roundtrip.rule";
  rule::write_rule(path, fitted);
  const rule::FittedRule loaded = rule::read_rule(path);
  std::remove(path.c_str());
  CHECK(loaded.kind == rule::RuleKind::kTree);
  CHECK(loaded.n_features == fitted.n_features);
  CHECK(loaded.seed == fitted.seed);
  CHECK(loaded.annotation == fitted.annotation);
  REQUIRE(same_structure(loaded.trees.front(), fitted.trees.front()));
  for (const std::vector<double>& row : prob.x)
    CHECK(loaded.predict_one(row) == fitted.predict_one(row));
  CHECK_THROWS_AS(loaded.predict_one({1.0}), std::invalid_argument);
}

TEST_CASE("weighted misclassification matches a hand computation") {
  CHECK(tree::weighted_misclassification({1, 0, 1}, {1, 1, 0}, {2.0, 3.0, 5.0}) ==
        doctest::Approx(8.0).epsilon(1e-12));
  CHECK_THROWS_AS(tree::weighted_misclassification({1}, {1, 0}, {1.0, 1.0}),
                  std::invalid_argument);
}

TEST_CASE("the same seed reproduces the same fitted tree") {
  Rng rng(5150);
  const Problem prob = random_problem(150, 4, rng);
  TreeConfig config;
  config.seed = 404;
  const rule::FittedRule a = fit_weighted_tree(prob.x, prob.z, prob.w, config);
  const rule::FittedRule b = fit_weighted_tree(prob.x, prob.z, prob.w, config);
  CHECK(same_structure(a.trees.front(), b.trees.front()));
  CHECK(a.annotation == b.annotation);
}
