#include "ceitr/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ceitr/csv.hpp"
#include "ceitr/rng.hpp"

namespace ceitr::forest {

namespace {

constexpr double kDegenerate = -1.0;

class TreeGrower {
 public:
  TreeGrower(const std::vector<std::vector<double>>& x,
             const std::vector<int>& z, const std::vector<double>& w,
             const ForestConfig& config, std::size_t mtry, Rng& rng)
      : x_(x), z_(z), w_(w), config_(config), mtry_(mtry), rng_(rng),
        p_(x.front().size()) {}

  std::size_t grow(std::vector<std::size_t> rows, std::size_t depth) {
    double w0 = 0.0, w1 = 0.0;
    for (std::size_t i : rows) (z_[i] != 0 ? w1 : w0) += w_[i];
    const std::size_t at = nodes_.size();
    rule::Node node;
    node.label = w1 > w0 ? 1 : 0;
    nodes_.push_back(node);

    if (depth >= config_.max_depth || w0 <= 0.0 || w1 <= 0.0 ||
        rows.size() < 2 * config_.min_node) {
      return at;
    }

    // Case-weight permutation moments over this node.  Weights are
    // normalized to sum to the row count so that rescaling every weight
    // by a constant leaves the statistics (and the fitted tree) exactly
    // unchanged.  For the binary labels the null variance of the label
    // influence reduces to mu (1 - mu) with mu the weighted label mean.
    const double n = static_cast<double>(rows.size());
    double stat_total = 0.0;
    for (std::size_t i : rows) stat_total += stat_weight(i);
    if (!(stat_total > 0.0)) return at;
    const double norm = n / stat_total;
    double mu = 0.0;
    for (std::size_t i : rows)
      mu += norm * stat_weight(i) * static_cast<double>(z_[i]);
    mu /= n;
    const double v_h = mu * (1.0 - mu);
    if (v_h <= 0.0) return at;  // pure in the weighted sense

    // Sample mtry variables and keep the strongest association.
    rng_.sample_without_replacement(p_, mtry_, sampled_);
    int best_var = -1;
    double best_stat = -1.0;
    for (std::size_t k : sampled_) {
      const double stat = association(rows, k, n, norm, mu, v_h);
      if (stat != kDegenerate && stat > best_stat) {
        best_stat = stat;
        best_var = static_cast<int>(k);
      }
    }
    if (best_var < 0) return at;

    // Bonferroni over the sampled variables against mincriterion.
    const double p_raw = 2.0 * (1.0 - normal_cdf(best_stat));
    const double p_adj =
        std::min(1.0, p_raw * static_cast<double>(sampled_.size()));
    if (1.0 - p_adj < config_.mincriterion) return at;

    const auto [threshold, found] =
        best_split_point(rows, best_var, n, norm, mu, v_h);
    if (!found) return at;

    std::vector<std::size_t> left, right;
    left.reserve(rows.size());
    right.reserve(rows.size());
    for (std::size_t i : rows)
      (x_[i][static_cast<std::size_t>(best_var)] <= threshold ? left : right)
          .push_back(i);
    rows.clear();
    rows.shrink_to_fit();
    const std::size_t left_at = grow(std::move(left), depth + 1);
    const std::size_t right_at = grow(std::move(right), depth + 1);
    nodes_[at].var = best_var;
    nodes_[at].threshold = threshold;
    nodes_[at].left = static_cast<int>(left_at);
    nodes_[at].right = static_cast<int>(right_at);
    return at;
  }

  std::vector<rule::Node> take_nodes() { return std::move(nodes_); }

 private:
  double stat_weight(std::size_t i) const {
    return config_.weighted_statistics ? w_[i] : 1.0;
  }

  // Standardized linear association |T - E[T]| / sd[T] for T = sum_i
  // omega_i x_ik z_i, with case-weight permutation moments E[T] =
  // (sum omega x) mu and Var[T] = v_h (n sum omega x^2 - (sum omega x)^2)
  // / (n - 1).  With unit weights this is exactly the classic closed form
  // S_x S_z / (n - 1).  Returns kDegenerate when the weighted covariate
  // spread vanishes.
  double association(const std::vector<std::size_t>& rows, std::size_t k,
                     double n, double norm, double mu, double v_h) const {
    double a1 = 0.0, a2 = 0.0, t = 0.0;
    for (std::size_t i : rows) {
      const double om = norm * stat_weight(i);
      const double xi = x_[i][k];
      a1 += om * xi;
      a2 += om * xi * xi;
      t += om * xi * static_cast<double>(z_[i]);
    }
    const double spread = n * a2 - a1 * a1;
    if (spread <= 1e-12 * std::max(n * a2, 1e-300)) return kDegenerate;
    const double variance = v_h * spread / (n - 1.0);
    return std::fabs(t - a1 * mu) / std::sqrt(variance);
  }

  // Split point maximizing the standardized two-sample statistic
  // T_s = sum_{left} omega_i z_i, i.e. the difference between the
  // daughters' weighted label means standardized by the case-weight
  // permutation null; candidates are midpoints of adjacent distinct
  // values with both daughters holding at least min_node subjects.
  std::pair<double, bool> best_split_point(std::vector<std::size_t>& rows,
                                           int var, double n, double norm,
                                           double mu, double v_h) const {
    const std::size_t k = static_cast<std::size_t>(var);
    std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      return x_[a][k] != x_[b][k] ? x_[a][k] < x_[b][k] : a < b;
    });
    double best_stat = -1.0, best_threshold = 0.0;
    bool found = false;
    double cum = 0.0, cum_z = 0.0;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
      const std::size_t row = rows[i];
      const double om = norm * stat_weight(row);
      cum += om;
      cum_z += om * static_cast<double>(z_[row]);
      const double lo = x_[row][k];
      const double hi = x_[rows[i + 1]][k];
      if (lo == hi) continue;
      if (i + 1 < config_.min_node || rows.size() - i - 1 < config_.min_node)
        continue;
      const double spread = cum * (n - cum);
      if (spread <= 1e-12 * n * n) continue;
      const double stat =
          std::fabs(cum_z - cum * mu) / std::sqrt(v_h * spread / (n - 1.0));
      if (stat > best_stat) {
        best_stat = stat;
        best_threshold = 0.5 * (lo + hi);
        found = true;
      }
    }
    return {best_threshold, found};
  }

  const std::vector<std::vector<double>>& x_;
  const std::vector<int>& z_;
  const std::vector<double>& w_;
  const ForestConfig& config_;
  std::size_t mtry_;
  Rng& rng_;
  std::size_t p_;
  std::vector<rule::Node> nodes_;
  std::vector<std::size_t> sampled_;
  std::vector<double> scores_;
  std::vector<double> labels_;
};

void check_training_inputs(const std::vector<std::vector<double>>& x,
                           const std::vector<int>& z,
                           const std::vector<double>& w) {
  const std::size_t n = x.size();
  if (n == 0) throw std::invalid_argument("forest: empty training set");
  if (z.size() != n || w.size() != n)
    throw std::invalid_argument("forest: x, z, w lengths differ");
  const std::size_t p = x.front().size();
  if (p == 0) throw std::invalid_argument("forest: no covariates");
  double weight = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i].size() != p) throw std::invalid_argument("forest: ragged matrix");
    if (z[i] != 0 && z[i] != 1)
      throw std::invalid_argument("forest: labels must be 0/1");
    if (!(w[i] >= 0.0))
      throw std::invalid_argument("forest: weights must be nonnegative");
    weight += w[i];
  }
  if (!(weight > 0.0))
    throw std::invalid_argument("forest: all classification weights are zero");
}

}  // namespace

std::size_t ForestConfig::resolved_mtry(std::size_t p) const {
  if (mtry != 0) return mtry;
  const auto root = static_cast<std::size_t>(std::sqrt(static_cast<double>(p)));
  return std::max<std::size_t>(1, std::min(root, p));
}

void ForestConfig::validate(std::size_t p) const {
  if (n_trees < 1) throw std::invalid_argument("forest: n_trees must be >= 1");
  if (mtry > p)
    throw std::invalid_argument("forest: mtry exceeds covariate count");
  if (max_depth < 1)
    throw std::invalid_argument("forest: max_depth must be >= 1");
  if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0))
    throw std::invalid_argument("forest: subsample_fraction must be in (0, 1]");
  if (!(mincriterion >= 0.0 && mincriterion < 1.0))
    throw std::invalid_argument("forest: mincriterion must be in [0, 1)");
  if (min_node < 1)
    throw std::invalid_argument("forest: min_node must be >= 1");
}

void permutation_moments(const std::vector<double>& c,
                         const std::vector<double>& z, double* mean,
                         double* variance) {
  if (c.size() != z.size())
    throw std::invalid_argument("permutation_moments: length mismatch");
  const std::size_t n = c.size();
  double sum_c = 0.0, sum_z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum_c += c[i];
    sum_z += z[i];
  }
  if (n == 0) {
    *mean = 0.0;
    *variance = 0.0;
    return;
  }
  const double nd = static_cast<double>(n);
  *mean = sum_c * sum_z / nd;
  if (n < 2) {
    *variance = 0.0;
    return;
  }
  const double c_mean = sum_c / nd;
  const double z_mean = sum_z / nd;
  double s_c = 0.0, s_z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s_c += (c[i] - c_mean) * (c[i] - c_mean);
    s_z += (z[i] - z_mean) * (z[i] - z_mean);
  }
  *variance = s_c * s_z / (nd - 1.0);
}

rule::FittedRule fit_conditional_forest(
    const std::vector<std::vector<double>>& x, const std::vector<int>& z,
    const std::vector<double>& w, const ForestConfig& config) {
  check_training_inputs(x, z, w);
  const std::size_t n = x.size();
  const std::size_t p = x.front().size();
  config.validate(p);
  const std::size_t mtry = config.resolved_mtry(p);

  const auto raw =
      std::llround(config.subsample_fraction * static_cast<double>(n));
  const std::size_t subsample_size =
      std::min<std::size_t>(n, std::max<std::int64_t>(1, raw));

  rule::FittedRule fitted;
  fitted.kind = rule::RuleKind::kForest;
  fitted.n_features = p;
  fitted.seed = config.seed;
  fitted.trees.reserve(config.n_trees);
  std::vector<std::size_t> idx;
  for (std::size_t t = 0; t < config.n_trees; ++t) {
    Rng rng(derive_seed(config.seed, 0xF0BE5700ULL + t));
    rng.sample_without_replacement(n, subsample_size, idx);
    std::sort(idx.begin(), idx.end());
    TreeGrower grower(x, z, w, config, mtry, rng);
    grower.grow(idx, 0);
    rule::Tree tree;
    tree.nodes = grower.take_nodes();
    tree.subsample = idx;
    fitted.trees.push_back(std::move(tree));
  }

  std::ostringstream note;
  note << "conditional n_trees=" << config.n_trees << " mtry=" << mtry
       << " max_depth=" << config.max_depth
       << " subsample_fraction=" << csv::format_double(config.subsample_fraction)
       << " mincriterion=" << csv::format_double(config.mincriterion)
       << " min_node=" << config.min_node
       << " weighted_statistics=" << (config.weighted_statistics ? 1 : 0);
  fitted.annotation = note.str();
  return fitted;
}

std::vector<std::size_t> default_mtry_candidates(std::size_t p) {
  std::vector<std::size_t> out;
  for (std::size_t cand : {std::size_t{1}, std::size_t{2}, std::size_t{3}, p}) {
    if (cand >= 1 && cand <= p) out.push_back(cand);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t select_mtry_cv(const std::vector<std::vector<double>>& x,
                           const std::vector<int>& z,
                           const std::vector<double>& w,
                           const std::vector<std::size_t>& candidates,
                           std::size_t folds, const ForestConfig& config) {
  check_training_inputs(x, z, w);
  const std::size_t n = x.size();
  const std::size_t p = x.front().size();
  if (candidates.empty())
    throw std::invalid_argument("select_mtry_cv: no candidates");
  std::vector<std::size_t> grid = candidates;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (std::size_t cand : grid) {
    if (cand < 1 || cand > p)
      throw std::invalid_argument("select_mtry_cv: candidate outside [1, p]");
  }
  if (grid.size() == 1) return grid.front();
  const std::size_t k_folds = std::max<std::size_t>(2, std::min(folds, n));

  std::vector<std::size_t> shuffled(n);
  std::iota(shuffled.begin(), shuffled.end(), 0);
  Rng rng(derive_seed(config.seed, 0x5E1EC7ULL));
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(shuffled[i - 1], shuffled[j]);
  }

  std::vector<double> risk(grid.size(), 0.0);
  for (std::size_t f = 0; f < k_folds; ++f) {
    std::vector<std::vector<double>> train_x;
    std::vector<int> train_z;
    std::vector<double> train_w;
    std::vector<std::size_t> test;
    for (std::size_t i = 0; i < n; ++i) {
      if (i % k_folds == f) {
        test.push_back(shuffled[i]);
      } else {
        train_x.push_back(x[shuffled[i]]);
        train_z.push_back(z[shuffled[i]]);
        train_w.push_back(w[shuffled[i]]);
      }
    }
    if (train_x.empty() || test.empty()) continue;
    for (std::size_t c = 0; c < grid.size(); ++c) {
      ForestConfig fold_config = config;
      fold_config.mtry = grid[c];
      fold_config.seed = derive_seed(config.seed, 0xC0FF00ULL + f * 64 + c);
      const rule::FittedRule fitted =
          fit_conditional_forest(train_x, train_z, train_w, fold_config);
      for (std::size_t i : test)
        if (fitted.predict_one(x[i]) != z[i]) risk[c] += w[i];
    }
  }
  // Ties go to the smallest candidate.
  std::size_t best = 0;
  for (std::size_t c = 1; c < grid.size(); ++c)
    if (risk[c] < risk[best] - 1e-12) best = c;
  return grid[best];
}

ImportanceResult conditional_importance(
    const rule::FittedRule& forest, const std::vector<std::vector<double>>& x,
    const std::vector<int>& z, const std::vector<double>& w,
    const ImportanceOptions& options) {
  if (forest.kind != rule::RuleKind::kForest)
    throw std::invalid_argument("conditional_importance: rule is not a forest");
  check_training_inputs(x, z, w);
  const std::size_t n = x.size();
  const std::size_t p = x.front().size();
  if (p != forest.n_features)
    throw std::invalid_argument("conditional_importance: column mismatch");
  if (options.n_permutations < 1)
    throw std::invalid_argument("conditional_importance: n_permutations >= 1");

  // Pearson correlations between covariate columns.
  std::vector<double> mean(p, 0.0), sd(p, 0.0);
  for (std::size_t k = 0; k < p; ++k) {
    for (std::size_t i = 0; i < n; ++i) mean[k] += x[i][k];
    mean[k] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      sd[k] += (x[i][k] - mean[k]) * (x[i][k] - mean[k]);
    sd[k] = std::sqrt(sd[k]);
  }
  std::vector<std::vector<double>> cor(p, std::vector<double>(p, 0.0));
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = j + 1; k < p; ++k) {
      double cross = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        cross += (x[i][j] - mean[j]) * (x[i][k] - mean[k]);
      const double denom = sd[j] * sd[k];
      cor[j][k] = cor[k][j] = denom > 0.0 ? cross / denom : 0.0;
    }
  }

  ImportanceResult result;
  result.importance.assign(p, 0.0);
  result.marginal_fallbacks.assign(p, 0);
  std::vector<double> contribution_sum(p, 0.0);
  std::vector<std::size_t> contribution_count(p, 0);

  std::vector<char> in_subsample(n);
  std::vector<std::size_t> oos;
  std::vector<double> row;
  for (std::size_t ti = 0; ti < forest.trees.size(); ++ti) {
    const rule::Tree& tree = forest.trees[ti];
    if (tree.subsample.empty())
      throw std::invalid_argument(
          "conditional_importance: forest lacks subsample bookkeeping");
    std::fill(in_subsample.begin(), in_subsample.end(), 0);
    for (std::size_t i : tree.subsample) {
      if (i >= n)
        throw std::invalid_argument(
            "conditional_importance: subsample index outside the matrix");
      in_subsample[i] = 1;
    }
    oos.clear();
    for (std::size_t i = 0; i < n; ++i)
      if (!in_subsample[i]) oos.push_back(i);
    if (oos.empty()) continue;
    double oos_weight = 0.0;
    for (std::size_t i : oos) oos_weight += w[i];
    if (!(oos_weight > 0.0)) continue;
    double base_hits = 0.0;
    for (std::size_t i : oos)
      if (tree.predict(x[i]) == z[i]) base_hits += w[i];
    const double base_acc = base_hits / oos_weight;
    ++result.trees_used;

    for (std::size_t k = 0; k < p; ++k) {
      // Conditioning grid: this tree's split points on covariates
      // correlated with k beyond the threshold.
      std::vector<std::pair<std::size_t, double>> grid;
      for (std::size_t j = 0; j < p; ++j) {
        if (j == k || std::fabs(cor[j][k]) <= options.cor_threshold) continue;
        for (double t : tree.thresholds_on(static_cast<int>(j)))
          grid.emplace_back(j, t);
      }
      std::map<std::string, std::vector<std::size_t>> cells;
      for (std::size_t i : oos) {
        std::string key;
        key.reserve(grid.size());
        for (const auto& [j, t] : grid) key.push_back(x[i][j] <= t ? '1' : '0');
        cells[key].push_back(i);
      }
      if (grid.empty()) ++result.marginal_fallbacks[k];

      Rng rng(derive_seed(options.seed, (ti * 1009 + k) * 7919 + 17));
      for (std::size_t rep = 0; rep < options.n_permutations; ++rep) {
        // Permute x_k within each conditioning cell.
        std::vector<std::pair<std::size_t, double>> permuted;
        permuted.reserve(oos.size());
        for (const auto& [key, members] : cells) {
          std::vector<double> values;
          values.reserve(members.size());
          for (std::size_t i : members) values.push_back(x[i][k]);
          for (std::size_t i = values.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.below(i));
            std::swap(values[i - 1], values[j]);
          }
          for (std::size_t m = 0; m < members.size(); ++m)
            permuted.emplace_back(members[m], values[m]);
        }
        double hits = 0.0;
        for (const auto& [i, value] : permuted) {
          row = x[i];
          row[k] = value;
          if (tree.predict(row) == z[i]) hits += w[i];
        }
        contribution_sum[k] += base_acc - hits / oos_weight;
        ++contribution_count[k];
      }
    }
  }
  for (std::size_t k = 0; k < p; ++k) {
    if (contribution_count[k] > 0)
      result.importance[k] =
          contribution_sum[k] / static_cast<double>(contribution_count[k]);
  }
  return result;
}

}  // namespace ceitr::forest
