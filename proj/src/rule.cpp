#include "ceitr/rule.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ceitr/csv.hpp"
#include "ceitr/errors.hpp"

namespace ceitr::rule {

namespace {

constexpr char kMagic[] = "ceitr-rule v1";

[[noreturn]] void bad_file(const std::string& what) {
  throw std::runtime_error("rule file: " + what);
}

std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

// Seeds use the full unsigned 64-bit range, so they cannot go through the
// signed CSV integer parser.
std::uint64_t parse_seed(const std::string& field) {
  std::uint64_t v = 0;
  const auto res =
      std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    bad_file("bad seed field '" + field + "'");
  return v;
}

}  // namespace

int Tree::predict(const std::vector<double>& x) const {
  if (nodes.empty()) return 0;
  std::size_t at = 0;
  while (!nodes[at].is_leaf()) {
    const Node& node = nodes[at];
    at = static_cast<std::size_t>(x[static_cast<std::size_t>(node.var)] <=
                                          node.threshold
                                      ? node.left
                                      : node.right);
  }
  return nodes[at].label;
}

std::size_t Tree::leaf_count() const {
  std::size_t count = 0;
  for (const Node& node : nodes)
    if (node.is_leaf()) ++count;
  return count;
}

std::vector<double> Tree::thresholds_on(int var) const {
  std::vector<double> out;
  for (const Node& node : nodes) {
    if (!node.is_leaf() && node.var == var) out.push_back(node.threshold);
  }
  return out;
}

std::string rule_kind_name(RuleKind kind) {
  switch (kind) {
    case RuleKind::kNaive:
      return "naive";
    case RuleKind::kTree:
      return "tree";
    case RuleKind::kForest:
      return "forest";
  }
  throw std::logic_error("unknown rule kind");
}

RuleKind parse_rule_kind(const std::string& name) {
  if (name == "naive") return RuleKind::kNaive;
  if (name == "tree") return RuleKind::kTree;
  if (name == "forest") return RuleKind::kForest;
  throw std::invalid_argument("unknown rule kind: " + name);
}

int FittedRule::predict_one(const std::vector<double>& x) const {
  if (x.size() != n_features) {
    throw std::invalid_argument("predict: expected " +
                                std::to_string(n_features) +
                                " covariates, got " + std::to_string(x.size()));
  }
  switch (kind) {
    case RuleKind::kNaive: {
      const double gain = lambda * (survival.restricted_mean(x, 1) -
                                    survival.restricted_mean(x, 0)) -
                          (cost.predict(x, 1) - cost.predict(x, 0));
      return gain > 0.0 ? 1 : 0;
    }
    case RuleKind::kTree:
      return trees.front().predict(x);
    case RuleKind::kForest: {
      std::size_t ones = 0;
      for (const Tree& tree : trees) ones += tree.predict(x) != 0;
      // Strict majority treats; ties recommend control.
      return 2 * ones > trees.size() ? 1 : 0;
    }
  }
  throw std::logic_error("unknown rule kind");
}

std::vector<int> predict_rule(const FittedRule& fitted,
                              const std::vector<std::vector<double>>& x) {
  std::vector<int> out;
  out.reserve(x.size());
  for (const std::vector<double>& row : x) out.push_back(fitted.predict_one(row));
  return out;
}

void write_rule(const std::string& path, const FittedRule& fitted) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << kMagic << "\n";
  out << "kind " << rule_kind_name(fitted.kind) << "\n";
  out << "features " << fitted.n_features << "\n";
  out << "seed " << fitted.seed << "\n";
  if (!fitted.annotation.empty()) out << "annotation " << fitted.annotation << "\n";
  if (fitted.kind == RuleKind::kNaive) {
    out << "lambda " << csv::format_double(fitted.lambda) << "\n";
    out << "tau " << csv::format_double(fitted.survival.tau) << "\n";
    out << "misspecified " << (fitted.survival.spec.misspecified ? 1 : 0)
        << "\n";
    out << "interactions " << fitted.survival.spec.interaction_covariates.size();
    for (std::size_t k : fitted.survival.spec.interaction_covariates)
      out << " " << k;
    out << "\n";
    out << "survival " << fitted.survival.coef.size();
    for (double c : fitted.survival.coef) out << " " << csv::format_double(c);
    out << "\n";
    out << "cost " << fitted.cost.coef.size();
    for (double c : fitted.cost.coef) out << " " << csv::format_double(c);
    out << "\n";
  } else {
    out << "trees " << fitted.trees.size() << "\n";
    for (std::size_t t = 0; t < fitted.trees.size(); ++t) {
      const Tree& tree = fitted.trees[t];
      out << "tree " << t << " nodes " << tree.nodes.size() << "\n";
      for (const Node& node : tree.nodes) {
        out << "node " << node.var << " " << csv::format_double(node.threshold)
            << " " << node.left << " " << node.right << " " << node.label
            << "\n";
      }
      if (!tree.subsample.empty()) {
        out << "subsample " << tree.subsample.size();
        for (std::size_t i : tree.subsample) out << " " << i;
        out << "\n";
      }
    }
  }
  out << "end\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

FittedRule read_rule(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMagic) bad_file("bad header");

  FittedRule fitted;
  bool saw_kind = false;
  bool saw_end = false;
  Tree* open_tree = nullptr;
  std::size_t pending_nodes = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> tok = tokenize(line);
    const std::string& key = tok.front();
    if (key == "end") {
      saw_end = true;
      break;
    }
    if (key == "node") {
      if (open_tree == nullptr || pending_nodes == 0)
        bad_file("node outside a tree block");
      if (tok.size() != 6) bad_file("malformed node line");
      Node node;
      node.var = static_cast<int>(csv::parse_int(tok[1]));
      node.threshold = csv::parse_double(tok[2]);
      node.left = static_cast<int>(csv::parse_int(tok[3]));
      node.right = static_cast<int>(csv::parse_int(tok[4]));
      node.label = static_cast<int>(csv::parse_int(tok[5]));
      open_tree->nodes.push_back(node);
      --pending_nodes;
      continue;
    }
    if (key == "kind") {
      if (tok.size() != 2) bad_file("malformed kind line");
      fitted.kind = parse_rule_kind(tok[1]);
      saw_kind = true;
    } else if (key == "features") {
      fitted.n_features = static_cast<std::size_t>(csv::parse_int(tok.at(1)));
    } else if (key == "seed") {
      fitted.seed = parse_seed(tok.at(1));
    } else if (key == "annotation") {
      fitted.annotation = line.substr(std::string("annotation ").size());
    } else if (key == "lambda") {
      fitted.lambda = csv::parse_double(tok.at(1));
    } else if (key == "tau") {
      fitted.survival.tau = csv::parse_double(tok.at(1));
    } else if (key == "misspecified") {
      const bool flag = csv::parse_int(tok.at(1)) != 0;
      fitted.survival.spec.misspecified = flag;
      fitted.cost.spec.misspecified = flag;
    } else if (key == "interactions") {
      const std::size_t count =
          static_cast<std::size_t>(csv::parse_int(tok.at(1)));
      if (tok.size() != count + 2) bad_file("malformed interactions line");
      std::vector<std::size_t> idx(count);
      for (std::size_t i = 0; i < count; ++i)
        idx[i] = static_cast<std::size_t>(csv::parse_int(tok[i + 2]));
      fitted.survival.spec.interaction_covariates = idx;
      fitted.cost.spec.interaction_covariates = std::move(idx);
    } else if (key == "survival" || key == "cost") {
      const std::size_t count =
          static_cast<std::size_t>(csv::parse_int(tok.at(1)));
      if (tok.size() != count + 2) bad_file("malformed coefficient line");
      std::vector<double> coef(count);
      for (std::size_t i = 0; i < count; ++i)
        coef[i] = csv::parse_double(tok[i + 2]);
      (key == "survival" ? fitted.survival.coef : fitted.cost.coef) =
          std::move(coef);
    } else if (key == "trees") {
      fitted.trees.reserve(static_cast<std::size_t>(csv::parse_int(tok.at(1))));
    } else if (key == "tree") {
      if (pending_nodes != 0) bad_file("tree block ended early");
      if (tok.size() != 4 || tok[2] != "nodes") bad_file("malformed tree line");
      fitted.trees.emplace_back();
      open_tree = &fitted.trees.back();
      pending_nodes = static_cast<std::size_t>(csv::parse_int(tok[3]));
    } else if (key == "subsample") {
      if (open_tree == nullptr) bad_file("subsample outside a tree block");
      const std::size_t count =
          static_cast<std::size_t>(csv::parse_int(tok.at(1)));
      if (tok.size() != count + 2) bad_file("malformed subsample line");
      open_tree->subsample.resize(count);
      for (std::size_t i = 0; i < count; ++i)
        open_tree->subsample[i] =
            static_cast<std::size_t>(csv::parse_int(tok[i + 2]));
    } else {
      bad_file("unknown key: " + key);
    }
  }
  if (!saw_kind || !saw_end) bad_file("truncated file");
  if (pending_nodes != 0) bad_file("truncated tree block");

  // Structural checks: child indices in range, leaves labeled 0/1.
  for (const Tree& tree : fitted.trees) {
    const int n = static_cast<int>(tree.nodes.size());
    for (const Node& node : tree.nodes) {
      if (node.is_leaf()) {
        if (node.label != 0 && node.label != 1) bad_file("leaf label not 0/1");
        continue;
      }
      if (node.var >= static_cast<int>(fitted.n_features))
        bad_file("split variable out of range");
      if (node.left < 0 || node.left >= n || node.right < 0 || node.right >= n)
        bad_file("child index out of range");
    }
  }
  if (fitted.kind == RuleKind::kTree && fitted.trees.size() != 1)
    bad_file("tree rule must hold exactly one tree");
  if (fitted.kind == RuleKind::kForest && fitted.trees.empty())
    bad_file("forest rule holds no trees");
  if (fitted.kind == RuleKind::kNaive &&
      (fitted.survival.coef.empty() || fitted.cost.coef.empty()))
    bad_file("naive rule missing coefficients");
  return fitted;
}

}  // namespace ceitr::rule
