#include "chainforge/forest.hpp"

#include "chainforge/artifact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace chainforge {

double DecisionTree::score(const Vector& x) const {
  int at = 0;
  while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(at)];
    at = x(n.feature) < n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(at)].positive_fraction;
}

namespace {

struct TreeBuilder {
  const Matrix& X;
  const Vector& y;
  int max_depth;
  Index mtry;
  RandomSource& rng;
  std::vector<TreeNode> nodes;

  double positive_fraction(const IndexList& rows) const {
    double s = 0.0;
    for (Index r : rows) s += y(r);
    return s / static_cast<double>(rows.size());
  }

  // Gini impurity of a split, weighted by side sizes.
  static double gini(double pos, double count) {
    if (count == 0.0) return 0.0;
    const double p = pos / count;
    return count * 2.0 * p * (1.0 - p);
  }

  int build(const IndexList& rows, int depth) {
    const double frac = positive_fraction(rows);
    const int self = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{-1, 0.0, -1, -1, frac});
    if (depth >= max_depth || frac == 0.0 || frac == 1.0 || rows.size() < 2) return self;

    // Walk features in random order until mtry splittable candidates have
    // been examined; features constant within the node do not count toward
    // the budget. The best candidate split is taken even at zero Gini gain
    // (an impure node may still become separable deeper down, as with the
    // XOR corners); a node only stays a leaf when no feature varies in it.
    const IndexList feature_order = rng.permutation(X.cols());

    double best_impurity = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;
    Index examined = 0;
    for (Index f : feature_order) {
      if (examined >= mtry) break;
      std::vector<std::pair<double, double>> vals;  // (feature value, label)
      vals.reserve(rows.size());
      for (Index r : rows) vals.emplace_back(X(r, f), y(r));
      std::sort(vals.begin(), vals.end());
      bool splittable = false;
      double left_pos = 0.0;
      double left_n = 0.0;
      double total_pos = frac * static_cast<double>(rows.size());
      const double total_n = static_cast<double>(rows.size());
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        left_pos += vals[i].second;
        left_n += 1.0;
        if (vals[i].first == vals[i + 1].first) continue;
        splittable = true;
        const double impurity =
            gini(left_pos, left_n) + gini(total_pos - left_pos, total_n - left_n);
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (vals[i].first + vals[i + 1].first);
        }
      }
      if (splittable) ++examined;
    }
    if (best_feature < 0) return self;  // no feature varies within this node

    IndexList left_rows;
    IndexList right_rows;
    for (Index r : rows)
      (X(r, best_feature) < best_threshold ? left_rows : right_rows).push_back(r);
    if (left_rows.empty() || right_rows.empty()) return self;

    nodes[static_cast<std::size_t>(self)].feature = best_feature;
    nodes[static_cast<std::size_t>(self)].threshold = best_threshold;
    nodes[static_cast<std::size_t>(self)].left = build(left_rows, depth + 1);
    nodes[static_cast<std::size_t>(self)].right = build(right_rows, depth + 1);
    return self;
  }
};

DecisionTree grow_tree(const Matrix& X, const Vector& y, int max_depth, RandomSource& rng) {
  const Index n = X.rows();
  IndexList rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = rng.index(n);  // bootstrap
  const Index mtry = std::max<Index>(
      1, static_cast<Index>(std::floor(std::sqrt(static_cast<double>(X.cols())))));
  TreeBuilder builder{X, y, max_depth, mtry, rng, {}};
  builder.build(rows, 0);
  DecisionTree tree;
  tree.nodes = std::move(builder.nodes);
  return tree;
}

}  // namespace

ForestModel::ForestModel(std::vector<std::vector<DecisionTree>> per_label_trees, Index input_dim,
                         int trees_per_label, int max_depth)
    : per_label_trees_(std::move(per_label_trees)),
      input_dim_(input_dim),
      trees_per_label_(trees_per_label),
      max_depth_(max_depth) {
  if (per_label_trees_.empty()) throw std::invalid_argument("ForestModel: no labels");
}

Vector ForestModel::predict(const Vector& x) const {
  const Vector s = predict_scores(x);
  Vector out(s.size());
  for (Index j = 0; j < s.size(); ++j) out(j) = s(j) >= 0.5 ? 1.0 : 0.0;
  return out;
}

Vector ForestModel::predict_scores(const Vector& x) const {
  check_input(x);
  Vector out(output_dim());
  for (Index j = 0; j < out.size(); ++j) {
    const auto& trees = per_label_trees_[static_cast<std::size_t>(j)];
    double votes = 0.0;
    for (const DecisionTree& t : trees) votes += t.vote(x);
    out(j) = votes / static_cast<double>(trees.size());
  }
  return out;
}

ForestModel fit_forest(const LabeledDataset& data, int trees_per_label, int max_depth,
                       RandomSource rng) {
  if (data.task_kind != TaskKind::classification)
    throw std::invalid_argument("fit_forest: needs classification data");
  if (trees_per_label < 1) throw std::invalid_argument("fit_forest: trees_per_label >= 1");
  if (max_depth < 0) throw std::invalid_argument("fit_forest: max_depth >= 0");

  std::vector<std::vector<DecisionTree>> all;
  all.reserve(static_cast<std::size_t>(data.output_dim()));
  for (Index j = 0; j < data.output_dim(); ++j) {
    const Vector y = data.labels.col(j);
    std::vector<DecisionTree> trees;
    trees.reserve(static_cast<std::size_t>(trees_per_label));
    for (int t = 0; t < trees_per_label; ++t) {
      RandomSource tree_rng = rng.derive("tree-" + std::to_string(t));
      trees.push_back(grow_tree(data.features, y, max_depth, tree_rng));
    }
    all.push_back(std::move(trees));
  }
  return ForestModel(std::move(all), data.input_dim(), trees_per_label, max_depth);
}

ModelArtifact ForestModel::to_artifact() const {
  ModelArtifact a;
  a.kind = "forest";
  a.input_dim = input_dim_;
  a.output_dim = output_dim();
  nlohmann::json labels = nlohmann::json::array();
  for (const auto& trees : per_label_trees_) {
    nlohmann::json jtrees = nlohmann::json::array();
    for (const DecisionTree& t : trees) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const TreeNode& n : t.nodes)
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.positive_fraction});
      jtrees.push_back(std::move(nodes));
    }
    labels.push_back(std::move(jtrees));
  }
  a.payload = {{"labels", std::move(labels)},
               {"trees_per_label", trees_per_label_},
               {"max_depth", max_depth_}};
  return a;
}

}  // namespace chainforge
