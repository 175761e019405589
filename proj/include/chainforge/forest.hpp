#pragma once

#include "chainforge/dataset.hpp"
#include "chainforge/predictor.hpp"
#include "chainforge/random.hpp"

#include <vector>

namespace chainforge {

/// Binary CART split node; feature < 0 marks a leaf holding the positive-class
/// fraction of the training rows that reached it.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double positive_fraction = 0.0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  [[nodiscard]] double score(const Vector& x) const;  // leaf positive fraction
  [[nodiscard]] double vote(const Vector& x) const { return score(x) >= 0.5 ? 1.0 : 0.0; }
};

/// Per-label random forest: each label gets its own bag of trees, each tree
/// grown on a bootstrap resample with sqrt(d) feature candidates per node.
/// Hard prediction is the majority vote; the score is the voting fraction.
class ForestModel : public Model {
 public:
  ForestModel(std::vector<std::vector<DecisionTree>> per_label_trees, Index input_dim,
              int trees_per_label, int max_depth);

  [[nodiscard]] Index input_dim() const override { return input_dim_; }
  [[nodiscard]] Index output_dim() const override {
    return static_cast<Index>(per_label_trees_.size());
  }
  [[nodiscard]] Vector predict(const Vector& x) const override;
  [[nodiscard]] Vector predict_scores(const Vector& x) const override;
  [[nodiscard]] ModelArtifact to_artifact() const override;

  [[nodiscard]] const std::vector<std::vector<DecisionTree>>& per_label_trees() const {
    return per_label_trees_;
  }
  [[nodiscard]] int trees_per_label() const { return trees_per_label_; }
  [[nodiscard]] int max_depth() const { return max_depth_; }

 private:
  std::vector<std::vector<DecisionTree>> per_label_trees_;
  Index input_dim_ = 0;
  int trees_per_label_ = 0;
  int max_depth_ = 0;
};

ForestModel fit_forest(const LabeledDataset& data, int trees_per_label, int max_depth,
                       RandomSource rng);

}  // namespace chainforge
