#pragma once

#include "chainforge/dataset.hpp"
#include "chainforge/forest.hpp"
#include "chainforge/net.hpp"

#include <memory>
#include <vector>

namespace chainforge {

enum class LearnerKind { linear, mlp, forest };

/// Recipe for one base learner inside a composer. sgd_rounds controls how many
/// TrainConfig::iterations_per_step batches a gradient-trained base receives
/// when fit to convergence-ish (the harness steps models itself instead).
struct BaseSpec {
  LearnerKind kind = LearnerKind::linear;
  Link link = Link::logistic;
  int mlp_arch = 1;
  int sgd_rounds = 50;
  int trees_per_label = 100;
  int max_depth = 25;
};

/// Trains one model with `m` outputs on (X, Y) per the spec. Linear and MLP
/// bases yield a single multi-output model; forests are per-label by nature.
std::shared_ptr<Model> train_multi_output(const Matrix& X, const Matrix& Y, TaskKind kind,
                                          const BaseSpec& spec, const TrainConfig& cfg,
                                          RandomSource rng);

/// Independent models, one per label (binary relevance). Linear bases collapse
/// to one multi-output LinearModel (rows are independent); MLP bases get one
/// single-output net per label.
std::shared_ptr<Model> fit_br(const LabeledDataset& data, const BaseSpec& base,
                              const TrainConfig& cfg);

/// Per-label independent models wrapper used when the base cannot be expressed
/// as one multi-output model (MLP binary relevance).
class IndependentModel : public Model {
 public:
  IndependentModel(std::vector<std::shared_ptr<Model>> per_label, Index input_dim);
  [[nodiscard]] Index input_dim() const override { return input_dim_; }
  [[nodiscard]] Index output_dim() const override {
    return static_cast<Index>(per_label_.size());
  }
  [[nodiscard]] Vector predict(const Vector& x) const override;
  [[nodiscard]] Vector predict_scores(const Vector& x) const override;
  [[nodiscard]] ModelArtifact to_artifact() const override;  // throws: not a wire kind
  [[nodiscard]] const std::vector<std::shared_ptr<Model>>& per_label() const {
    return per_label_;
  }

 private:
  std::vector<std::shared_ptr<Model>> per_label_;
  Index input_dim_;
};

/// Classifier/regressor chain: link j consumes the features plus the j-1
/// preceding labels in chain order (true labels at training time, own
/// predictions at prediction time).
class ChainModel : public Model {
 public:
  ChainModel(IndexList order, std::vector<std::shared_ptr<Model>> links, Index input_dim,
             TaskKind task_kind, bool feed_scores = false);

  [[nodiscard]] Index input_dim() const override { return input_dim_; }
  [[nodiscard]] Index output_dim() const override { return static_cast<Index>(links_.size()); }
  [[nodiscard]] Vector predict(const Vector& x) const override;
  [[nodiscard]] Vector predict_scores(const Vector& x) const override;
  [[nodiscard]] ModelArtifact to_artifact() const override;

  [[nodiscard]] const IndexList& order() const { return order_; }
  [[nodiscard]] const std::vector<std::shared_ptr<Model>>& links() const { return links_; }
  [[nodiscard]] TaskKind task_kind() const { return task_kind_; }
  [[nodiscard]] bool feed_scores() const { return feed_scores_; }

 private:
  [[nodiscard]] std::pair<Vector, Vector> run_chain(const Vector& x) const;  // (hard, scores)

  IndexList order_;
  std::vector<std::shared_ptr<Model>> links_;
  Index input_dim_;
  TaskKind task_kind_;
  bool feed_scores_;
};

/// Training design matrix for chain position `position`: the original features
/// with the true labels preceding that position (in chain order) appended.
/// Exposed so tests can assert that chain training reads labels, never
/// predictions.
Matrix chain_training_inputs(const LabeledDataset& data, const IndexList& order, Index position);

ChainModel fit_chain(const LabeledDataset& data, const IndexList& order, const BaseSpec& base,
                     const TrainConfig& cfg, bool feed_scores = false);
Vector predict_chain(const ChainModel& model, const Vector& x);

/// Mean-of-scores ensemble; classification thresholds the mean at 0.5.
class EnsembleModel : public Model {
 public:
  EnsembleModel(std::vector<std::shared_ptr<Predictor>> members, TaskKind task_kind);

  [[nodiscard]] Index input_dim() const override { return members_.front()->input_dim(); }
  [[nodiscard]] Index output_dim() const override { return members_.front()->output_dim(); }
  [[nodiscard]] Vector predict(const Vector& x) const override;
  [[nodiscard]] Vector predict_scores(const Vector& x) const override;
  [[nodiscard]] ModelArtifact to_artifact() const override;

  [[nodiscard]] const std::vector<std::shared_ptr<Predictor>>& members() const {
    return members_;
  }
  [[nodiscard]] TaskKind task_kind() const { return task_kind_; }
  void add_member(std::shared_ptr<Predictor> member);

 private:
  std::vector<std::shared_ptr<Predictor>> members_;
  TaskKind task_kind_;
};

EnsembleModel fit_ensemble_of_chains(const LabeledDataset& data, int n_members,
                                     const BaseSpec& base, const TrainConfig& cfg,
                                     RandomSource rng);
EnsembleModel fit_bagging(const LabeledDataset& data, int n_members, const BaseSpec& base,
                          const TrainConfig& cfg, RandomSource rng, bool resample = true);

/// Stacked model: meta layer j consumes [x, first-layer predictions].
class StackedModel : public Model {
 public:
  StackedModel(std::shared_ptr<Predictor> first_layer,
               std::vector<std::shared_ptr<Model>> meta_layer);

  [[nodiscard]] Index input_dim() const override { return first_->input_dim(); }
  [[nodiscard]] Index output_dim() const override {
    return static_cast<Index>(meta_.size());
  }
  [[nodiscard]] Vector predict(const Vector& x) const override;
  [[nodiscard]] Vector predict_scores(const Vector& x) const override;
  [[nodiscard]] ModelArtifact to_artifact() const override;  // throws: not a wire kind

  [[nodiscard]] const Predictor& first_layer() const { return *first_; }

 private:
  std::shared_ptr<Predictor> first_;
  std::vector<std::shared_ptr<Model>> meta_;
};

/// Meta-layer training inputs: [x, first-layer predictions] row by row.
/// Exposed so tests can assert the meta layer trains on predictions.
Matrix stacking_meta_inputs(const LabeledDataset& data, const Predictor& first_layer);

StackedModel fit_stacking(const LabeledDataset& data, const BaseSpec& base,
                          const BaseSpec& meta_base, const TrainConfig& cfg);

}  // namespace chainforge
