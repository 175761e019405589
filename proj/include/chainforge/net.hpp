#pragma once

#include "chainforge/dataset.hpp"
#include "chainforge/predictor.hpp"
#include "chainforge/random.hpp"

#include <span>
#include <string>
#include <vector>

namespace chainforge {

enum class Link { identity, logistic };

struct AffineLayer {
  Matrix W;
  Vector b;
};

/// SGD settings shared by the gradient-trained models. The weight decay
/// penalty applies to weight matrices only, never biases.
struct TrainConfig {
  double learning_rate = 0.01;
  double l2_penalty = 0.05;
  int iterations_per_step = 100;
  RandomSource rng{0};
};

namespace net {

double logistic(double z);
const char* link_name(Link link);
Link link_from_name(const std::string& name);
/// Forward pass through ReLU hidden layers and a linked output layer.
Vector forward_scores(std::span<const AffineLayer> layers, Link link, const Vector& x);
Vector threshold(const Vector& scores, Link link);

/// Per-example training loss: squared error (identity) or log-loss (logistic),
/// summed over outputs, plus (l2/2) * sum of squared weight-matrix entries.
double example_loss(std::span<const AffineLayer> layers, Link link, const Vector& x,
                    const Vector& y, double l2);

/// Analytic gradient of example_loss; same shapes as the layers.
std::vector<AffineLayer> example_gradient(std::span<const AffineLayer> layers, Link link,
                                          const Vector& x, const Vector& y, double l2);

/// Runs cfg.iterations_per_step single-example updates with examples drawn by
/// cfg.rng and an inverse-scaling learning rate eta_t = lr / (1+t)^0.25 where
/// t counts all updates this model has ever taken (in/out via step_count).
void sgd_run(std::vector<AffineLayer>& layers, Link link, const LabeledDataset& data,
             TrainConfig& cfg, long& step_count);

}  // namespace net

/// One affine map per output with an identity or logistic link; rows are
/// independent, so the logistic variant is one logistic regression per output.
class LinearModel : public Model {
 public:
  LinearModel(Matrix W, Vector b, Link link);
  /// Gaussian init with sd 1/sqrt(d); zero biases.
  static LinearModel init(Index d, Index m, Link link, RandomSource& rng);

  [[nodiscard]] Index input_dim() const override { return layer_.W.cols(); }
  [[nodiscard]] Index output_dim() const override { return layer_.W.rows(); }
  [[nodiscard]] Vector predict(const Vector& x) const override;
  [[nodiscard]] Vector predict_scores(const Vector& x) const override;
  [[nodiscard]] ModelArtifact to_artifact() const override;

  [[nodiscard]] Link link() const { return link_; }
  [[nodiscard]] const AffineLayer& layer() const { return layer_; }
  AffineLayer& layer() { return layer_; }
  [[nodiscard]] long steps_taken() const { return steps_; }
  long& steps_taken() { return steps_; }

 private:
  AffineLayer layer_;
  Link link_;
  long steps_ = 0;
};

/// ReLU multi-layer perceptron. Architecture v=0 has no hidden layers (and is
/// behaviorally identical to LinearModel), v=1 one hidden layer of 400 units,
/// v=2 two hidden layers of 100 units.
class MlpModel : public Model {
 public:
  MlpModel(std::vector<AffineLayer> layers, Link link);
  static MlpModel init(Index d, Index m, int arch_v, Link link, RandomSource& rng);
  static std::vector<Index> hidden_sizes(int arch_v);

  [[nodiscard]] Index input_dim() const override { return layers_.front().W.cols(); }
  [[nodiscard]] Index output_dim() const override { return layers_.back().W.rows(); }
  [[nodiscard]] Vector predict(const Vector& x) const override;
  [[nodiscard]] Vector predict_scores(const Vector& x) const override;
  [[nodiscard]] ModelArtifact to_artifact() const override;

  [[nodiscard]] Link link() const { return link_; }
  [[nodiscard]] const std::vector<AffineLayer>& layers() const { return layers_; }
  std::vector<AffineLayer>& layers() { return layers_; }
  [[nodiscard]] long steps_taken() const { return steps_; }
  long& steps_taken() { return steps_; }

 private:
  std::vector<AffineLayer> layers_;
  Link link_;
  long steps_ = 0;
};

void sgd_step(LinearModel& model, const LabeledDataset& data, TrainConfig& cfg);
void sgd_step(MlpModel& model, const LabeledDataset& data, TrainConfig& cfg);

}  // namespace chainforge
