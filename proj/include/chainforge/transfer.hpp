#pragma once

#include "chainforge/multilabel.hpp"

#include <memory>
#include <vector>

namespace chainforge {

/// Affine map from target input space into a source model's input space:
/// apply(x) = U x + u with U of shape d_S x d_T.
struct LinearMap {
  Matrix U;
  Vector u;
};

Vector apply_map(const LinearMap& f, const Vector& x);

/// Fresh map from the search family: U entries Gaussian with sd 1/sqrt(d_T),
/// offset zero.
LinearMap random_map(Index source_dim, Index target_dim, RandomSource& rng);

/// Per-feature z-scoring fitted on training features; zero-variance features
/// pass through unscaled.
struct Standardizer {
  Vector mean;
  Vector sd;

  static Standardizer fit(const Matrix& X);
  [[nodiscard]] Vector apply(const Vector& x) const;
  [[nodiscard]] Matrix apply_rows(const Matrix& X) const;
};

enum class SearchObjective { mi, cv_loss };
enum class CvLossMetric { zero_one, hamming };

struct SearchConfig {
  int budget = 100;
  double proposal_sd = 0.1;
  SearchObjective objective = SearchObjective::cv_loss;
  int cv_folds = 3;
  CvLossMetric cv_loss_metric = CvLossMetric::zero_one;
  RandomSource rng{0};
};

/// Row-wise hard source predictions for mapped inputs. Touches the source
/// model only through predict.
Matrix make_source_features(const Predictor& source, const LinearMap& f, const Matrix& X_T);

/// Map quality, higher is better. mi scores the mean pairwise mutual
/// information between source predictions and target labels; cv_loss scores
/// mean (1 - loss) of a fresh target model over internal cross-validation
/// folds. Deterministic in (f, data, cfg.rng): the same map always scores the
/// same value, so acceptance decisions compare like with like.
double score_map(const LinearMap& f, const Predictor& source, const LabeledDataset& data,
                 const SearchConfig& cfg, const BaseSpec& target_spec);

struct HillClimbResult {
  LinearMap map;
  std::vector<double> accepted_trace;  // strictly increasing, starts at the initial score
  std::vector<double> best_trace;      // best-so-far per iteration, non-decreasing
};

/// Vanilla hill climbing over the map family: Gaussian proposals on both U and
/// u, acceptance only on strict improvement.
HillClimbResult hill_climb_map(const Predictor& source, const LabeledDataset& data,
                               const SearchConfig& cfg, const BaseSpec& target_spec);

/// Black-box source + searched linear map + target model over [x_T, y_S].
/// Target features are z-scored on the map path only; the target model sees
/// the raw features next to the source predictions.
class TransferChainModel : public Model {
 public:
  TransferChainModel(std::shared_ptr<const Predictor> source, Standardizer standardizer,
                     LinearMap map, std::shared_ptr<Model> target, TaskKind task_kind);

  [[nodiscard]] Index input_dim() const override { return static_cast<Index>(map_.U.cols()); }
  [[nodiscard]] Index output_dim() const override { return target_->output_dim(); }
  [[nodiscard]] Vector predict(const Vector& x) const override;
  [[nodiscard]] Vector predict_scores(const Vector& x) const override;
  [[nodiscard]] ModelArtifact to_artifact() const override;

  [[nodiscard]] const Predictor& source() const { return *source_; }
  [[nodiscard]] const std::shared_ptr<const Predictor>& source_ptr() const { return source_; }
  [[nodiscard]] const LinearMap& map() const { return map_; }
  [[nodiscard]] const Standardizer& standardizer() const { return standardizer_; }
  [[nodiscard]] Model& target() { return *target_; }
  [[nodiscard]] const Model& target() const { return *target_; }

  /// The target model's training view of a dataset: [x_T, y_S] against the
  /// original labels.
  [[nodiscard]] LabeledDataset augment(const LabeledDataset& data) const;

 private:
  std::shared_ptr<const Predictor> source_;
  Standardizer standardizer_;
  LinearMap map_;
  std::shared_ptr<Model> target_;
  TaskKind task_kind_;
};

struct TransferChainFit {
  std::shared_ptr<TransferChainModel> model;
  HillClimbResult search;
};

/// search_spec, when given, configures the fresh target models the map search
/// trains internally; the final target model always follows target_spec.
TransferChainFit fit_transfer_chain(std::shared_ptr<const Predictor> source,
                                    const LabeledDataset& data, const SearchConfig& cfg,
                                    const BaseSpec& target_spec, const TrainConfig& train_cfg,
                                    const BaseSpec* search_spec = nullptr);

Vector predict_transfer_chain(const TransferChainModel& model, const Vector& x);

/// Ensemble of transfer chains: every member draws a fresh random map (no
/// search) and trains its own target model; all members share the source.
EnsembleModel fit_etc(std::shared_ptr<const Predictor> source, const LabeledDataset& data,
                      int n_members, const BaseSpec& target_spec, const TrainConfig& train_cfg,
                      RandomSource rng);

/// Random layer projection: frozen random hidden layers with a trained linear
/// readout, improved by redrawing the hidden weights and keeping them only
/// when the internal cross-validation score improves.
class RlpModel : public Model {
 public:
  RlpModel(std::vector<AffineLayer> hidden, LinearModel readout);

  [[nodiscard]] Index input_dim() const override;
  [[nodiscard]] Index output_dim() const override { return readout_.output_dim(); }
  [[nodiscard]] Vector predict(const Vector& x) const override;
  [[nodiscard]] Vector predict_scores(const Vector& x) const override;
  [[nodiscard]] ModelArtifact to_artifact() const override;  // persists as an mlp

  [[nodiscard]] const std::vector<AffineLayer>& hidden() const { return hidden_; }
  [[nodiscard]] const LinearModel& readout() const { return readout_; }
  [[nodiscard]] Vector hidden_activation(const Vector& x) const;

 private:
  std::vector<AffineLayer> hidden_;
  LinearModel readout_;
};

struct RlpSearchState {
  std::shared_ptr<RlpModel> model;
  double best_score = 0.0;
  std::vector<double> accepted_trace;
  std::vector<double> best_trace;
  int arch_v = 1;
  int trials_done = 0;
};

RlpSearchState rlp_init(const LabeledDataset& data, int arch_v, const TrainConfig& train_cfg,
                        const SearchConfig& search_cfg, int readout_rounds = 5);
/// One hill-climb trial; returns whether the fresh hidden weights were kept.
bool rlp_step(RlpSearchState& state, const LabeledDataset& data, const TrainConfig& train_cfg,
              const SearchConfig& search_cfg, int readout_rounds = 5);
RlpSearchState fit_rlp(const LabeledDataset& data, int arch_v, const TrainConfig& train_cfg,
                       const SearchConfig& search_cfg, int readout_rounds = 5);

}  // namespace chainforge
