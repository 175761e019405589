#include "chainforge/transfer.hpp"

#include "chainforge/artifact.hpp"
#include "chainforge/errors.hpp"
#include "chainforge/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace chainforge {

Vector apply_map(const LinearMap& f, const Vector& x) {
  if (x.size() != f.U.cols())
    throw std::invalid_argument("apply_map: input length " + std::to_string(x.size()) +
                                " does not match map width " + std::to_string(f.U.cols()));
  return f.U * x + f.u;
}

LinearMap random_map(Index source_dim, Index target_dim, RandomSource& rng) {
  LinearMap f;
  f.U = rng.gaussian_matrix(source_dim, target_dim,
                            1.0 / std::sqrt(static_cast<double>(target_dim)));
  f.u = Vector::Zero(source_dim);
  return f;
}

Standardizer Standardizer::fit(const Matrix& X) {
  Standardizer s;
  s.mean = X.colwise().mean().transpose();
  s.sd = Vector(X.cols());
  const double n = static_cast<double>(X.rows());
  for (Index j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - s.mean(j)).square().sum() / n;
    s.sd(j) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Vector Standardizer::apply(const Vector& x) const {
  return (x - mean).cwiseQuotient(sd);
}

Matrix Standardizer::apply_rows(const Matrix& X) const {
  return (X.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
}

Matrix make_source_features(const Predictor& source, const LinearMap& f, const Matrix& X_T) {
  if (f.U.rows() != source.input_dim())
    throw std::invalid_argument("make_source_features: map output width " +
                                std::to_string(f.U.rows()) +
                                " does not match source input_dim " +
                                std::to_string(source.input_dim()) + " (map->source boundary)");
  if (X_T.cols() != f.U.cols())
    throw std::invalid_argument("make_source_features: data width " +
                                std::to_string(X_T.cols()) + " does not match map input " +
                                std::to_string(f.U.cols()) + " (data->map boundary)");
  Matrix out(X_T.rows(), source.output_dim());
  for (Index i = 0; i < X_T.rows(); ++i)
    out.row(i) = source.predict(apply_map(f, X_T.row(i).transpose())).transpose();
  return out;
}

namespace {

Matrix augment_features(const Matrix& raw, const Matrix& source_features) {
  Matrix aug(raw.rows(), raw.cols() + source_features.cols());
  aug.leftCols(raw.cols()) = raw;
  aug.rightCols(source_features.cols()) = source_features;
  return aug;
}

double cv_score(const Matrix& aug, const LabeledDataset& data, const SearchConfig& cfg,
                const BaseSpec& target_spec) {
  RandomSource rng = cfg.rng;
  const std::vector<IndexList> folds =
      kfold_indices(data.rows(), cfg.cv_folds, rng.derive("cv-folds"));
  double total = 0.0;
  for (std::size_t k = 0; k < folds.size(); ++k) {
    IndexList train_rows;
    for (std::size_t other = 0; other < folds.size(); ++other)
      if (other != k)
        train_rows.insert(train_rows.end(), folds[other].begin(), folds[other].end());
    const IndexList& test_rows = folds[k];

    Matrix Xtr(static_cast<Index>(train_rows.size()), aug.cols());
    Matrix Ytr(static_cast<Index>(train_rows.size()), data.output_dim());
    for (Index i = 0; i < Xtr.rows(); ++i) {
      Xtr.row(i) = aug.row(train_rows[static_cast<std::size_t>(i)]);
      Ytr.row(i) = data.labels.row(train_rows[static_cast<std::size_t>(i)]);
    }
    const auto model =
        train_multi_output(Xtr, Ytr, data.task_kind, target_spec, TrainConfig{},
                           rng.derive("cv-fit-" + std::to_string(k)));

    Matrix Xte(static_cast<Index>(test_rows.size()), aug.cols());
    Matrix Yte(static_cast<Index>(test_rows.size()), data.output_dim());
    for (Index i = 0; i < Xte.rows(); ++i) {
      Xte.row(i) = aug.row(test_rows[static_cast<std::size_t>(i)]);
      Yte.row(i) = data.labels.row(test_rows[static_cast<std::size_t>(i)]);
    }
    const Matrix pred = model->predict_rows(Xte);
    const double score = cfg.cv_loss_metric == CvLossMetric::zero_one
                             ? exact_match_accuracy(Yte, pred)
                             : hamming_score(Yte, pred);
    total += score;
  }
  return total / static_cast<double>(folds.size());
}

double score_standardized(const LinearMap& f, const Predictor& source, const Matrix& Z,
                          const LabeledDataset& data, const SearchConfig& cfg,
                          const BaseSpec& target_spec) {
  const Matrix feats = make_source_features(source, f, Z);
  if (cfg.objective == SearchObjective::mi) return vector_mi(feats, data.labels);
  return cv_score(augment_features(data.features, feats), data, cfg, target_spec);
}

}  // namespace

double score_map(const LinearMap& f, const Predictor& source, const LabeledDataset& data,
                 const SearchConfig& cfg, const BaseSpec& target_spec) {
  const Standardizer std_ = Standardizer::fit(data.features);
  return score_standardized(f, source, std_.apply_rows(data.features), data, cfg, target_spec);
}

HillClimbResult hill_climb_map(const Predictor& source, const LabeledDataset& data,
                               const SearchConfig& cfg, const BaseSpec& target_spec) {
  if (cfg.budget < 0) throw std::invalid_argument("hill_climb_map: budget must be >= 0");
  const Standardizer std_ = Standardizer::fit(data.features);
  const Matrix Z = std_.apply_rows(data.features);
  RandomSource rng = cfg.rng;
  RandomSource init_rng = rng.derive("init");
  RandomSource proposal_rng = rng.derive("proposals");

  HillClimbResult result;
  result.map = random_map(source.input_dim(), data.input_dim(), init_rng);
  double current = score_standardized(result.map, source, Z, data, cfg, target_spec);
  result.accepted_trace.push_back(current);
  result.best_trace.push_back(current);

  for (int it = 0; it < cfg.budget; ++it) {
    LinearMap candidate;
    candidate.U = result.map.U +
                  cfg.proposal_sd * proposal_rng.gaussian_matrix(result.map.U.rows(),
                                                                 result.map.U.cols(), 1.0);
    candidate.u =
        result.map.u + cfg.proposal_sd * proposal_rng.gaussian_vector(result.map.u.size(), 1.0);
    const double score = score_standardized(candidate, source, Z, data, cfg, target_spec);
    if (score > current) {  // strict improvement only
      result.map = std::move(candidate);
      current = score;
      result.accepted_trace.push_back(score);
    }
    result.best_trace.push_back(current);
  }
  return result;
}

TransferChainModel::TransferChainModel(std::shared_ptr<const Predictor> source,
                                       Standardizer standardizer, LinearMap map,
                                       std::shared_ptr<Model> target, TaskKind task_kind)
    : source_(std::move(source)),
      standardizer_(std::move(standardizer)),
      map_(std::move(map)),
      target_(std::move(target)),
      task_kind_(task_kind) {
  if (map_.U.rows() != source_->input_dim())
    throw std::invalid_argument("TransferChainModel: map does not feed the source input");
  if (target_->input_dim() != map_.U.cols() + source_->output_dim())
    throw std::invalid_argument("TransferChainModel: target width must be d_T + m_S");
}

LabeledDataset TransferChainModel::augment(const LabeledDataset& data) const {
  const Matrix feats =
      make_source_features(*source_, map_, standardizer_.apply_rows(data.features));
  return LabeledDataset(augment_features(data.features, feats), data.labels, data.task_kind);
}

Vector TransferChainModel::predict(const Vector& x) const {
  check_input(x);
  const Vector y_s = source_->predict(apply_map(map_, standardizer_.apply(x)));
  Vector aug(x.size() + y_s.size());
  aug << x, y_s;
  return target_->predict(aug);
}

Vector TransferChainModel::predict_scores(const Vector& x) const {
  check_input(x);
  const Vector y_s = source_->predict(apply_map(map_, standardizer_.apply(x)));
  Vector aug(x.size() + y_s.size());
  aug << x, y_s;
  return target_->predict_scores(aug);
}

TransferChainFit fit_transfer_chain(std::shared_ptr<const Predictor> source,
                                    const LabeledDataset& data, const SearchConfig& cfg,
                                    const BaseSpec& target_spec, const TrainConfig& train_cfg,
                                    const BaseSpec* search_spec) {
  TransferChainFit fit;
  fit.search = hill_climb_map(*source, data, cfg, search_spec ? *search_spec : target_spec);
  const Standardizer std_ = Standardizer::fit(data.features);
  const Matrix feats =
      make_source_features(*source, fit.search.map, std_.apply_rows(data.features));
  const Matrix aug = augment_features(data.features, feats);
  auto target = train_multi_output(aug, data.labels, data.task_kind, target_spec, train_cfg,
                                   train_cfg.rng.derive("tc-target"));
  fit.model = std::make_shared<TransferChainModel>(source, std_, fit.search.map,
                                                   std::move(target), data.task_kind);
  return fit;
}

Vector predict_transfer_chain(const TransferChainModel& model, const Vector& x) {
  return model.predict(x);
}

EnsembleModel fit_etc(std::shared_ptr<const Predictor> source, const LabeledDataset& data,
                      int n_members, const BaseSpec& target_spec, const TrainConfig& train_cfg,
                      RandomSource rng) {
  if (n_members < 1) throw std::invalid_argument("fit_etc: n_members >= 1");
  const Standardizer std_ = Standardizer::fit(data.features);
  const Matrix Z = std_.apply_rows(data.features);
  std::vector<std::shared_ptr<Predictor>> members;
  members.reserve(static_cast<std::size_t>(n_members));
  for (int t = 0; t < n_members; ++t) {
    RandomSource member_rng = rng.derive("member-" + std::to_string(t));
    LinearMap map = random_map(source->input_dim(), data.input_dim(), member_rng);
    const Matrix feats = make_source_features(*source, map, Z);
    const Matrix aug = augment_features(data.features, feats);
    TrainConfig member_cfg = train_cfg;
    member_cfg.rng = member_rng.derive("train");
    auto target = train_multi_output(aug, data.labels, data.task_kind, target_spec, member_cfg,
                                     member_rng.derive("target"));
    members.push_back(std::make_shared<TransferChainModel>(source, std_, std::move(map),
                                                           std::move(target), data.task_kind));
  }
  return EnsembleModel(std::move(members), data.task_kind);
}

RlpModel::RlpModel(std::vector<AffineLayer> hidden, LinearModel readout)
    : hidden_(std::move(hidden)), readout_(std::move(readout)) {
  if (hidden_.empty()) throw std::invalid_argument("RlpModel: needs at least one hidden layer");
}

Index RlpModel::input_dim() const { return hidden_.front().W.cols(); }

Vector RlpModel::hidden_activation(const Vector& x) const {
  Vector a = x;
  for (const AffineLayer& l : hidden_) a = (l.W * a + l.b).cwiseMax(0.0);
  return a;
}

Vector RlpModel::predict(const Vector& x) const {
  check_input(x);
  return readout_.predict(hidden_activation(x));
}

Vector RlpModel::predict_scores(const Vector& x) const {
  check_input(x);
  return readout_.predict_scores(hidden_activation(x));
}

namespace {

std::vector<AffineLayer> draw_hidden(Index d, int arch_v, RandomSource& rng) {
  const std::vector<Index> sizes = MlpModel::hidden_sizes(arch_v);
  if (sizes.empty()) throw std::invalid_argument("rlp: architecture v must be 1 or 2");
  std::vector<AffineLayer> hidden;
  Index in = d;
  for (Index h : sizes) {
    hidden.push_back({rng.gaussian_matrix(h, in, 1.0 / std::sqrt(static_cast<double>(in))),
                      Vector::Zero(h)});
    in = h;
  }
  return hidden;
}

Matrix hidden_activations_rows(const std::vector<AffineLayer>& hidden, const Matrix& X) {
  Matrix out(X.rows(), hidden.back().W.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    Vector a = X.row(i).transpose();
    for (const AffineLayer& l : hidden) a = (l.W * a + l.b).cwiseMax(0.0);
    out.row(i) = a.transpose();
  }
  return out;
}

LinearModel fit_readout(const Matrix& H, const Matrix& Y, TaskKind kind, Link link,
                        const TrainConfig& train_cfg, RandomSource rng, int rounds) {
  BaseSpec spec;
  spec.kind = LearnerKind::linear;
  spec.link = link;
  spec.sgd_rounds = rounds;
  auto model = train_multi_output(H, Y, kind, spec, train_cfg, std::move(rng));
  return *std::static_pointer_cast<LinearModel>(model);
}

// Internal CV score of a candidate hidden block: a fresh readout per fold.
double rlp_cv_score(const std::vector<AffineLayer>& hidden, const LabeledDataset& data,
                    const TrainConfig& train_cfg, const SearchConfig& search_cfg,
                    int readout_rounds, RandomSource rng) {
  const Matrix H = hidden_activations_rows(hidden, data.features);
  const Link link =
      data.task_kind == TaskKind::classification ? Link::logistic : Link::identity;
  const std::vector<IndexList> folds =
      kfold_indices(data.rows(), search_cfg.cv_folds, rng.derive("folds"));
  double total = 0.0;
  for (std::size_t k = 0; k < folds.size(); ++k) {
    IndexList train_rows;
    for (std::size_t other = 0; other < folds.size(); ++other)
      if (other != k)
        train_rows.insert(train_rows.end(), folds[other].begin(), folds[other].end());
    Matrix Htr(static_cast<Index>(train_rows.size()), H.cols());
    Matrix Ytr(static_cast<Index>(train_rows.size()), data.output_dim());
    for (Index i = 0; i < Htr.rows(); ++i) {
      Htr.row(i) = H.row(train_rows[static_cast<std::size_t>(i)]);
      Ytr.row(i) = data.labels.row(train_rows[static_cast<std::size_t>(i)]);
    }
    const LinearModel readout = fit_readout(Htr, Ytr, data.task_kind, link, train_cfg,
                                            rng.derive("fit-" + std::to_string(k)),
                                            readout_rounds);
    Matrix Hte(static_cast<Index>(folds[k].size()), H.cols());
    Matrix Yte(static_cast<Index>(folds[k].size()), data.output_dim());
    for (Index i = 0; i < Hte.rows(); ++i) {
      Hte.row(i) = H.row(folds[k][static_cast<std::size_t>(i)]);
      Yte.row(i) = data.labels.row(folds[k][static_cast<std::size_t>(i)]);
    }
    const Matrix pred = readout.predict_rows(Hte);
    total += search_cfg.cv_loss_metric == CvLossMetric::zero_one
                 ? exact_match_accuracy(Yte, pred)
                 : hamming_score(Yte, pred);
  }
  return total / static_cast<double>(folds.size());
}

std::shared_ptr<RlpModel> rlp_full_fit(std::vector<AffineLayer> hidden,
                                       const LabeledDataset& data,
                                       const TrainConfig& train_cfg, RandomSource rng,
                                       int readout_rounds) {
  const Matrix H = hidden_activations_rows(hidden, data.features);
  const Link link =
      data.task_kind == TaskKind::classification ? Link::logistic : Link::identity;
  LinearModel readout = fit_readout(H, data.labels, data.task_kind, link, train_cfg,
                                    std::move(rng), readout_rounds);
  return std::make_shared<RlpModel>(std::move(hidden), std::move(readout));
}

}  // namespace

RlpSearchState rlp_init(const LabeledDataset& data, int arch_v, const TrainConfig& train_cfg,
                        const SearchConfig& search_cfg, int readout_rounds) {
  RlpSearchState state;
  state.arch_v = arch_v;
  RandomSource rng = search_cfg.rng.derive("rlp-init");
  std::vector<AffineLayer> hidden = draw_hidden(data.input_dim(), arch_v, rng);
  state.best_score = rlp_cv_score(hidden, data, train_cfg, search_cfg, readout_rounds,
                                  rng.derive("score"));
  state.model = rlp_full_fit(std::move(hidden), data, train_cfg, rng.derive("full-fit"),
                             readout_rounds);
  state.accepted_trace.push_back(state.best_score);
  state.best_trace.push_back(state.best_score);
  return state;
}

bool rlp_step(RlpSearchState& state, const LabeledDataset& data, const TrainConfig& train_cfg,
              const SearchConfig& search_cfg, int readout_rounds) {
  RandomSource rng =
      search_cfg.rng.derive("rlp-trial-" + std::to_string(state.trials_done));
  ++state.trials_done;
  std::vector<AffineLayer> candidate = draw_hidden(data.input_dim(), state.arch_v, rng);
  const double score = rlp_cv_score(candidate, data, train_cfg, search_cfg, readout_rounds,
                                    rng.derive("score"));
  const bool accepted = score > state.best_score;
  if (accepted) {
    state.best_score = score;
    state.model = rlp_full_fit(std::move(candidate), data, train_cfg, rng.derive("full-fit"),
                               readout_rounds);
    state.accepted_trace.push_back(score);
  }
  state.best_trace.push_back(state.best_score);
  return accepted;
}

RlpSearchState fit_rlp(const LabeledDataset& data, int arch_v, const TrainConfig& train_cfg,
                       const SearchConfig& search_cfg, int readout_rounds) {
  RlpSearchState state = rlp_init(data, arch_v, train_cfg, search_cfg, readout_rounds);
  for (int it = 0; it < search_cfg.budget; ++it)
    rlp_step(state, data, train_cfg, search_cfg, readout_rounds);
  return state;
}

ModelArtifact TransferChainModel::to_artifact() const {
  ModelArtifact a;
  a.kind = "transfer_chain";
  a.input_dim = input_dim();
  a.output_dim = output_dim();
  nlohmann::json sources = nlohmann::json::array();
  if (const auto* pooled = dynamic_cast<const PooledPredictor*>(source_.get())) {
    for (const auto& member : pooled->members()) sources.push_back(artifact_to_json_for_member(*member));
  } else {
    sources.push_back(artifact_to_json_for_member(*source_));
  }
  a.payload = {{"sources", std::move(sources)},
               {"U", matrix_to_json(map_.U)},
               {"u", vector_to_json(map_.u)},
               {"standardizer_mean", vector_to_json(standardizer_.mean)},
               {"standardizer_sd", vector_to_json(standardizer_.sd)},
               {"target", artifact_to_json_for_member(*target_)},
               {"task_kind",
                task_kind_ == TaskKind::classification ? "classification" : "regression"}};
  return a;
}

ModelArtifact RlpModel::to_artifact() const {
  // Behaviorally a ReLU net with a linked readout, so it persists as one.
  std::vector<AffineLayer> layers = hidden_;
  layers.push_back(readout_.layer());
  return MlpModel(std::move(layers), readout_.link()).to_artifact();
}

}  // namespace chainforge
