#include "chainforge/multilabel.hpp"

#include "chainforge/artifact.hpp"
#include "chainforge/errors.hpp"

#include <stdexcept>
#include <string>

namespace chainforge {

namespace {

LabeledDataset wrap(const Matrix& X, const Matrix& Y, TaskKind kind) {
  return LabeledDataset(X, Y, kind);
}

}  // namespace

std::shared_ptr<Model> train_multi_output(const Matrix& X, const Matrix& Y, TaskKind kind,
                                          const BaseSpec& spec, const TrainConfig& cfg,
                                          RandomSource rng) {
  const Index d = X.cols();
  const Index m = Y.cols();
  switch (spec.kind) {
    case LearnerKind::linear: {
      // Every output row starts from the same draw, so each output's fit is a
      // deterministic function of its own label column alone (exact binary
      // relevance; permuting label columns permutes the fit).
      const Vector row = rng.gaussian_vector(d, 1.0 / std::sqrt(static_cast<double>(d)));
      Matrix W(m, d);
      for (Index j = 0; j < m; ++j) W.row(j) = row.transpose();
      auto model = std::make_shared<LinearModel>(std::move(W), Vector::Zero(m), spec.link);
      TrainConfig run = cfg;
      run.rng = rng.derive("sgd");
      const LabeledDataset data = wrap(X, Y, kind);
      for (int r = 0; r < spec.sgd_rounds; ++r) sgd_step(*model, data, run);
      return model;
    }
    case LearnerKind::mlp: {
      auto model =
          std::make_shared<MlpModel>(MlpModel::init(d, m, spec.mlp_arch, spec.link, rng));
      TrainConfig run = cfg;
      run.rng = rng.derive("sgd");
      const LabeledDataset data = wrap(X, Y, kind);
      for (int r = 0; r < spec.sgd_rounds; ++r) sgd_step(*model, data, run);
      return model;
    }
    case LearnerKind::forest: {
      return std::make_shared<ForestModel>(
          fit_forest(wrap(X, Y, kind), spec.trees_per_label, spec.max_depth, rng));
    }
  }
  throw std::invalid_argument("train_multi_output: unknown learner kind");
}

std::shared_ptr<Model> fit_br(const LabeledDataset& data, const BaseSpec& base,
                              const TrainConfig& cfg) {
  // The same "fit" stream backs every per-label fit here and every chain link
  // in fit_chain, so a one-label chain coincides with binary relevance.
  RandomSource rng = cfg.rng.derive("fit");
  if (base.kind == LearnerKind::mlp) {
    // Per-label single-output nets; every label sees an identical stream so
    // that the fit of label j depends only on column j.
    std::vector<std::shared_ptr<Model>> per_label;
    per_label.reserve(static_cast<std::size_t>(data.output_dim()));
    for (Index j = 0; j < data.output_dim(); ++j)
      per_label.push_back(train_multi_output(data.features, data.labels.col(j), data.task_kind,
                                             base, cfg, rng));
    return std::make_shared<IndependentModel>(std::move(per_label), data.input_dim());
  }
  return train_multi_output(data.features, data.labels, data.task_kind, base, cfg, rng);
}

IndependentModel::IndependentModel(std::vector<std::shared_ptr<Model>> per_label, Index input_dim)
    : per_label_(std::move(per_label)), input_dim_(input_dim) {
  if (per_label_.empty()) throw std::invalid_argument("IndependentModel: no labels");
  for (const auto& m : per_label_)
    if (m->input_dim() != input_dim_ || m->output_dim() != 1)
      throw std::invalid_argument("IndependentModel: members must be single-output over d");
}

Vector IndependentModel::predict(const Vector& x) const {
  check_input(x);
  Vector out(output_dim());
  for (Index j = 0; j < out.size(); ++j)
    out(j) = per_label_[static_cast<std::size_t>(j)]->predict(x)(0);
  return out;
}

Vector IndependentModel::predict_scores(const Vector& x) const {
  check_input(x);
  Vector out(output_dim());
  for (Index j = 0; j < out.size(); ++j)
    out(j) = per_label_[static_cast<std::size_t>(j)]->predict_scores(x)(0);
  return out;
}

ModelArtifact IndependentModel::to_artifact() const {
  throw UnsupportedFormatError(
      "independent per-label composites have no artifact kind; save the members");
}

ChainModel::ChainModel(IndexList order, std::vector<std::shared_ptr<Model>> links,
                       Index input_dim, TaskKind task_kind, bool feed_scores)
    : order_(std::move(order)),
      links_(std::move(links)),
      input_dim_(input_dim),
      task_kind_(task_kind),
      feed_scores_(feed_scores) {
  if (order_.size() != links_.size())
    throw std::invalid_argument("ChainModel: order and links sizes differ");
  for (std::size_t j = 0; j < links_.size(); ++j)
    if (links_[j]->input_dim() != input_dim_ + static_cast<Index>(j) ||
        links_[j]->output_dim() != 1)
      throw std::invalid_argument("ChainModel: link " + std::to_string(j) +
                                  " must map d+" + std::to_string(j) + " inputs to 1 output");
}

std::pair<Vector, Vector> ChainModel::run_chain(const Vector& x) const {
  const Index m = output_dim();
  Vector hard_in_order(m);
  Vector scores_in_order(m);
  Vector aug(input_dim_ + m);
  aug.head(input_dim_) = x;
  for (Index j = 0; j < m; ++j) {
    const auto& link = links_[static_cast<std::size_t>(j)];
    const Vector in = aug.head(input_dim_ + j);
    const double score = link->predict_scores(in)(0);
    const double hard = link->predict(in)(0);
    scores_in_order(j) = score;
    hard_in_order(j) = hard;
    double feed = hard;
    if (task_kind_ == TaskKind::regression)
      feed = score;  // regressors cascade raw predictions
    else if (feed_scores_)
      feed = score;
    aug(input_dim_ + j) = feed;
  }
  // Reorder to the original label order.
  Vector hard(m);
  Vector scores(m);
  for (Index j = 0; j < m; ++j) {
    hard(order_[static_cast<std::size_t>(j)]) = hard_in_order(j);
    scores(order_[static_cast<std::size_t>(j)]) = scores_in_order(j);
  }
  return {hard, scores};
}

Vector ChainModel::predict(const Vector& x) const {
  check_input(x);
  return run_chain(x).first;
}

Vector ChainModel::predict_scores(const Vector& x) const {
  check_input(x);
  return run_chain(x).second;
}

Matrix chain_training_inputs(const LabeledDataset& data, const IndexList& order,
                             Index position) {
  const Index n = data.rows();
  const Index d = data.input_dim();
  Matrix X(n, d + position);
  X.leftCols(d) = data.features;
  for (Index j = 0; j < position; ++j)
    X.col(d + j) = data.labels.col(order[static_cast<std::size_t>(j)]);
  return X;
}

ChainModel fit_chain(const LabeledDataset& data, const IndexList& order, const BaseSpec& base,
                     const TrainConfig& cfg, bool feed_scores) {
  const Index m = data.output_dim();
  if (static_cast<Index>(order.size()) != m)
    throw std::invalid_argument("fit_chain: order size must equal label count");
  RandomSource rng = cfg.rng.derive("fit");
  std::vector<std::shared_ptr<Model>> links;
  links.reserve(order.size());
  for (Index j = 0; j < m; ++j) {
    // True preceding labels from the data, never predictions.
    const Matrix X = chain_training_inputs(data, order, j);
    const Matrix y = data.labels.col(order[static_cast<std::size_t>(j)]);
    links.push_back(train_multi_output(X, y, data.task_kind, base, cfg, rng));
  }
  return ChainModel(order, std::move(links), data.input_dim(), data.task_kind, feed_scores);
}

Vector predict_chain(const ChainModel& model, const Vector& x) { return model.predict(x); }

EnsembleModel::EnsembleModel(std::vector<std::shared_ptr<Predictor>> members, TaskKind task_kind)
    : members_(std::move(members)), task_kind_(task_kind) {
  if (members_.empty()) throw std::invalid_argument("EnsembleModel: needs at least one member");
  for (const auto& m : members_)
    if (m->input_dim() != members_.front()->input_dim() ||
        m->output_dim() != members_.front()->output_dim())
      throw std::invalid_argument("EnsembleModel: member dimensions differ");
}

void EnsembleModel::add_member(std::shared_ptr<Predictor> member) {
  if (member->input_dim() != input_dim() || member->output_dim() != output_dim())
    throw std::invalid_argument("EnsembleModel: member dimensions differ");
  members_.push_back(std::move(member));
}

Vector EnsembleModel::predict_scores(const Vector& x) const {
  check_input(x);
  Vector mean = Vector::Zero(output_dim());
  for (const auto& m : members_) mean += m->predict_scores(x);
  return mean / static_cast<double>(members_.size());
}

Vector EnsembleModel::predict(const Vector& x) const {
  Vector s = predict_scores(x);
  if (task_kind_ == TaskKind::regression) return s;
  for (Index j = 0; j < s.size(); ++j) s(j) = s(j) >= 0.5 ? 1.0 : 0.0;
  return s;
}

EnsembleModel fit_ensemble_of_chains(const LabeledDataset& data, int n_members,
                                     const BaseSpec& base, const TrainConfig& cfg,
                                     RandomSource rng) {
  if (n_members < 1) throw std::invalid_argument("fit_ensemble_of_chains: n_members >= 1");
  std::vector<std::shared_ptr<Predictor>> members;
  members.reserve(static_cast<std::size_t>(n_members));
  for (int t = 0; t < n_members; ++t) {
    RandomSource member_rng = rng.derive("member-" + std::to_string(t));
    const IndexList order = member_rng.permutation(data.output_dim());
    TrainConfig member_cfg = cfg;
    member_cfg.rng = member_rng.derive("train");
    members.push_back(std::make_shared<ChainModel>(fit_chain(data, order, base, member_cfg)));
  }
  return EnsembleModel(std::move(members), data.task_kind);
}

EnsembleModel fit_bagging(const LabeledDataset& data, int n_members, const BaseSpec& base,
                          const TrainConfig& cfg, RandomSource rng, bool resample) {
  if (n_members < 1) throw std::invalid_argument("fit_bagging: n_members >= 1");
  std::vector<std::shared_ptr<Predictor>> members;
  members.reserve(static_cast<std::size_t>(n_members));
  const Index n = data.rows();
  for (int t = 0; t < n_members; ++t) {
    RandomSource member_rng = rng.derive("member-" + std::to_string(t));
    LabeledDataset train = data;
    if (resample) {
      IndexList rows(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = member_rng.index(n);
      train = data.subset(rows);
    }
    TrainConfig member_cfg = cfg;
    member_cfg.rng = member_rng.derive("train");
    members.push_back(fit_br(train, base, member_cfg));
  }
  return EnsembleModel(std::move(members), data.task_kind);
}

ModelArtifact EnsembleModel::to_artifact() const {
  ModelArtifact a;
  a.kind = "ensemble";
  a.input_dim = input_dim();
  a.output_dim = output_dim();
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : members_) members.push_back(artifact_to_json_for_member(*m));
  a.payload = {{"members", std::move(members)},
               {"task_kind", task_kind_ == TaskKind::classification ? "classification"
                                                                    : "regression"}};
  return a;
}

ModelArtifact ChainModel::to_artifact() const {
  ModelArtifact a;
  a.kind = "chain";
  a.input_dim = input_dim_;
  a.output_dim = output_dim();
  nlohmann::json links = nlohmann::json::array();
  for (const auto& l : links_) links.push_back(artifact_to_json_for_member(*l));
  nlohmann::json order = nlohmann::json::array();
  for (Index j : order_) order.push_back(j);
  a.payload = {{"order", std::move(order)},
               {"links", std::move(links)},
               {"task_kind",
                task_kind_ == TaskKind::classification ? "classification" : "regression"},
               {"feed_scores", feed_scores_}};
  return a;
}

StackedModel::StackedModel(std::shared_ptr<Predictor> first_layer,
                           std::vector<std::shared_ptr<Model>> meta_layer)
    : first_(std::move(first_layer)), meta_(std::move(meta_layer)) {
  if (meta_.empty()) throw std::invalid_argument("StackedModel: empty meta layer");
  const Index want = first_->input_dim() + first_->output_dim();
  for (const auto& m : meta_)
    if (m->input_dim() != want || m->output_dim() != 1)
      throw std::invalid_argument("StackedModel: meta models must map d+m inputs to 1 output");
}

Vector StackedModel::predict(const Vector& x) const {
  check_input(x);
  Vector aug(first_->input_dim() + first_->output_dim());
  aug << x, first_->predict(x);
  Vector out(output_dim());
  for (Index j = 0; j < out.size(); ++j)
    out(j) = meta_[static_cast<std::size_t>(j)]->predict(aug)(0);
  return out;
}

Vector StackedModel::predict_scores(const Vector& x) const {
  check_input(x);
  Vector aug(first_->input_dim() + first_->output_dim());
  aug << x, first_->predict(x);
  Vector out(output_dim());
  for (Index j = 0; j < out.size(); ++j)
    out(j) = meta_[static_cast<std::size_t>(j)]->predict_scores(aug)(0);
  return out;
}

ModelArtifact StackedModel::to_artifact() const {
  throw UnsupportedFormatError("stacked models have no artifact kind");
}

Matrix stacking_meta_inputs(const LabeledDataset& data, const Predictor& first_layer) {
  Matrix X(data.rows(), data.input_dim() + first_layer.output_dim());
  X.leftCols(data.input_dim()) = data.features;
  X.rightCols(first_layer.output_dim()) = first_layer.predict_rows(data.features);
  return X;
}

StackedModel fit_stacking(const LabeledDataset& data, const BaseSpec& base,
                          const BaseSpec& meta_base, const TrainConfig& cfg) {
  std::shared_ptr<Model> first = fit_br(data, base, cfg);
  // Meta layer trains on first-layer predictions, not true labels.
  const Matrix X = stacking_meta_inputs(data, *first);
  RandomSource rng = cfg.rng.derive("stack-meta");
  std::vector<std::shared_ptr<Model>> meta;
  meta.reserve(static_cast<std::size_t>(data.output_dim()));
  for (Index j = 0; j < data.output_dim(); ++j)
    meta.push_back(
        train_multi_output(X, data.labels.col(j), data.task_kind, meta_base, cfg, rng));
  return StackedModel(std::move(first), std::move(meta));
}

}  // namespace chainforge
