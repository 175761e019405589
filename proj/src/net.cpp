#include "chainforge/net.hpp"

#include "chainforge/artifact.hpp"
#include "chainforge/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace chainforge {

namespace net {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

const char* link_name(Link link) { return link == Link::identity ? "identity" : "logistic"; }

Link link_from_name(const std::string& name) {
  if (name == "identity") return Link::identity;
  if (name == "logistic") return Link::logistic;
  throw CorruptArtifactError("unknown link '" + name + "'");
}

namespace {

Vector apply_link(Link link, Vector z) {
  if (link == Link::logistic)
    for (Index i = 0; i < z.size(); ++i) z(i) = logistic(z(i));
  return z;
}

// Activations per layer: a[0] = x, a[k] = relu(W_k a[k-1] + b_k) for hidden,
// final entry is the raw pre-link output.
std::vector<Vector> forward_all(std::span<const AffineLayer> layers, const Vector& x) {
  std::vector<Vector> a;
  a.reserve(layers.size() + 1);
  a.push_back(x);
  for (std::size_t k = 0; k < layers.size(); ++k) {
    Vector z = layers[k].W * a.back() + layers[k].b;
    if (k + 1 < layers.size()) z = z.cwiseMax(0.0);
    a.push_back(std::move(z));
  }
  return a;
}

}  // namespace

Vector forward_scores(std::span<const AffineLayer> layers, Link link, const Vector& x) {
  return apply_link(link, forward_all(layers, x).back());
}

Vector threshold(const Vector& scores, Link link) {
  if (link == Link::identity) return scores;
  Vector out(scores.size());
  for (Index i = 0; i < scores.size(); ++i) out(i) = scores(i) >= 0.5 ? 1.0 : 0.0;
  return out;
}

double example_loss(std::span<const AffineLayer> layers, Link link, const Vector& x,
                    const Vector& y, double l2) {
  const Vector s = forward_scores(layers, link, x);
  double loss = 0.0;
  if (link == Link::identity) {
    loss = 0.5 * (s - y).squaredNorm();
  } else {
    for (Index i = 0; i < s.size(); ++i) {
      const double p = std::min(std::max(s(i), 1e-12), 1.0 - 1e-12);
      loss += -(y(i) * std::log(p) + (1.0 - y(i)) * std::log(1.0 - p));
    }
  }
  for (const AffineLayer& l : layers) loss += 0.5 * l2 * l.W.squaredNorm();
  return loss;
}

std::vector<AffineLayer> example_gradient(std::span<const AffineLayer> layers, Link link,
                                          const Vector& x, const Vector& y, double l2) {
  const std::vector<Vector> a = forward_all(layers, x);
  const std::size_t L = layers.size();
  std::vector<AffineLayer> grad(L);

  // For both squared error (identity) and log-loss (logistic), the gradient
  // of the per-example loss wrt the output pre-activation is score - y.
  Vector delta = apply_link(link, a[L]) - y;
  for (std::size_t k = L; k-- > 0;) {
    grad[k].W = delta * a[k].transpose() + l2 * layers[k].W;
    grad[k].b = delta;
    if (k > 0) {
      delta = layers[k].W.transpose() * delta;
      for (Index i = 0; i < delta.size(); ++i)
        if (a[k](i) <= 0.0) delta(i) = 0.0;  // ReLU mask
    }
  }
  return grad;
}

void sgd_run(std::vector<AffineLayer>& layers, Link link, const LabeledDataset& data,
             TrainConfig& cfg, long& step_count) {
  if (data.input_dim() != layers.front().W.cols())
    throw std::invalid_argument("sgd_run: data feature width does not match model input");
  if (data.output_dim() != layers.back().W.rows())
    throw std::invalid_argument("sgd_run: data label width does not match model output");
  if (link == Link::logistic && data.task_kind != TaskKind::classification)
    throw std::invalid_argument("sgd_run: logistic link needs classification data");
  if (cfg.iterations_per_step < 1)
    throw std::invalid_argument("sgd_run: iterations_per_step must be >= 1");

  const Index n = data.rows();
  for (int it = 0; it < cfg.iterations_per_step; ++it) {
    const Index i = cfg.rng.index(n);
    const Vector x = data.features.row(i).transpose();
    const Vector y = data.labels.row(i).transpose();
    const std::vector<AffineLayer> grad = example_gradient(layers, link, x, y, cfg.l2_penalty);
    const double eta =
        cfg.learning_rate / std::pow(1.0 + static_cast<double>(step_count), 0.25);
    for (std::size_t k = 0; k < layers.size(); ++k) {
      if (!grad[k].W.allFinite() || !grad[k].b.allFinite())
        throw NumericFailureError("sgd_run: non-finite gradient at example index " +
                                  std::to_string(i));
      layers[k].W -= eta * grad[k].W;
      layers[k].b -= eta * grad[k].b;
    }
    ++step_count;
  }
}

}  // namespace net

LinearModel::LinearModel(Matrix W, Vector b, Link link)
    : layer_{std::move(W), std::move(b)}, link_(link) {
  if (layer_.W.rows() != layer_.b.size())
    throw std::invalid_argument("LinearModel: W rows must match b length");
}

LinearModel LinearModel::init(Index d, Index m, Link link, RandomSource& rng) {
  return LinearModel(rng.gaussian_matrix(m, d, 1.0 / std::sqrt(static_cast<double>(d))),
                     Vector::Zero(m), link);
}

Vector LinearModel::predict(const Vector& x) const {
  return net::threshold(predict_scores(x), link_);
}

Vector LinearModel::predict_scores(const Vector& x) const {
  check_input(x);
  return net::forward_scores({&layer_, 1}, link_, x);
}

void sgd_step(LinearModel& model, const LabeledDataset& data, TrainConfig& cfg) {
  std::vector<AffineLayer> layers{model.layer()};
  net::sgd_run(layers, model.link(), data, cfg, model.steps_taken());
  model.layer() = std::move(layers.front());
}

MlpModel::MlpModel(std::vector<AffineLayer> layers, Link link)
    : layers_(std::move(layers)), link_(link) {
  if (layers_.empty()) throw std::invalid_argument("MlpModel: needs at least one layer");
  for (std::size_t k = 1; k < layers_.size(); ++k)
    if (layers_[k].W.cols() != layers_[k - 1].W.rows())
      throw std::invalid_argument("MlpModel: layer width mismatch");
}

std::vector<Index> MlpModel::hidden_sizes(int arch_v) {
  switch (arch_v) {
    case 0: return {};
    case 1: return {400};
    case 2: return {100, 100};
    default: throw std::invalid_argument("MlpModel: architecture v must be 0, 1 or 2");
  }
}

MlpModel MlpModel::init(Index d, Index m, int arch_v, Link link, RandomSource& rng) {
  const std::vector<Index> hidden = hidden_sizes(arch_v);
  std::vector<AffineLayer> layers;
  Index in = d;
  for (Index h : hidden) {
    layers.push_back({rng.gaussian_matrix(h, in, 1.0 / std::sqrt(static_cast<double>(in))),
                      Vector::Zero(h)});
    in = h;
  }
  layers.push_back({rng.gaussian_matrix(m, in, 1.0 / std::sqrt(static_cast<double>(in))),
                    Vector::Zero(m)});
  return MlpModel(std::move(layers), link);
}

Vector MlpModel::predict(const Vector& x) const {
  return net::threshold(predict_scores(x), link_);
}

Vector MlpModel::predict_scores(const Vector& x) const {
  check_input(x);
  return net::forward_scores(layers_, link_, x);
}

void sgd_step(MlpModel& model, const LabeledDataset& data, TrainConfig& cfg) {
  net::sgd_run(model.layers(), model.link(), data, cfg, model.steps_taken());
}

ModelArtifact LinearModel::to_artifact() const {
  ModelArtifact a;
  a.kind = "linear";
  a.input_dim = input_dim();
  a.output_dim = output_dim();
  a.payload = {{"W", matrix_to_json(layer_.W)},
               {"b", vector_to_json(layer_.b)},
               {"link", net::link_name(link_)},
               {"steps", steps_}};
  return a;
}

ModelArtifact MlpModel::to_artifact() const {
  ModelArtifact a;
  a.kind = "mlp";
  a.input_dim = input_dim();
  a.output_dim = output_dim();
  nlohmann::json layers = nlohmann::json::array();
  for (const AffineLayer& l : layers_)
    layers.push_back({{"W", matrix_to_json(l.W)}, {"b", vector_to_json(l.b)}});
  a.payload = {{"layers", std::move(layers)}, {"link", net::link_name(link_)}, {"steps", steps_}};
  return a;
}

}  // namespace chainforge
