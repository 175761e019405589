// learners: SGD linear/MLP models with gradient oracles, CART forests.

#include "chainforge/errors.hpp"
#include "chainforge/forest.hpp"
#include "chainforge/net.hpp"
#include "chainforge/synth.hpp"

#include <doctest.h>

#include <cmath>

using namespace chainforge;

namespace {

LabeledDataset separable_1d() {
  Matrix X(4, 1);
  X << -1, -1, 1, 1;
  Matrix Y(4, 1);
  Y << 0, 0, 1, 1;
  return LabeledDataset(X, Y, TaskKind::classification);
}

// Central finite differences of the per-example loss, the independent oracle
// for the analytic backprop gradient.
std::vector<AffineLayer> fd_gradient(const std::vector<AffineLayer>& layers, Link link,
                                     const Vector& x, const Vector& y, double l2) {
  const double h = 1e-5;
  std::vector<AffineLayer> grad;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    AffineLayer g{Matrix::Zero(layers[k].W.rows(), layers[k].W.cols()),
                  Vector::Zero(layers[k].b.size())};
    for (Index i = 0; i < g.W.rows(); ++i)
      for (Index j = 0; j < g.W.cols(); ++j) {
        std::vector<AffineLayer> plus = layers;
        std::vector<AffineLayer> minus = layers;
        plus[k].W(i, j) += h;
        minus[k].W(i, j) -= h;
        g.W(i, j) = (net::example_loss(plus, link, x, y, l2) -
                     net::example_loss(minus, link, x, y, l2)) /
                    (2 * h);
      }
    for (Index i = 0; i < g.b.size(); ++i) {
      std::vector<AffineLayer> plus = layers;
      std::vector<AffineLayer> minus = layers;
      plus[k].b(i) += h;
      minus[k].b(i) -= h;
      g.b(i) = (net::example_loss(plus, link, x, y, l2) -
                net::example_loss(minus, link, x, y, l2)) /
               (2 * h);
    }
    grad.push_back(std::move(g));
  }
  return grad;
}

double max_rel_error(const std::vector<AffineLayer>& a, const std::vector<AffineLayer>& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto rel = [&](double u, double v) {
      const double denom = std::max({std::abs(u), std::abs(v), 1e-8});
      return std::abs(u - v) / denom;
    };
    for (Index i = 0; i < a[k].W.rows(); ++i)
      for (Index j = 0; j < a[k].W.cols(); ++j) worst = std::max(worst, rel(a[k].W(i, j), b[k].W(i, j)));
    for (Index i = 0; i < a[k].b.size(); ++i) worst = std::max(worst, rel(a[k].b(i), b[k].b(i)));
  }
  return worst;
}

}  // namespace

TEST_CASE("sgd_step: zero learning rate leaves parameters unchanged") {
  RandomSource rng(1, "zero-lr");
  LinearModel model = LinearModel::init(3, 2, Link::logistic, rng);
  const Matrix W_before = model.layer().W;
  LabeledDataset data = [&] {
    Matrix X(5, 3);
    Matrix Y(5, 2);
    for (Index i = 0; i < 5; ++i) {
      for (Index j = 0; j < 3; ++j) X(i, j) = rng.normal();
      for (Index j = 0; j < 2; ++j) Y(i, j) = rng.uniform01() < 0.5 ? 0 : 1;
    }
    return LabeledDataset(X, Y, TaskKind::classification);
  }();
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.rng = rng.derive("steps");
  sgd_step(model, data, cfg);
  CHECK(model.layer().W == W_before);
}

TEST_CASE("sgd_step: separable 1-d problem reaches training accuracy 1.0") {
  RandomSource rng(2, "sep");
  LinearModel model = LinearModel::init(1, 1, Link::logistic, rng);
  const LabeledDataset data = separable_1d();
  TrainConfig cfg;
  cfg.l2_penalty = 0.0;
  cfg.rng = rng.derive("steps");
  for (int step = 0; step < 50; ++step) sgd_step(model, data, cfg);
  int correct = 0;
  for (Index i = 0; i < data.rows(); ++i)
    correct += model.predict(data.features.row(i).transpose())(0) == data.labels(i, 0);
  CHECK(correct == 4);
}

TEST_CASE("gradients: analytic backprop matches finite differences (all configurations)") {
  RandomSource rng(3, "fd");
  for (Link link : {Link::identity, Link::logistic}) {
    for (int arch : {0, 1, 2}) {
      // Shrink the wide architectures so the FD sweep stays fast.
      std::vector<AffineLayer> layers;
      const Index d = 4;
      const Index m = 3;
      std::vector<Index> sizes;
      if (arch == 1) sizes = {7};
      if (arch == 2) sizes = {5, 6};
      Index in = d;
      for (Index h : sizes) {
        layers.push_back({rng.gaussian_matrix(h, in, 0.7), rng.gaussian_vector(h, 0.2)});
        in = h;
      }
      layers.push_back({rng.gaussian_matrix(m, in, 0.7), rng.gaussian_vector(m, 0.2)});

      const Vector x = rng.gaussian_vector(d, 1.0);
      Vector y(m);
      for (Index j = 0; j < m; ++j)
        y(j) = link == Link::logistic ? (rng.uniform01() < 0.5 ? 0.0 : 1.0) : rng.normal();

      const auto analytic = net::example_gradient(layers, link, x, y, 0.05);
      const auto numeric = fd_gradient(layers, link, x, y, 0.05);
      CHECK(max_rel_error(analytic, numeric) < 1e-4);
    }
  }
}

TEST_CASE("sgd_step: weight norms shrink under pure decay when labels carry no signal") {
  RandomSource rng(4, "decay");
  Matrix X(40, 3);
  Matrix Y(40, 2);
  for (Index i = 0; i < 40; ++i) {
    for (Index j = 0; j < 3; ++j) X(i, j) = rng.normal();
    for (Index j = 0; j < 2; ++j) Y(i, j) = (i + static_cast<Index>(j)) % 2 ? 1.0 : 0.0;
  }
  const LabeledDataset data(X, Y, TaskKind::classification);
  LinearModel model(rng.gaussian_matrix(2, 3, 2.0), Vector::Zero(2), Link::logistic);
  TrainConfig cfg;
  cfg.l2_penalty = 0.5;
  cfg.rng = rng.derive("steps");
  double prev = model.layer().W.norm();
  int shrank = 0;
  for (int step = 0; step < 10; ++step) {
    sgd_step(model, data, cfg);
    const double now = model.layer().W.norm();
    if (now < prev) ++shrank;
    prev = now;
  }
  CHECK(shrank >= 9);  // decay dominates a signal-free problem
}

TEST_CASE("predict: zero logistic model scores 0.5 and the inclusive tie rule yields 1") {
  LinearModel model(Matrix::Zero(1, 2), Vector::Zero(1), Link::logistic);
  Vector x(2);
  x << 0.3, -0.7;
  CHECK(model.predict_scores(x)(0) == 0.5);
  CHECK(model.predict(x)(0) == 1.0);
}

TEST_CASE("predict: identity-link affine arithmetic") {
  Matrix W(1, 1);
  W << 2;
  Vector b(1);
  b << 1;
  LinearModel model(W, b, Link::identity);
  Vector x(1);
  x << 3;
  CHECK(model.predict(x)(0) == 7.0);
}

TEST_CASE("predict: length mismatch raises invalid-argument") {
  LinearModel model(Matrix::Identity(2, 2), Vector::Zero(2), Link::identity);
  Vector x(3);
  x << 1, 2, 3;
  CHECK_THROWS_AS(model.predict(x), std::invalid_argument);
}

TEST_CASE("predict: output length always equals output_dim") {
  RandomSource rng(5, "dims");
  for (int arch : {0, 1, 2}) {
    MlpModel model = MlpModel::init(3, 4, arch, Link::logistic, rng);
    const Vector out = model.predict(rng.gaussian_vector(3, 1.0));
    CHECK(out.size() == 4);
  }
}

TEST_CASE("mlp: v=0 is behaviorally identical to LinearModel under equal init and rng") {
  RandomSource rng(6, "slp-mlp0");
  const Matrix W = rng.gaussian_matrix(2, 3, 0.5);
  const Vector b = rng.gaussian_vector(2, 0.1);
  LinearModel slp(W, b, Link::logistic);
  MlpModel mlp0({AffineLayer{W, b}}, Link::logistic);

  Matrix X(30, 3);
  Matrix Y(30, 2);
  RandomSource data_rng(7, "data");
  for (Index i = 0; i < 30; ++i) {
    for (Index j = 0; j < 3; ++j) X(i, j) = data_rng.normal();
    for (Index j = 0; j < 2; ++j) Y(i, j) = data_rng.uniform01() < 0.5 ? 0 : 1;
  }
  const LabeledDataset data(X, Y, TaskKind::classification);

  TrainConfig cfg_a;
  cfg_a.rng = RandomSource(8, "steps");
  TrainConfig cfg_b;
  cfg_b.rng = RandomSource(8, "steps");
  for (int step = 0; step < 5; ++step) {
    sgd_step(slp, data, cfg_a);
    sgd_step(mlp0, data, cfg_b);
  }
  CHECK(slp.layer().W == mlp0.layers().front().W);
  CHECK(slp.layer().b == mlp0.layers().front().b);
}

TEST_CASE("mlp: architecture table is 0 / 400 / 100+100") {
  CHECK(MlpModel::hidden_sizes(0).empty());
  CHECK(MlpModel::hidden_sizes(1) == std::vector<Index>{400});
  CHECK(MlpModel::hidden_sizes(2) == std::vector<Index>{100, 100});
  CHECK_THROWS_AS(MlpModel::hidden_sizes(3), std::invalid_argument);
}

TEST_CASE("sgd: non-finite gradients name the offending example") {
  Matrix X(2, 1);
  X << 1e308, 1.0;
  Matrix Y(2, 1);
  Y << 1, 0;
  const LabeledDataset data(X, Y, TaskKind::regression);
  LinearModel model(Matrix::Constant(1, 1, 1e308), Vector::Zero(1), Link::identity);
  TrainConfig cfg;
  cfg.rng = RandomSource(9, "blow");
  cfg.iterations_per_step = 50;
  try {
    sgd_step(model, data, cfg);
    FAIL("expected NumericFailureError");
  } catch (const NumericFailureError& e) {
    CHECK(std::string(e.what()).find("example index") != std::string::npos);
  }
}

TEST_CASE("forest: AND toy trains to accuracy 1.0 at depth 3") {
  ToyConfig cfg;
  cfg.concept_ = ToyConcept::AND;
  cfg.n = 60;
  cfg.input_noise_sd = 0.0;
  cfg.rng = RandomSource(10, "and");
  const LabeledDataset data = gen_toy(cfg);
  const ForestModel forest = fit_forest(data, 10, 3, RandomSource(11, "f"));
  int correct = 0;
  for (Index i = 0; i < data.rows(); ++i)
    correct += forest.predict(data.features.row(i).transpose())(0) == data.labels(i, 0);
  CHECK(correct == data.rows());
  // Fig-4 table corners through the forest.
  Vector x(2);
  x << 1, 1;
  CHECK(forest.predict(x)(0) == 1.0);
  x << 0, 1;
  CHECK(forest.predict(x)(0) == 0.0);
}

TEST_CASE("forest: XOR toy needs depth >= 2 and then reaches accuracy 1.0") {
  ToyConfig cfg;
  cfg.concept_ = ToyConcept::XOR;
  cfg.n = 60;
  cfg.input_noise_sd = 0.0;
  cfg.rng = RandomSource(12, "xor");
  const LabeledDataset data = gen_toy(cfg);
  const ForestModel forest = fit_forest(data, 20, 2, RandomSource(13, "f"));
  int correct = 0;
  for (Index i = 0; i < data.rows(); ++i)
    correct += forest.predict(data.features.row(i).transpose())(0) == data.labels(i, 0);
  CHECK(correct == data.rows());
}

TEST_CASE("forest: constant label column degenerates to a single leaf") {
  Matrix X(6, 2);
  RandomSource rng(14, "const");
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 2; ++j) X(i, j) = rng.normal();
  const LabeledDataset data(X, Matrix::Ones(6, 1), TaskKind::classification);
  const ForestModel forest = fit_forest(data, 5, 4, RandomSource(15, "f"));
  for (const auto& tree : forest.per_label_trees().front()) CHECK(tree.nodes.size() == 1);
  CHECK(forest.predict(Vector::Zero(2))(0) == 1.0);
}

TEST_CASE("forest: every prediction is a vote over exactly trees_per_label trees") {
  ToyConfig cfg;
  cfg.concept_ = ToyConcept::AND;
  cfg.n = 40;
  cfg.rng = RandomSource(16, "and");
  const LabeledDataset data = gen_toy(cfg);
  const ForestModel forest = fit_forest(data, 7, 3, RandomSource(17, "f"));
  CHECK(forest.per_label_trees().front().size() == 7);
  // Scores are vote fractions, so they sit on the k/7 grid.
  const Vector s = forest.predict_scores(Vector::Zero(2));
  const double scaled = s(0) * 7.0;
  CHECK(scaled == doctest::Approx(std::round(scaled)).epsilon(1e-12));
}

TEST_CASE("forest: internal nodes only read existing features") {
  ToyConfig cfg;
  cfg.concept_ = ToyConcept::XOR;
  cfg.n = 40;
  cfg.rng = RandomSource(18, "xor");
  const LabeledDataset data = gen_toy(cfg);
  const ForestModel forest = fit_forest(data, 10, 4, RandomSource(19, "f"));
  for (const auto& trees : forest.per_label_trees())
    for (const auto& tree : trees)
      for (const TreeNode& node : tree.nodes)
        if (node.feature >= 0) {
          CHECK(node.feature < 2);
          CHECK(node.left >= 0);
          CHECK(node.right >= 0);
        }
}
