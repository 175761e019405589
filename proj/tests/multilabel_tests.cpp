// multilabel composers: binary relevance, chains, ensembles, stacking.

#include "chainforge/artifact.hpp"
#include "chainforge/metrics.hpp"
#include "chainforge/multilabel.hpp"
#include "chainforge/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

using namespace chainforge;

namespace {

// Two-label toy in (AND, XOR) column order, noiseless.
LabeledDataset and_xor_dataset(Index n, std::uint64_t seed) {
  ToyConfig cfg;
  cfg.concept_ = ToyConcept::XOR;
  cfg.n = n;
  cfg.input_noise_sd = 0.0;
  cfg.rng = RandomSource(seed, "toy");
  const LabeledDataset xor_data = gen_toy(cfg);
  Matrix Y(n, 2);
  for (Index i = 0; i < n; ++i) {
    const int x1 = static_cast<int>(xor_data.features(i, 0));
    const int x2 = static_cast<int>(xor_data.features(i, 1));
    Y(i, 0) = (x1 == 1 && x2 == 1) ? 1.0 : 0.0;  // AND
    Y(i, 1) = xor_data.labels(i, 0);             // XOR
  }
  return LabeledDataset(xor_data.features, Y, TaskKind::classification, {"x1", "x2"},
                        {"and", "xor"});
}

double column_accuracy(const Matrix& truth, const Matrix& pred, Index col) {
  double correct = 0;
  for (Index i = 0; i < truth.rows(); ++i) correct += truth(i, col) == pred(i, col);
  return correct / static_cast<double>(truth.rows());
}

// Brute-force oracle over a weight grid: the best linear rule on the four XOR
// corners classifies exactly 3 of 4.
int best_linear_corner_hits_oracle() {
  const double corners[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  const double labels[4] = {0, 1, 1, 0};
  int best = 0;
  for (double w1 = -2; w1 <= 2; w1 += 0.25)
    for (double w2 = -2; w2 <= 2; w2 += 0.25)
      for (double b = -2; b <= 2; b += 0.25) {
        int hits = 0;
        for (int c = 0; c < 4; ++c) {
          const double score = w1 * corners[c][0] + w2 * corners[c][1] + b;
          hits += (score >= 0.0 ? 1.0 : 0.0) == labels[c];
        }
        best = std::max(best, hits);
      }
  return best;
}

}  // namespace

TEST_CASE("fit_br: m=1 equals training the base learner directly") {
  IndependentConceptConfig cfg;
  cfg.n = 40;
  cfg.d = 3;
  cfg.m = 1;
  cfg.task_kind = TaskKind::classification;
  cfg.rng = RandomSource(1, "data");
  const LabeledDataset data = gen_independent_concepts(cfg);

  BaseSpec spec;
  spec.sgd_rounds = 5;
  TrainConfig tc;
  tc.rng = RandomSource(2, "fit");
  const auto br = fit_br(data, spec, tc);

  const auto direct = train_multi_output(data.features, data.labels, data.task_kind, spec,
                                         tc, tc.rng.derive("br"));
  for (Index i = 0; i < data.rows(); ++i) {
    const Vector x = data.features.row(i).transpose();
    CHECK(br->predict_scores(x) == direct->predict_scores(x));
  }
}

TEST_CASE("fit_br: permuting label columns permutes predictions identically") {
  IndependentConceptConfig cfg;
  cfg.n = 50;
  cfg.d = 4;
  cfg.m = 3;
  cfg.task_kind = TaskKind::classification;
  cfg.rng = RandomSource(3, "data");
  const LabeledDataset data = gen_independent_concepts(cfg);

  Matrix permuted_labels(data.rows(), 3);
  const Index perm[3] = {2, 0, 1};  // column j of permuted = column perm[j] of original
  for (Index j = 0; j < 3; ++j) permuted_labels.col(j) = data.labels.col(perm[j]);
  const LabeledDataset permuted(data.features, permuted_labels, TaskKind::classification);

  BaseSpec spec;
  spec.sgd_rounds = 5;
  TrainConfig tc;
  tc.rng = RandomSource(4, "fit");
  const auto a = fit_br(data, spec, tc);
  const auto b = fit_br(permuted, spec, tc);
  for (Index i = 0; i < 10; ++i) {
    const Vector x = data.features.row(i).transpose();
    const Vector ya = a->predict_scores(x);
    const Vector yb = b->predict_scores(x);
    for (Index j = 0; j < 3; ++j) REQUIRE(yb(j) == ya(perm[j]));
  }
}

TEST_CASE("fit_br: linear base cannot beat the 3-of-4 ceiling on noiseless XOR") {
  CHECK(best_linear_corner_hits_oracle() == 3);  // the frozen oracle itself

  ToyConfig cfg;
  cfg.concept_ = ToyConcept::XOR;
  cfg.n = 200;
  cfg.input_noise_sd = 0.0;
  cfg.rng = RandomSource(5, "xor");
  const LabeledDataset data = gen_toy(cfg);
  const auto [train, test] = split_train_test(data, 0.6, RandomSource(6, "split"));

  BaseSpec spec;
  spec.sgd_rounds = 50;
  TrainConfig tc;
  tc.l2_penalty = 0.0;
  tc.rng = RandomSource(7, "fit");
  const auto br = fit_br(train, spec, tc);
  const double acc = exact_match_accuracy(test.labels, br->predict_rows(test.features));
  CHECK(acc <= 0.80);
}

TEST_CASE("fit_chain: m=1 equals fit_br") {
  IndependentConceptConfig cfg;
  cfg.n = 30;
  cfg.d = 2;
  cfg.m = 1;
  cfg.task_kind = TaskKind::classification;
  cfg.rng = RandomSource(8, "data");
  const LabeledDataset data = gen_independent_concepts(cfg);
  BaseSpec spec;
  spec.sgd_rounds = 3;
  TrainConfig tc;
  tc.rng = RandomSource(9, "fit");
  const ChainModel chain = fit_chain(data, {0}, spec, tc);
  const auto br = fit_br(data, spec, tc);
  for (Index i = 0; i < data.rows(); ++i) {
    const Vector x = data.features.row(i).transpose();
    CHECK(chain.predict(x) == br->predict(x));
  }
}

TEST_CASE("fit_chain: AND first makes the XOR label linearly learnable to 1.0") {
  const LabeledDataset data = and_xor_dataset(200, 10);
  BaseSpec spec;
  spec.sgd_rounds = 150;
  TrainConfig tc;
  tc.learning_rate = 0.1;
  tc.l2_penalty = 0.0;
  tc.rng = RandomSource(11, "fit");
  const ChainModel chain = fit_chain(data, {0, 1}, spec, tc);  // AND then XOR
  const Matrix pred = chain.predict_rows(data.features);
  CHECK(column_accuracy(data.labels, pred, 1) == 1.0);  // XOR column perfect
}

TEST_CASE("fit_chain: XOR first stays at or below the linear ceiling") {
  const LabeledDataset data = and_xor_dataset(200, 12);
  BaseSpec spec;
  spec.sgd_rounds = 150;
  TrainConfig tc;
  tc.learning_rate = 0.1;
  tc.l2_penalty = 0.0;
  tc.rng = RandomSource(13, "fit");
  const ChainModel chain = fit_chain(data, {1, 0}, spec, tc);  // XOR first
  const Matrix pred = chain.predict_rows(data.features);
  CHECK(column_accuracy(data.labels, pred, 1) <= 0.75);
}

TEST_CASE("fit_chain: training inputs are the true labels, never predictions") {
  const LabeledDataset data = and_xor_dataset(40, 14);
  const IndexList order = {0, 1};
  const Matrix inputs = chain_training_inputs(data, order, 1);
  CHECK(inputs.cols() == 3);
  CHECK(inputs.leftCols(2) == data.features);
  CHECK(inputs.col(2) == data.labels.col(0));  // true AND column, by value

  // The fitted links coincide with links trained manually on those inputs.
  BaseSpec spec;
  spec.sgd_rounds = 4;
  TrainConfig tc;
  tc.rng = RandomSource(15, "fit");
  const ChainModel chain = fit_chain(data, order, spec, tc);
  const RandomSource rng = tc.rng.derive("fit");
  for (Index j = 0; j < 2; ++j) {
    const Matrix X = chain_training_inputs(data, order, j);
    const auto manual = train_multi_output(X, data.labels.col(order[static_cast<std::size_t>(j)]),
                                           data.task_kind, spec, tc, rng);
    for (Index i = 0; i < 5; ++i) {
      const Vector x = X.row(i).transpose();
      REQUIRE(chain.links()[static_cast<std::size_t>(j)]->predict_scores(x) ==
              manual->predict_scores(x));
    }
  }
}

TEST_CASE("predict_chain: equals the manual two-step cascade oracle") {
  const LabeledDataset data = and_xor_dataset(60, 16);
  BaseSpec spec;
  spec.sgd_rounds = 5;
  TrainConfig tc;
  tc.rng = RandomSource(17, "fit");
  const ChainModel chain = fit_chain(data, {0, 1}, spec, tc);

  RandomSource probe(18, "probe");
  for (int i = 0; i < 50; ++i) {
    Vector x = probe.gaussian_vector(2, 1.0);
    // Oracle: y1 = h1(x); y2 = h2([x, y1]); outputs in original label order.
    const double y1 = chain.links()[0]->predict(x)(0);
    Vector aug(3);
    aug << x(0), x(1), y1;
    const double y2 = chain.links()[1]->predict(aug)(0);
    const Vector got = predict_chain(chain, x);
    REQUIRE(got(0) == y1);
    REQUIRE(got(1) == y2);
  }
}

TEST_CASE("predict_chain: exact AND link then the arithmetic XOR rule") {
  // Chain whose links implement AND exactly, then x1+x2-2*AND >= 0.5.
  Matrix W1(1, 2);
  W1 << 10, 10;
  Vector b1(1);
  b1 << -15;  // logistic(10x1+10x2-15): 1 only at corner (1,1)
  auto and_link = std::make_shared<LinearModel>(W1, b1, Link::logistic);

  Matrix W2(1, 3);
  W2 << 1, 1, -2;
  Vector b2(1);
  b2 << 0;  // identity link: x1+x2-2*AND, thresholded by the chain consumer?
  // Use logistic with a sharp slope so the hard rule is 1{x1+x2-2AND >= 0.5}.
  Matrix W2s = 20 * W2;
  Vector b2s(1);
  b2s << -10;  // logistic(20(x1+x2-2AND) - 10) >= 0.5  <=>  x1+x2-2AND >= 0.5
  auto xor_link = std::make_shared<LinearModel>(W2s, b2s, Link::logistic);

  const ChainModel chain({0, 1}, {and_link, xor_link}, 2, TaskKind::classification);
  Vector x(2);
  x << 1, 1;
  const Vector out = chain.predict(x);
  CHECK(out(0) == 1.0);  // AND
  CHECK(out(1) == 0.0);  // XOR
  x << 0, 1;
  CHECK(chain.predict(x)(0) == 0.0);
  CHECK(chain.predict(x)(1) == 1.0);
}

TEST_CASE("fit_ensemble_of_chains: single member behaves as one random chain") {
  const LabeledDataset data = and_xor_dataset(60, 19);
  BaseSpec spec;
  spec.sgd_rounds = 3;
  TrainConfig tc;
  tc.rng = RandomSource(20, "fit");
  const EnsembleModel one = fit_ensemble_of_chains(data, 1, spec, tc, RandomSource(21, "m"));
  CHECK(one.members().size() == 1);
  const auto* chain = dynamic_cast<const ChainModel*>(one.members().front().get());
  REQUIRE(chain != nullptr);
  for (Index i = 0; i < 10; ++i) {
    const Vector x = data.features.row(i).transpose();
    CHECK(one.predict(x) == chain->predict(x));
  }
}

TEST_CASE("ensemble: mean of identical members equals the single member") {
  const LabeledDataset data = and_xor_dataset(40, 22);
  BaseSpec spec;
  spec.sgd_rounds = 3;
  TrainConfig tc;
  tc.rng = RandomSource(23, "fit");
  auto member = std::make_shared<ChainModel>(fit_chain(data, {0, 1}, spec, tc));
  const EnsembleModel ens({member, member, member}, TaskKind::classification);
  for (Index i = 0; i < 10; ++i) {
    const Vector x = data.features.row(i).transpose();
    CHECK(ens.predict(x) == member->predict(x));
    CHECK(ens.predict_scores(x) == member->predict_scores(x));
  }
}

TEST_CASE("ensemble: score is the arithmetic mean of member scores") {
  auto constant = [](double v) {
    Matrix W = Matrix::Zero(1, 2);
    Vector b(1);
    b << v;
    return std::make_shared<LinearModel>(W, b, Link::identity);
  };
  const EnsembleModel ens({constant(0.2), constant(0.4), constant(0.9)},
                          TaskKind::regression);
  CHECK(ens.predict_scores(Vector::Zero(2))(0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("fit_ensemble_of_chains: member orders are uniform over permutations") {
  IndependentConceptConfig cfg;
  cfg.n = 12;
  cfg.d = 2;
  cfg.m = 3;
  cfg.task_kind = TaskKind::classification;
  cfg.rng = RandomSource(24, "data");
  const LabeledDataset data = gen_independent_concepts(cfg);
  BaseSpec spec;
  spec.sgd_rounds = 0;  // order statistics only; skip training work
  TrainConfig tc;
  tc.rng = RandomSource(25, "fit");
  const EnsembleModel ens = fit_ensemble_of_chains(data, 1000, spec, tc, RandomSource(26, "m"));
  std::map<IndexList, int> counts;
  for (const auto& m : ens.members())
    ++counts[dynamic_cast<const ChainModel*>(m.get())->order()];
  CHECK(counts.size() == 6);
  for (const auto& [order, count] : counts) {
    CHECK(count > 1000.0 / 6.0 - 50);
    CHECK(count < 1000.0 / 6.0 + 50);
  }
}

TEST_CASE("fit_bagging: no-resample single member equals fit_br") {
  IndependentConceptConfig cfg;
  cfg.n = 40;
  cfg.d = 3;
  cfg.m = 2;
  cfg.task_kind = TaskKind::classification;
  cfg.rng = RandomSource(27, "data");
  const LabeledDataset data = gen_independent_concepts(cfg);
  BaseSpec spec;
  spec.sgd_rounds = 4;
  TrainConfig tc;
  tc.rng = RandomSource(28, "fit");
  const EnsembleModel bag =
      fit_bagging(data, 1, spec, tc, RandomSource(29, "bag"), /*resample=*/false);

  TrainConfig tc_br = tc;
  tc_br.rng = RandomSource(29, "bag").derive("member-0").derive("train");
  const auto br = fit_br(data, spec, tc_br);
  for (Index i = 0; i < 10; ++i) {
    const Vector x = data.features.row(i).transpose();
    CHECK(bag.predict_scores(x) == br->predict_scores(x));
  }
}

TEST_CASE("fit_bagging: linear regression members collapse to the mean model") {
  // Identical training data (resampling off), identity link: the ensemble
  // mean must equal a single model with averaged weights.
  IndependentConceptConfig cfg;
  cfg.n = 60;
  cfg.d = 3;
  cfg.m = 2;
  cfg.task_kind = TaskKind::regression;
  cfg.rng = RandomSource(30, "data");
  const LabeledDataset data = gen_independent_concepts(cfg);
  BaseSpec spec;
  spec.link = Link::identity;
  spec.sgd_rounds = 3;
  TrainConfig tc;
  tc.rng = RandomSource(31, "fit");
  const EnsembleModel bag =
      fit_bagging(data, 5, spec, tc, RandomSource(32, "bag"), /*resample=*/false);

  Matrix W_mean = Matrix::Zero(2, 3);
  Vector b_mean = Vector::Zero(2);
  for (const auto& m : bag.members()) {
    const auto* lin = dynamic_cast<const LinearModel*>(m.get());
    REQUIRE(lin != nullptr);
    W_mean += lin->layer().W;
    b_mean += lin->layer().b;
  }
  W_mean /= 5.0;
  b_mean /= 5.0;
  const LinearModel collapsed(W_mean, b_mean, Link::identity);
  RandomSource probe(33, "probe");
  for (int i = 0; i < 50; ++i) {
    const Vector x = probe.gaussian_vector(3, 1.0);
    REQUIRE((bag.predict(x) - collapsed.predict(x)).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("fit_bagging: bootstrap resamples hold about 63.2% distinct rows") {
  // 1 - 1/e oracle, averaged over 100 bootstrap draws of n=1000.
  RandomSource rng(34, "boot");
  double distinct_total = 0.0;
  const Index n = 1000;
  for (int trial = 0; trial < 100; ++trial) {
    std::set<Index> seen;
    for (Index i = 0; i < n; ++i) seen.insert(rng.index(n));
    distinct_total += static_cast<double>(seen.size()) / static_cast<double>(n);
  }
  const double mean_distinct = distinct_total / 100.0;
  CHECK(mean_distinct > (1.0 - 1.0 / std::exp(1.0)) - 0.02);
  CHECK(mean_distinct < (1.0 - 1.0 / std::exp(1.0)) + 0.02);
}

TEST_CASE("stacking: identity meta layer reproduces the first layer") {
  const LabeledDataset data = and_xor_dataset(40, 35);
  BaseSpec spec;
  spec.sgd_rounds = 5;
  TrainConfig tc;
  tc.rng = RandomSource(36, "fit");
  auto first = fit_br(data, spec, tc);

  // Meta model j copies prediction input j (weight 1 on column d+j).
  std::vector<std::shared_ptr<Model>> metas;
  for (Index j = 0; j < 2; ++j) {
    Matrix W = Matrix::Zero(1, 4);
    W(0, 2 + j) = 1.0;
    metas.push_back(std::make_shared<LinearModel>(W, Vector::Zero(1), Link::identity));
  }
  const StackedModel stacked(first, metas);
  for (Index i = 0; i < data.rows(); ++i) {
    const Vector x = data.features.row(i).transpose();
    CHECK(stacked.predict(x) == first->predict(x));
  }
}

TEST_CASE("stacking: meta layer trains on first-layer predictions, not labels") {
  const LabeledDataset data = and_xor_dataset(80, 37);
  BaseSpec weak;
  weak.sgd_rounds = 1;  // deliberately undertrained first layer
  TrainConfig tc;
  tc.rng = RandomSource(38, "fit");
  const auto first = fit_br(data, weak, tc);

  const double train_acc =
      exact_match_accuracy(data.labels, first->predict_rows(data.features));
  REQUIRE(train_acc < 1.0);  // the premise of the check

  const Matrix meta_inputs = stacking_meta_inputs(data, *first);
  CHECK(meta_inputs.leftCols(2) == data.features);
  CHECK(meta_inputs.rightCols(2) != data.labels);
  CHECK(meta_inputs.rightCols(2) == first->predict_rows(data.features));
}

TEST_CASE("stacking: a constant first layer reduces to a model of x alone") {
  const LabeledDataset data = and_xor_dataset(120, 50);
  auto constant_first = std::make_shared<LinearModel>(Matrix::Zero(2, 2), Vector::Ones(2),
                                                      Link::identity);
  BaseSpec meta_spec;
  meta_spec.sgd_rounds = 100;
  TrainConfig tc;
  tc.learning_rate = 0.1;
  tc.l2_penalty = 0.0;
  tc.rng = RandomSource(51, "fit");

  // Meta layer over [x, constant]: train by hand through the public pieces.
  const Matrix meta_inputs = stacking_meta_inputs(data, *constant_first);
  std::vector<std::shared_ptr<Model>> metas;
  RandomSource rng = tc.rng.derive("stack-meta");
  for (Index j = 0; j < 2; ++j)
    metas.push_back(train_multi_output(meta_inputs, data.labels.col(j), data.task_kind,
                                       meta_spec, tc, rng));
  const StackedModel stacked(constant_first, metas);

  // Oracle: the same base trained without the constant columns.
  const auto plain = fit_br(data, meta_spec, tc);
  const double stacked_loss =
      1.0 - hamming_score(data.labels, stacked.predict_rows(data.features));
  const double plain_loss =
      1.0 - hamming_score(data.labels, plain->predict_rows(data.features));
  CHECK(std::abs(stacked_loss - plain_loss) < 0.1);
}

TEST_CASE("chain artifacts: save and load preserve predictions exactly") {
  const LabeledDataset data = and_xor_dataset(50, 39);
  BaseSpec spec;
  spec.sgd_rounds = 4;
  TrainConfig tc;
  tc.rng = RandomSource(40, "fit");
  const ChainModel chain = fit_chain(data, {1, 0}, spec, tc);
  const auto loaded = load_model(save_model(chain));
  CHECK(loaded->input_dim() == 2);
  CHECK(loaded->output_dim() == 2);
  RandomSource probe(41, "probe");
  for (int i = 0; i < 30; ++i) {
    const Vector x = probe.gaussian_vector(2, 1.0);
    CHECK(loaded->predict(x) == chain.predict(x));
  }
}

TEST_CASE("ensemble artifacts: save and load preserve predictions exactly") {
  const LabeledDataset data = and_xor_dataset(50, 42);
  BaseSpec spec;
  spec.sgd_rounds = 3;
  TrainConfig tc;
  tc.rng = RandomSource(43, "fit");
  const EnsembleModel ens = fit_ensemble_of_chains(data, 3, spec, tc, RandomSource(44, "m"));
  const auto loaded = load_model(save_model(ens));
  RandomSource probe(45, "probe");
  for (int i = 0; i < 30; ++i) {
    const Vector x = probe.gaussian_vector(2, 1.0);
    CHECK(loaded->predict_scores(x) == ens.predict_scores(x));
  }
}

TEST_CASE("regression chains cascade raw predictions") {
  // Link 1: y1 = 2 x; link 2: y2 = y1 + x (reads the raw cascade value).
  Matrix W1(1, 1);
  W1 << 2;
  auto l1 = std::make_shared<LinearModel>(W1, Vector::Zero(1), Link::identity);
  Matrix W2(1, 2);
  W2 << 1, 1;
  auto l2 = std::make_shared<LinearModel>(W2, Vector::Zero(1), Link::identity);
  const ChainModel chain({0, 1}, {l1, l2}, 1, TaskKind::regression);
  Vector x(1);
  x << 3;
  const Vector out = chain.predict(x);
  CHECK(out(0) == 6.0);
  CHECK(out(1) == 9.0);
}
