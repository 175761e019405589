#include "chainforge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace chainforge {

namespace {

double toy_label(ToyConcept c, int x1, int x2) {
  if (c == ToyConcept::AND) return (x1 == 1 && x2 == 1) ? 1.0 : 0.0;
  return x1 != x2 ? 1.0 : 0.0;  // XOR
}

// Stratified corner allocation by largest remainder, so counts match the
// probabilities to within rounding.
std::array<Index, 4> corner_counts(Index n, const std::array<double, 4>& probs) {
  double total = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw std::invalid_argument("gen_toy: negative corner probability");
    total += p;
  }
  if (total <= 0.0) throw std::invalid_argument("gen_toy: corner probabilities sum to zero");
  std::array<Index, 4> counts{};
  std::array<std::pair<double, int>, 4> remainders;
  Index assigned = 0;
  for (int c = 0; c < 4; ++c) {
    const double exact = static_cast<double>(n) * probs[static_cast<std::size_t>(c)] / total;
    counts[static_cast<std::size_t>(c)] = static_cast<Index>(std::floor(exact));
    assigned += counts[static_cast<std::size_t>(c)];
    remainders[static_cast<std::size_t>(c)] = {exact - std::floor(exact), c};
  }
  std::sort(remainders.begin(), remainders.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  for (Index i = 0; i < n - assigned; ++i)
    ++counts[static_cast<std::size_t>(remainders[static_cast<std::size_t>(i % 4)].second)];
  return counts;
}

}  // namespace

LabeledDataset gen_toy(const ToyConfig& cfg) {
  if (cfg.n < 4) throw std::invalid_argument("gen_toy: need n >= 4");
  if (cfg.input_noise_sd < 0.0) throw std::invalid_argument("gen_toy: noise sd must be >= 0");
  RandomSource rng = cfg.rng;
  const std::array<Index, 4> counts = corner_counts(cfg.n, cfg.corner_probs);

  Matrix X(cfg.n, 2);
  Matrix Y(cfg.n, 1);
  Index row = 0;
  for (int c = 0; c < 4; ++c) {
    const int x1 = c >> 1;
    const int x2 = c & 1;
    for (Index i = 0; i < counts[static_cast<std::size_t>(c)]; ++i, ++row) {
      X(row, 0) = x1 + cfg.input_noise_sd * rng.normal();
      X(row, 1) = x2 + cfg.input_noise_sd * rng.normal();
      Y(row, 0) = toy_label(cfg.concept_, x1, x2);
    }
  }
  // Shuffle so corner blocks do not line up with later splits.
  const IndexList order = rng.permutation(cfg.n);
  Matrix Xs(cfg.n, 2);
  Matrix Ys(cfg.n, 1);
  for (Index i = 0; i < cfg.n; ++i) {
    Xs.row(i) = X.row(order[static_cast<std::size_t>(i)]);
    Ys.row(i) = Y.row(order[static_cast<std::size_t>(i)]);
  }
  return LabeledDataset(std::move(Xs), std::move(Ys), TaskKind::classification, {"x1", "x2"},
                        {"y"});
}

LabeledDataset gen_independent_concepts(const IndependentConceptConfig& cfg) {
  if (cfg.n < 2 || cfg.d < 1 || cfg.m < 1)
    throw std::invalid_argument("gen_independent_concepts: need n >= 2, d >= 1, m >= 1");
  if (cfg.noise_sd < 0.0)
    throw std::invalid_argument("gen_independent_concepts: noise sd must be >= 0");

  RandomSource x_rng = cfg.rng.derive("x");
  Matrix X(cfg.n, cfg.d);
  for (Index i = 0; i < cfg.n; ++i)
    for (Index j = 0; j < cfg.d; ++j) X(i, j) = x_rng.normal();

  Matrix Y(cfg.n, cfg.m);
  for (Index t = 0; t < cfg.m; ++t) {
    // Each target owns its stream, so column t is the same for any m >= t.
    RandomSource t_rng = cfg.rng.derive("target-" + std::to_string(t));
    const Vector w = t_rng.gaussian_vector(cfg.d, 1.0);
    for (Index i = 0; i < cfg.n; ++i) {
      const double signal = w.dot(X.row(i).transpose());
      const double noisy = signal + cfg.noise_sd * t_rng.normal();
      Y(i, t) = cfg.task_kind == TaskKind::regression ? noisy : (noisy > 0.0 ? 1.0 : 0.0);
    }
  }
  return LabeledDataset(std::move(X), std::move(Y), cfg.task_kind);
}

}  // namespace chainforge
