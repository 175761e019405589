#pragma once

#include "chainforge/dataset.hpp"
#include "chainforge/random.hpp"

#include <array>

namespace chainforge {

enum class ToyConcept { XOR, AND };

/// Corner-based logical toy: rows are {0,1}^2 corners plus Gaussian jitter,
/// labels the exact logical function of the un-jittered corner (Bayes error 0).
struct ToyConfig {
  ToyConcept concept_ = ToyConcept::XOR;
  Index n = 200;
  double input_noise_sd = 0.05;
  /// Corner draw probabilities for (0,0),(0,1),(1,0),(1,1); uniform by
  /// default, skewable so source and target inputs can differ in law.
  std::array<double, 4> corner_probs{0.25, 0.25, 0.25, 0.25};
  RandomSource rng{0};
};

LabeledDataset gen_toy(const ToyConfig& cfg);

/// m targets generated independently of one another from their own weight
/// vectors over a shared standard-Gaussian input.
struct IndependentConceptConfig {
  Index n = 100;
  Index d = 5;
  Index m = 3;
  double noise_sd = 1.0;
  TaskKind task_kind = TaskKind::regression;
  RandomSource rng{0};
};

LabeledDataset gen_independent_concepts(const IndependentConceptConfig& cfg);

}  // namespace chainforge
