#pragma once

#include "chainforge/types.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace chainforge {

/// Counter-based deterministic random stream keyed by (seed, stream_label).
///
/// Two sources constructed with the same seed and label produce bit-identical
/// sequences; `derive` appends a path segment to the label ("fold-3/member-7")
/// so that parallel experiment cells can own independent streams that do not
/// depend on execution order. All integer output is pure 64-bit arithmetic.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed, std::string_view stream_label = {});

  /// Child stream whose label is `<this label>/<label>`.
  [[nodiscard]] RandomSource derive(std::string_view label) const;

  std::uint64_t next_u64();
  /// Uniform double in [0, 1), 53 bits of precision.
  double uniform01();
  /// Standard Gaussian (Marsaglia polar method).
  double normal();
  /// Uniform integer in [0, n); rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);
  Index index(Index n) { return static_cast<Index>(below(static_cast<std::uint64_t>(n))); }

  Matrix gaussian_matrix(Index rows, Index cols, double sd);
  Vector gaussian_vector(Index n, double sd);
  /// Fisher-Yates permutation of {0..n-1}.
  IndexList permutation(Index n);

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] const std::string& stream_label() const { return label_; }

 private:
  std::uint64_t seed_;
  std::string label_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace chainforge
