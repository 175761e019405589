#include "chainforge/random.hpp"

#include <cmath>
#include <limits>

namespace chainforge {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

RandomSource::RandomSource(std::uint64_t seed, std::string_view stream_label)
    : seed_(seed), label_(stream_label) {
  key_ = mix64(seed + kGamma) ^ mix64(fnv1a(label_) + kGamma);
}

RandomSource RandomSource::derive(std::string_view label) const {
  std::string child = label_.empty() ? std::string(label) : label_ + "/" + std::string(label);
  return RandomSource(seed_, child);
}

std::uint64_t RandomSource::next_u64() {
  counter_ += 1;
  return mix64(key_ + counter_ * kGamma);
}

double RandomSource::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomSource::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u = 0.0;
  double v = 0.0;
  double s = 0.0;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

std::uint64_t RandomSource::below(std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

Matrix RandomSource::gaussian_matrix(Index rows, Index cols, double sd) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = sd * normal();
  return m;
}

Vector RandomSource::gaussian_vector(Index n, double sd) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = sd * normal();
  return v;
}

IndexList RandomSource::permutation(Index n) {
  IndexList p(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
  for (Index i = n - 1; i > 0; --i) {
    const Index j = index(i + 1);
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  return p;
}

}  // namespace chainforge
