#pragma once

#include "chainforge/types.hpp"

#include <algorithm>
#include <stdexcept>

namespace chainforge {

/// n repeated estimates of one m-dimensional target, stored row-wise.
struct SampleBundle {
  Matrix samples;  // n x m

  [[nodiscard]] Index count() const { return samples.rows(); }
  [[nodiscard]] Index dim() const { return samples.cols(); }
};

struct JsEstimate {
  double shrink_factor = 0.0;      // in [0,1]
  Vector estimate;                 // shrink_factor * mle
  Vector mle;                      // sample mean
  double variance_estimate = 0.0;  // pooled sigma^2
};

/// Sample mean of the bundle.
inline Vector mle_mean(const SampleBundle& bundle) {
  if (bundle.count() < 1) throw std::invalid_argument("mle_mean: empty bundle");
  return bundle.samples.colwise().mean().transpose();
}

/// James-Stein estimate with an externally supplied noise variance:
/// shrink = clip(1 - ((m-2) sigma^2 / n) / ||mean||^2, 0, 1), zero mean
/// shrinks to factor 0. Positive-part clipping keeps the factor in [0,1].
inline JsEstimate james_stein_with_variance(const SampleBundle& bundle, double sigma2) {
  JsEstimate e;
  e.mle = mle_mean(bundle);
  e.variance_estimate = sigma2;
  const double m = static_cast<double>(bundle.dim());
  const double n = static_cast<double>(bundle.count());
  const double norm2 = e.mle.squaredNorm();
  if (norm2 == 0.0) {
    e.shrink_factor = 0.0;
  } else {
    const double raw = 1.0 - ((m - 2.0) * sigma2 / n) / norm2;
    e.shrink_factor = std::clamp(raw, 0.0, 1.0);
  }
  e.estimate = e.shrink_factor * e.mle;
  return e;
}

/// Pooled unbiased variance of the n*m scalar observations around their
/// per-dimension means; defined as 0 when n = 1.
inline double pooled_variance(const SampleBundle& bundle) {
  const Index n = bundle.count();
  const Index m = bundle.dim();
  if (n <= 1) return 0.0;
  const Vector mean = mle_mean(bundle);
  const double ss = (bundle.samples.rowwise() - mean.transpose()).squaredNorm();
  return ss / static_cast<double>(m * (n - 1));
}

/// James-Stein estimate with the pooled variance estimated from the bundle.
inline JsEstimate james_stein(const SampleBundle& bundle) {
  if (bundle.count() < 1 || bundle.dim() < 1)
    throw std::invalid_argument("james_stein: empty bundle");
  return james_stein_with_variance(bundle, pooled_variance(bundle));
}

/// Mean squared error per dimension of both estimators against a known mean:
/// (E_LS, E_JS).
inline std::pair<double, double> js_vs_ls_error(const Vector& true_mean,
                                                const SampleBundle& bundle) {
  if (true_mean.size() != bundle.dim())
    throw std::invalid_argument("js_vs_ls_error: dimension mismatch");
  const JsEstimate js = james_stein(bundle);
  const double inv_m = 1.0 / static_cast<double>(bundle.dim());
  const double e_ls = (true_mean - js.mle).squaredNorm() * inv_m;
  const double e_js = (true_mean - js.estimate).squaredNorm() * inv_m;
  return {e_ls, e_js};
}

}  // namespace chainforge
