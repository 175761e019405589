#pragma once

#include "chainforge/predictor.hpp"

#include <functional>
#include <memory>
#include <utility>

namespace chainforge::testing {

/// Wraps a predictor and counts every predict/predict_scores call; the only
/// way through is the predict contract, which is what the black-box tests
/// assert.
class CountingPredictor : public Predictor {
 public:
  CountingPredictor(std::shared_ptr<const Predictor> inner,
                    std::shared_ptr<long> counter)
      : inner_(std::move(inner)), counter_(std::move(counter)) {}

  Index input_dim() const override { return inner_->input_dim(); }
  Index output_dim() const override { return inner_->output_dim(); }
  Vector predict(const Vector& x) const override {
    ++*counter_;
    return inner_->predict(x);
  }
  Vector predict_scores(const Vector& x) const override {
    ++*counter_;
    return inner_->predict_scores(x);
  }

 private:
  std::shared_ptr<const Predictor> inner_;
  std::shared_ptr<long> counter_;
};

/// Predictor backed by a plain function, for dimension/plumbing tests.
class LambdaPredictor : public Predictor {
 public:
  LambdaPredictor(Index in, Index out, std::function<Vector(const Vector&)> fn)
      : in_(in), out_(out), fn_(std::move(fn)) {}

  Index input_dim() const override { return in_; }
  Index output_dim() const override { return out_; }
  Vector predict(const Vector& x) const override {
    check_input(x);
    return fn_(x);
  }

 private:
  Index in_;
  Index out_;
  std::function<Vector(const Vector&)> fn_;
};

}  // namespace chainforge::testing
