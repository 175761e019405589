#pragma once

#include "chainforge/types.hpp"

#include <memory>
#include <vector>

namespace chainforge {

struct ModelArtifact;

/// Opaque trained model. Consumers may use only the dimensions and the
/// predict contract; internals stay hidden behind this boundary.
/// predict is a pure function of its argument: same input, same output.
class Predictor {
 public:
  virtual ~Predictor() = default;

  [[nodiscard]] virtual Index input_dim() const = 0;
  [[nodiscard]] virtual Index output_dim() const = 0;

  /// Hard prediction; classification entries are exactly 0 or 1.
  [[nodiscard]] virtual Vector predict(const Vector& x) const = 0;
  /// Score variant; classification scores lie in [0,1]. Defaults to predict.
  [[nodiscard]] virtual Vector predict_scores(const Vector& x) const { return predict(x); }

  /// Row-wise predictions for a whole design matrix.
  [[nodiscard]] Matrix predict_rows(const Matrix& X) const;
  [[nodiscard]] Matrix predict_scores_rows(const Matrix& X) const;

 protected:
  void check_input(const Vector& x) const;
};

/// A predictor this toolkit trained and can persist.
class Model : public Predictor {
 public:
  [[nodiscard]] virtual ModelArtifact to_artifact() const = 0;
};

/// Several source models glued into one predictor: input width is the widest
/// member (narrower members read a prefix slice) and outputs are concatenated
/// in member order.
class PooledPredictor : public Predictor {
 public:
  explicit PooledPredictor(std::vector<std::shared_ptr<const Predictor>> members);

  [[nodiscard]] Index input_dim() const override { return input_dim_; }
  [[nodiscard]] Index output_dim() const override { return output_dim_; }
  [[nodiscard]] Vector predict(const Vector& x) const override;
  [[nodiscard]] Vector predict_scores(const Vector& x) const override;

  [[nodiscard]] const std::vector<std::shared_ptr<const Predictor>>& members() const {
    return members_;
  }

 private:
  std::vector<std::shared_ptr<const Predictor>> members_;
  Index input_dim_ = 0;
  Index output_dim_ = 0;
};

}  // namespace chainforge
