#include "chainforge/predictor.hpp"

#include <stdexcept>
#include <string>

namespace chainforge {

void Predictor::check_input(const Vector& x) const {
  if (x.size() != input_dim())
    throw std::invalid_argument("predict: input length " + std::to_string(x.size()) +
                                " does not match input_dim " + std::to_string(input_dim()));
}

Matrix Predictor::predict_rows(const Matrix& X) const {
  Matrix out(X.rows(), output_dim());
  for (Index i = 0; i < X.rows(); ++i) out.row(i) = predict(X.row(i).transpose()).transpose();
  return out;
}

Matrix Predictor::predict_scores_rows(const Matrix& X) const {
  Matrix out(X.rows(), output_dim());
  for (Index i = 0; i < X.rows(); ++i)
    out.row(i) = predict_scores(X.row(i).transpose()).transpose();
  return out;
}

PooledPredictor::PooledPredictor(std::vector<std::shared_ptr<const Predictor>> members)
    : members_(std::move(members)) {
  if (members_.empty()) throw std::invalid_argument("PooledPredictor: needs at least one member");
  for (const auto& m : members_) {
    input_dim_ = std::max(input_dim_, m->input_dim());
    output_dim_ += m->output_dim();
  }
}

Vector PooledPredictor::predict(const Vector& x) const {
  check_input(x);
  Vector out(output_dim_);
  Index at = 0;
  for (const auto& m : members_) {
    out.segment(at, m->output_dim()) = m->predict(x.head(m->input_dim()));
    at += m->output_dim();
  }
  return out;
}

Vector PooledPredictor::predict_scores(const Vector& x) const {
  check_input(x);
  Vector out(output_dim_);
  Index at = 0;
  for (const auto& m : members_) {
    out.segment(at, m->output_dim()) = m->predict_scores(x.head(m->input_dim()));
    at += m->output_dim();
  }
  return out;
}

}  // namespace chainforge
