#pragma once

#include "chainforge/errors.hpp"
#include "chainforge/types.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace chainforge {

/// Count of positions where the binary vectors disagree (unnormalized).
template <class DerivedA, class DerivedB>
int hamming_loss(const Eigen::MatrixBase<DerivedA>& y, const Eigen::MatrixBase<DerivedB>& yhat) {
  if (y.size() != yhat.size()) throw std::invalid_argument("hamming_loss: length mismatch");
  int count = 0;
  for (Index j = 0; j < y.size(); ++j)
    if (y(j) != yhat(j)) ++count;
  return count;
}

/// 1 unless the vectors match exactly.
template <class DerivedA, class DerivedB>
int zero_one_loss(const Eigen::MatrixBase<DerivedA>& y, const Eigen::MatrixBase<DerivedB>& yhat) {
  return hamming_loss(y, yhat) > 0 ? 1 : 0;
}

/// 1 - mean 0/1 loss over paired rows (subset accuracy).
inline double exact_match_accuracy(const Matrix& Y, const Matrix& Yhat) {
  if (Y.rows() != Yhat.rows() || Y.cols() != Yhat.cols())
    throw std::invalid_argument("exact_match_accuracy: shape mismatch");
  if (Y.rows() < 1) throw std::invalid_argument("exact_match_accuracy: empty set");
  double wrong = 0.0;
  for (Index i = 0; i < Y.rows(); ++i)
    wrong += zero_one_loss(Y.row(i), Yhat.row(i));
  return 1.0 - wrong / static_cast<double>(Y.rows());
}

/// 1 - mean per-bit Hamming loss.
inline double hamming_score(const Matrix& Y, const Matrix& Yhat) {
  if (Y.rows() != Yhat.rows() || Y.cols() != Yhat.cols())
    throw std::invalid_argument("hamming_score: shape mismatch");
  if (Y.rows() < 1) throw std::invalid_argument("hamming_score: empty set");
  double bits = 0.0;
  for (Index i = 0; i < Y.rows(); ++i)
    bits += hamming_loss(Y.row(i), Yhat.row(i));
  return 1.0 - bits / static_cast<double>(Y.rows() * Y.cols());
}

/// How many times better joint modeling performed: (1-loss_joint)/(1-loss_indep).
inline double gain(double loss_joint, double loss_indep) {
  if (loss_indep >= 1.0)
    throw UndefinedGainError("gain: independent-model loss of 1 leaves nothing to compare");
  return (1.0 - loss_joint) / (1.0 - loss_indep);
}

/// Plug-in mutual information of two binary columns, in nats; 0 log 0 := 0.
template <class DerivedA, class DerivedB>
double mutual_information(const Eigen::MatrixBase<DerivedA>& a,
                          const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("mutual_information: length mismatch");
  if (a.size() < 1) throw std::invalid_argument("mutual_information: empty columns");
  double joint[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  const double n = static_cast<double>(a.size());
  for (Index i = 0; i < a.size(); ++i)
    joint[a(i) != 0.0 ? 1 : 0][b(i) != 0.0 ? 1 : 0] += 1.0 / n;
  const double pa[2] = {joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]};
  const double pb[2] = {joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]};
  double mi = 0.0;
  for (int u = 0; u < 2; ++u)
    for (int v = 0; v < 2; ++v)
      if (joint[u][v] > 0.0) mi += joint[u][v] * std::log(joint[u][v] / (pa[u] * pb[v]));
  return mi < 0.0 ? 0.0 : mi;  // clamp tiny negative rounding
}

/// Mean pairwise mutual information between every source column and every
/// target column: the aggregation rule for the transfer-search filter score.
inline double vector_mi(const Matrix& source_predictions, const Matrix& target_labels) {
  if (source_predictions.rows() != target_labels.rows())
    throw std::invalid_argument("vector_mi: row count mismatch");
  double total = 0.0;
  for (Index s = 0; s < source_predictions.cols(); ++s)
    for (Index t = 0; t < target_labels.cols(); ++t)
      total += mutual_information(source_predictions.col(s), target_labels.col(t));
  return total / static_cast<double>(source_predictions.cols() * target_labels.cols());
}

}  // namespace chainforge
