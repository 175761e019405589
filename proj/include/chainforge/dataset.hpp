#pragma once

#include "chainforge/random.hpp"
#include "chainforge/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace chainforge {

/// One task's supervised data: n x d features, n x m labels.
/// Classification labels are exactly 0/1; all features finite.
struct LabeledDataset {
  Matrix features;                         // n x d
  Matrix labels;                           // n x m
  std::vector<std::string> feature_names;  // size d
  std::vector<std::string> label_names;    // size m
  TaskKind task_kind = TaskKind::classification;

  LabeledDataset() = default;
  LabeledDataset(Matrix features_, Matrix labels_, TaskKind kind,
                 std::vector<std::string> feature_names_ = {},
                 std::vector<std::string> label_names_ = {});

  [[nodiscard]] Index rows() const { return features.rows(); }
  [[nodiscard]] Index input_dim() const { return features.cols(); }
  [[nodiscard]] Index output_dim() const { return labels.cols(); }

  /// Row subset in the given order.
  [[nodiscard]] LabeledDataset subset(const IndexList& indices) const;

  /// Throws std::invalid_argument if any structural invariant fails.
  void validate() const;
};

std::pair<LabeledDataset, LabeledDataset> split_train_test(const LabeledDataset& data,
                                                           double train_fraction,
                                                           RandomSource rng);

/// k disjoint index sets partitioning {0..n-1}, sizes differing by at most 1.
std::vector<IndexList> kfold_indices(Index n, int k, RandomSource rng);

/// CSV with one header row; the last `labels_last` columns are labels.
/// TaskKind is inferred (all label entries 0/1 -> classification) unless forced.
LabeledDataset read_csv(const std::filesystem::path& path, Index labels_last);
LabeledDataset read_csv(const std::filesystem::path& path, Index labels_last, TaskKind kind);
void write_csv(const LabeledDataset& data, const std::filesystem::path& path);
void write_csv(const LabeledDataset& data, std::ostream& out);

/// Test hook recording every file opened through read_csv.
namespace io_trace {
void enable();
void disable();
void clear();
std::vector<std::string> opened_paths();
}  // namespace io_trace

}  // namespace chainforge
