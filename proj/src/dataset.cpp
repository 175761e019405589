#include "chainforge/dataset.hpp"

#include "chainforge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace chainforge {

namespace {

std::vector<std::string> default_names(const char* prefix, Index count) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) names.push_back(prefix + std::to_string(i + 1));
  return names;
}

}  // namespace

LabeledDataset::LabeledDataset(Matrix features_, Matrix labels_, TaskKind kind,
                               std::vector<std::string> feature_names_,
                               std::vector<std::string> label_names_)
    : features(std::move(features_)),
      labels(std::move(labels_)),
      feature_names(std::move(feature_names_)),
      label_names(std::move(label_names_)),
      task_kind(kind) {
  if (feature_names.empty()) feature_names = default_names("x", features.cols());
  if (label_names.empty()) label_names = default_names("y", labels.cols());
  validate();
}

void LabeledDataset::validate() const {
  if (features.rows() != labels.rows())
    throw std::invalid_argument("dataset: feature rows != label rows");
  if (features.rows() < 1) throw std::invalid_argument("dataset: needs at least one row");
  if (features.cols() < 1 || labels.cols() < 1)
    throw std::invalid_argument("dataset: needs d >= 1 and m >= 1");
  if (!features.allFinite()) throw std::invalid_argument("dataset: non-finite feature value");
  if (feature_names.size() != static_cast<std::size_t>(features.cols()))
    throw std::invalid_argument("dataset: feature_names size mismatch");
  if (label_names.size() != static_cast<std::size_t>(labels.cols()))
    throw std::invalid_argument("dataset: label_names size mismatch");
  if (task_kind == TaskKind::classification) {
    for (Index i = 0; i < labels.rows(); ++i)
      for (Index j = 0; j < labels.cols(); ++j) {
        const double v = labels(i, j);
        if (v != 0.0 && v != 1.0)
          throw std::invalid_argument("dataset: classification label not 0/1 at row " +
                                      std::to_string(i) + ", column " + std::to_string(j));
      }
  }
}

LabeledDataset LabeledDataset::subset(const IndexList& indices) const {
  const Index k = static_cast<Index>(indices.size());
  Matrix f(k, features.cols());
  Matrix l(k, labels.cols());
  for (Index i = 0; i < k; ++i) {
    f.row(i) = features.row(indices[static_cast<std::size_t>(i)]);
    l.row(i) = labels.row(indices[static_cast<std::size_t>(i)]);
  }
  return LabeledDataset(std::move(f), std::move(l), task_kind, feature_names, label_names);
}

std::pair<LabeledDataset, LabeledDataset> split_train_test(const LabeledDataset& data,
                                                           double train_fraction,
                                                           RandomSource rng) {
  const Index n = data.rows();
  if (n < 2) throw std::invalid_argument("split_train_test: need n >= 2");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("split_train_test: train_fraction must be in (0,1)");
  const Index n_train = static_cast<Index>(std::floor(train_fraction * static_cast<double>(n)));
  if (n_train < 1 || n_train >= n)
    throw std::invalid_argument("split_train_test: fraction leaves an empty partition");
  const IndexList order = rng.permutation(n);
  IndexList train_idx(order.begin(), order.begin() + n_train);
  IndexList test_idx(order.begin() + n_train, order.end());
  return {data.subset(train_idx), data.subset(test_idx)};
}

std::vector<IndexList> kfold_indices(Index n, int k, RandomSource rng) {
  if (k < 2 || static_cast<Index>(k) > n)
    throw std::invalid_argument("kfold_indices: need 2 <= k <= n");
  const IndexList order = rng.permutation(n);
  std::vector<IndexList> folds(static_cast<std::size_t>(k));
  for (Index i = 0; i < n; ++i)
    folds[static_cast<std::size_t>(i % k)].push_back(order[static_cast<std::size_t>(i)]);
  return folds;
}

namespace io_trace {
namespace {
bool g_enabled = false;
std::vector<std::string> g_paths;
}  // namespace
void enable() { g_enabled = true; }
void disable() { g_enabled = false; }
void clear() { g_paths.clear(); }
std::vector<std::string> opened_paths() { return g_paths; }
namespace detail {
void record(const std::filesystem::path& p) {
  if (g_enabled) g_paths.push_back(p.string());
}
}  // namespace detail
}  // namespace io_trace

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

LabeledDataset read_csv(const std::filesystem::path& path, Index labels_last) {
  LabeledDataset d = read_csv(path, labels_last, TaskKind::regression);
  bool binary = true;
  for (Index i = 0; i < d.labels.rows() && binary; ++i)
    for (Index j = 0; j < d.labels.cols() && binary; ++j)
      binary = d.labels(i, j) == 0.0 || d.labels(i, j) == 1.0;
  d.task_kind = binary ? TaskKind::classification : TaskKind::regression;
  return d;
}

LabeledDataset read_csv(const std::filesystem::path& path, Index labels_last, TaskKind kind) {
  io_trace::detail::record(path);
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ":1: missing header row");
  const std::vector<std::string> header = split_fields(line);
  const Index total = static_cast<Index>(header.size());
  if (labels_last < 1 || labels_last >= total)
    throw std::invalid_argument(path.string() + ": labels-last must be in [1, columns)");
  const Index d = total - labels_last;

  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (static_cast<Index>(fields.size()) != total)
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                    std::to_string(total) + " fields, got " + std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    for (const std::string& f : fields) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(f, &used);
      } catch (const std::exception&) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + f + "'");
      }
      if (used != f.size())
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + f + "'");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path.string() + ": no data rows");

  const Index n = static_cast<Index>(rows.size());
  Matrix X(n, d);
  Matrix Y(n, labels_last);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) X(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    for (Index j = 0; j < labels_last; ++j)
      Y(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(d + j)];
  }
  std::vector<std::string> fnames(header.begin(), header.begin() + d);
  std::vector<std::string> lnames(header.begin() + d, header.end());
  return LabeledDataset(std::move(X), std::move(Y), kind, std::move(fnames), std::move(lnames));
}

void write_csv(const LabeledDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  write_csv(data, out);
  if (!out) throw IoError(path.string() + ": write failed");
}

void write_csv(const LabeledDataset& data, std::ostream& out) {
  for (std::size_t j = 0; j < data.feature_names.size(); ++j) {
    if (j) out << ',';
    out << data.feature_names[j];
  }
  for (const std::string& name : data.label_names) out << ',' << name;
  out << '\n';
  char buf[64];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < data.input_dim(); ++j) {
      if (j) out << ',';
      emit(data.features(i, j));
    }
    for (Index j = 0; j < data.output_dim(); ++j) {
      out << ',';
      emit(data.labels(i, j));
    }
    out << '\n';
  }
}

}  // namespace chainforge
