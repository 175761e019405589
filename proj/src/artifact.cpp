#include "chainforge/artifact.hpp"

#include "chainforge/errors.hpp"
#include "chainforge/forest.hpp"
#include "chainforge/multilabel.hpp"
#include "chainforge/net.hpp"
#include "chainforge/transfer.hpp"

#include <fstream>
#include <string>

namespace chainforge {

namespace {

constexpr int kFormatVersion = 1;

nlohmann::json get(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw CorruptArtifactError(std::string("missing field '") + key + "'");
  return j.at(key);
}

TaskKind task_kind_from(const nlohmann::json& j) {
  const std::string s = j.get<std::string>();
  if (s == "classification") return TaskKind::classification;
  if (s == "regression") return TaskKind::regression;
  throw CorruptArtifactError("unknown task kind '" + s + "'");
}

std::shared_ptr<Model> load_linear(const ModelArtifact& a) {
  Matrix W = matrix_from_json(get(a.payload, "W"));
  Vector b = vector_from_json(get(a.payload, "b"));
  if (W.rows() != a.output_dim || W.cols() != a.input_dim || b.size() != a.output_dim)
    throw CorruptArtifactError("linear payload dimensions disagree with header");
  auto m = std::make_shared<LinearModel>(std::move(W), std::move(b),
                                         net::link_from_name(get(a.payload, "link")));
  m->steps_taken() = a.payload.value("steps", 0L);
  return m;
}

std::shared_ptr<Model> load_mlp(const ModelArtifact& a) {
  std::vector<AffineLayer> layers;
  for (const auto& jl : get(a.payload, "layers"))
    layers.push_back({matrix_from_json(get(jl, "W")), vector_from_json(get(jl, "b"))});
  if (layers.empty()) throw CorruptArtifactError("mlp payload has no layers");
  if (layers.front().W.cols() != a.input_dim || layers.back().W.rows() != a.output_dim)
    throw CorruptArtifactError("mlp payload dimensions disagree with header");
  auto m = std::make_shared<MlpModel>(std::move(layers),
                                      net::link_from_name(get(a.payload, "link")));
  m->steps_taken() = a.payload.value("steps", 0L);
  return m;
}

std::shared_ptr<Model> load_forest(const ModelArtifact& a) {
  std::vector<std::vector<DecisionTree>> per_label;
  for (const auto& jtrees : get(a.payload, "labels")) {
    std::vector<DecisionTree> trees;
    for (const auto& jnodes : jtrees) {
      DecisionTree t;
      for (const auto& jn : jnodes) {
        if (!jn.is_array() || jn.size() != 5)
          throw CorruptArtifactError("forest node must be [feature,threshold,left,right,frac]");
        TreeNode n;
        n.feature = jn.at(0).get<int>();
        n.threshold = jn.at(1).get<double>();
        n.left = jn.at(2).get<int>();
        n.right = jn.at(3).get<int>();
        n.positive_fraction = jn.at(4).get<double>();
        if (n.feature >= a.input_dim)
          throw CorruptArtifactError("forest node reads feature beyond input_dim");
        t.nodes.push_back(n);
      }
      if (t.nodes.empty()) throw CorruptArtifactError("forest tree has no nodes");
      trees.push_back(std::move(t));
    }
    per_label.push_back(std::move(trees));
  }
  if (static_cast<Index>(per_label.size()) != a.output_dim)
    throw CorruptArtifactError("forest payload label count disagrees with header");
  return std::make_shared<ForestModel>(std::move(per_label), a.input_dim,
                                       a.payload.value("trees_per_label", 0),
                                       a.payload.value("max_depth", 0));
}

std::shared_ptr<Model> load_chain(const ModelArtifact& a) {
  IndexList order;
  for (const auto& j : get(a.payload, "order")) order.push_back(j.get<Index>());
  std::vector<std::shared_ptr<Model>> links;
  for (const auto& jl : get(a.payload, "links")) links.push_back(load_model(artifact_from_json(jl)));
  return std::make_shared<ChainModel>(std::move(order), std::move(links), a.input_dim,
                                      task_kind_from(get(a.payload, "task_kind")),
                                      a.payload.value("feed_scores", false));
}

std::shared_ptr<Model> load_ensemble(const ModelArtifact& a) {
  std::vector<std::shared_ptr<Predictor>> members;
  for (const auto& jm : get(a.payload, "members"))
    members.push_back(load_model(artifact_from_json(jm)));
  return std::make_shared<EnsembleModel>(std::move(members),
                                         task_kind_from(get(a.payload, "task_kind")));
}

std::shared_ptr<Model> load_transfer_chain(const ModelArtifact& a) {
  std::vector<std::shared_ptr<const Predictor>> sources;
  for (const auto& js : get(a.payload, "sources"))
    sources.push_back(load_model(artifact_from_json(js)));
  if (sources.empty()) throw CorruptArtifactError("transfer_chain payload has no sources");
  std::shared_ptr<const Predictor> source =
      sources.size() == 1 ? sources.front()
                          : std::make_shared<PooledPredictor>(std::move(sources));
  Standardizer std_;
  std_.mean = vector_from_json(get(a.payload, "standardizer_mean"));
  std_.sd = vector_from_json(get(a.payload, "standardizer_sd"));
  LinearMap map;
  map.U = matrix_from_json(get(a.payload, "U"));
  map.u = vector_from_json(get(a.payload, "u"));
  if (map.U.cols() != a.input_dim || std_.mean.size() != a.input_dim)
    throw CorruptArtifactError("transfer_chain payload dimensions disagree with header");
  std::shared_ptr<Model> target = load_model(artifact_from_json(get(a.payload, "target")));
  return std::make_shared<TransferChainModel>(std::move(source), std::move(std_),
                                              std::move(map), std::move(target),
                                              task_kind_from(get(a.payload, "task_kind")));
}

}  // namespace

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return nlohmann::json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  try {
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    const auto& data = j.at("data");
    if (static_cast<Index>(data.size()) != rows)
      throw CorruptArtifactError("matrix row count mismatch");
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      const auto& row = data.at(static_cast<std::size_t>(i));
      if (static_cast<Index>(row.size()) != cols)
        throw CorruptArtifactError("matrix column count mismatch");
      for (Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptArtifactError(std::string("bad matrix payload: ") + e.what());
  }
}

Vector vector_from_json(const nlohmann::json& j) {
  try {
    Vector v(static_cast<Index>(j.size()));
    for (Index i = 0; i < v.size(); ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptArtifactError(std::string("bad vector payload: ") + e.what());
  }
}

nlohmann::json artifact_to_json(const ModelArtifact& a) {
  return nlohmann::json{{"format_version", a.format_version},
                        {"kind", a.kind},
                        {"input_dim", a.input_dim},
                        {"output_dim", a.output_dim},
                        {"payload", a.payload}};
}

ModelArtifact artifact_from_json(const nlohmann::json& j) {
  ModelArtifact a;
  try {
    a.format_version = j.at("format_version").get<int>();
    a.kind = j.at("kind").get<std::string>();
    a.input_dim = j.at("input_dim").get<Index>();
    a.output_dim = j.at("output_dim").get<Index>();
    a.payload = j.value("payload", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw CorruptArtifactError(std::string("bad artifact envelope: ") + e.what());
  }
  return a;
}

nlohmann::json artifact_to_json_for_member(const Predictor& p) {
  return artifact_to_json(save_model(p));
}

ModelArtifact save_model(const Predictor& p) {
  const auto* model = dynamic_cast<const Model*>(&p);
  if (!model)
    throw UnsupportedFormatError("predictor is not a serializable model of this toolkit");
  ModelArtifact a = model->to_artifact();
  a.format_version = kFormatVersion;
  return a;
}

std::shared_ptr<Model> load_model(const ModelArtifact& a) {
  if (a.format_version != kFormatVersion)
    throw UnsupportedFormatError("unsupported format_version " +
                                 std::to_string(a.format_version));
  if (a.input_dim < 1 || a.output_dim < 1)
    throw CorruptArtifactError("artifact dimensions must be positive");
  if (a.kind == "linear") return load_linear(a);
  if (a.kind == "mlp") return load_mlp(a);
  if (a.kind == "forest") return load_forest(a);
  if (a.kind == "chain") return load_chain(a);
  if (a.kind == "ensemble") return load_ensemble(a);
  if (a.kind == "transfer_chain") return load_transfer_chain(a);
  throw UnsupportedFormatError("unknown model kind '" + a.kind + "'");
}

void write_artifact(const ModelArtifact& a, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << artifact_to_json(a).dump(2) << '\n';
  if (!out) throw IoError(path.string() + ": write failed");
}

ModelArtifact read_artifact(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptArtifactError(path.string() + ": " + e.what());
  }
  return artifact_from_json(j);
}

}  // namespace chainforge
