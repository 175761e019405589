#pragma once

#include "chainforge/predictor.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <string>

namespace chainforge {

/// Self-describing, versioned text serialization of a trained model.
/// kind is one of {linear, mlp, forest, chain, ensemble, transfer_chain}.
struct ModelArtifact {
  int format_version = 1;
  std::string kind;
  Index input_dim = 0;
  Index output_dim = 0;
  nlohmann::json payload;
};

ModelArtifact save_model(const Predictor& p);
std::shared_ptr<Model> load_model(const ModelArtifact& a);

void write_artifact(const ModelArtifact& a, const std::filesystem::path& path);
ModelArtifact read_artifact(const std::filesystem::path& path);

/// JSON <-> Eigen helpers shared by the model serializers.
nlohmann::json matrix_to_json(const Matrix& m);
nlohmann::json vector_to_json(const Vector& v);
Matrix matrix_from_json(const nlohmann::json& j);
Vector vector_from_json(const nlohmann::json& j);

/// Whole-artifact JSON encoding, used when one artifact embeds another.
nlohmann::json artifact_to_json(const ModelArtifact& a);
ModelArtifact artifact_from_json(const nlohmann::json& j);
nlohmann::json artifact_to_json_for_member(const Predictor& p);

}  // namespace chainforge
