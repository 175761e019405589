#pragma once

#include <stdexcept>
#include <string>

namespace chainforge {

/// Artifact kind or format_version not recognized by this build.
struct UnsupportedFormatError : std::runtime_error {
  explicit UnsupportedFormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Artifact parsed but its payload is inconsistent (bad dimensions, missing fields).
struct CorruptArtifactError : std::runtime_error {
  explicit CorruptArtifactError(const std::string& what) : std::runtime_error(what) {}
};

/// A gradient or update became non-finite during training.
struct NumericFailureError : std::runtime_error {
  explicit NumericFailureError(const std::string& what) : std::runtime_error(what) {}
};

/// Gain ratio is undefined (independent-model loss equals 1).
struct UndefinedGainError : std::runtime_error {
  explicit UndefinedGainError(const std::string& what) : std::runtime_error(what) {}
};

/// File could not be read or written; message carries file (and line) context.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace chainforge
