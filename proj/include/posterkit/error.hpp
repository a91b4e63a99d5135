#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace posterkit {

enum class ErrorCode {
  // posterml-parser
  NoPosterContainer,
  MalformedMarkup,
  MissingCanvasSize,
  UnresolvableLength,
  SchemaMismatch,
  InvariantViolation,
  // raster
  DecodeError,
  IoError,
  EmptyRegion,
  // metrics / asset-index
  DimensionMismatch,
  ZeroVector,
  DuplicateAssetId,
  EmptyIndex,
  // pipeline
  BackendError,
  MissingSection,
  DuplicateSection,
  MalformedJson,
  DanglingLayerRef,
  MissingBinding,
  ComposeRejected,
  RenderFailed,
  RefinerRejected,
  ParseError,
  // generic
  InvalidArgument,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Domain error carrying a machine-readable code plus structured details
/// (e.g. the section name for MissingSection, the lint report for
/// ComposeRejected).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, nlohmann::json details = nullptr)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message),
        details_(std::move(details)) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix that what() carries.
  const std::string& message() const noexcept { return message_; }
  const nlohmann::json& details() const noexcept { return details_; }

 private:
  ErrorCode code_;
  std::string message_;
  nlohmann::json details_;
};

}  // namespace posterkit
