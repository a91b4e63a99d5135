#include "posterkit/error.hpp"

namespace posterkit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoPosterContainer: return "NoPosterContainer";
    case ErrorCode::MalformedMarkup: return "MalformedMarkup";
    case ErrorCode::MissingCanvasSize: return "MissingCanvasSize";
    case ErrorCode::UnresolvableLength: return "UnresolvableLength";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::DecodeError: return "DecodeError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DuplicateAssetId: return "DuplicateAssetId";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::MissingSection: return "MissingSection";
    case ErrorCode::DuplicateSection: return "DuplicateSection";
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::DanglingLayerRef: return "DanglingLayerRef";
    case ErrorCode::MissingBinding: return "MissingBinding";
    case ErrorCode::ComposeRejected: return "ComposeRejected";
    case ErrorCode::RenderFailed: return "RenderFailed";
    case ErrorCode::RefinerRejected: return "RefinerRejected";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace posterkit
