#include "posterkit/design.hpp"
#include "posterkit/error.hpp"

namespace posterkit {

GeometrySet load_geometry_dump(std::string_view bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("geometry dump is not JSON: ") + e.what());
  }
  GeometrySet g;
  try {
    g = j.get<GeometrySet>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, e.what());
  }
  auto violations = validate_geometry_set(g);
  if (!violations.empty()) {
    throw Error(ErrorCode::InvariantViolation,
                std::to_string(violations.size()) + " violation(s), first: " + violations.front().subject +
                    ": " + violations.front().message,
                violations);
  }
  return g;
}

}  // namespace posterkit
