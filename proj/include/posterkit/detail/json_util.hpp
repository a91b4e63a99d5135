#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "posterkit/error.hpp"

namespace posterkit::detail {

/// Rejects objects that miss a required key or carry a key outside
/// `required` ∪ `optional`.
void expect_object(const nlohmann::json& j, std::initializer_list<std::string_view> required,
                   std::initializer_list<std::string_view> optional, std::string_view context,
                   ErrorCode code = ErrorCode::SchemaMismatch);

double number_field(const nlohmann::json& j, std::string_view key, std::string_view context,
                    ErrorCode code = ErrorCode::SchemaMismatch);
long long integer_field(const nlohmann::json& j, std::string_view key, std::string_view context,
                        ErrorCode code = ErrorCode::SchemaMismatch);
std::string string_field(const nlohmann::json& j, std::string_view key, std::string_view context,
                         ErrorCode code = ErrorCode::SchemaMismatch);
bool bool_field(const nlohmann::json& j, std::string_view key, std::string_view context,
                ErrorCode code = ErrorCode::SchemaMismatch);
const nlohmann::json& array_field(const nlohmann::json& j, std::string_view key,
                                  std::string_view context,
                                  ErrorCode code = ErrorCode::SchemaMismatch);

}  // namespace posterkit::detail
