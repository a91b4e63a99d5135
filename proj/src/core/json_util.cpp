#include "posterkit/detail/json_util.hpp"

#include <algorithm>
#include <cmath>

namespace posterkit::detail {

namespace {

const nlohmann::json& field(const nlohmann::json& j, std::string_view key, std::string_view context,
                            ErrorCode code) {
  auto it = j.find(std::string(key));
  if (it == j.end()) {
    throw Error(code, std::string(context) + ": missing field \"" + std::string(key) + "\"");
  }
  return *it;
}

[[noreturn]] void wrong_type(std::string_view key, std::string_view context, std::string_view want,
                             ErrorCode code) {
  throw Error(code, std::string(context) + ": field \"" + std::string(key) + "\" must be " +
                        std::string(want));
}

}  // namespace

void expect_object(const nlohmann::json& j, std::initializer_list<std::string_view> required,
                   std::initializer_list<std::string_view> optional, std::string_view context,
                   ErrorCode code) {
  if (!j.is_object()) throw Error(code, std::string(context) + ": expected an object");
  for (auto key : required) {
    if (!j.contains(std::string(key))) {
      throw Error(code, std::string(context) + ": missing field \"" + std::string(key) + "\"");
    }
  }
  for (const auto& [key, value] : j.items()) {
    auto known = [&](std::initializer_list<std::string_view> keys) {
      return std::find(keys.begin(), keys.end(), key) != keys.end();
    };
    if (!known(required) && !known(optional)) {
      throw Error(code, std::string(context) + ": unexpected field \"" + key + "\"");
    }
  }
}

double number_field(const nlohmann::json& j, std::string_view key, std::string_view context,
                    ErrorCode code) {
  const auto& v = field(j, key, context, code);
  if (!v.is_number()) wrong_type(key, context, "a number", code);
  return v.get<double>();
}

long long integer_field(const nlohmann::json& j, std::string_view key, std::string_view context,
                        ErrorCode code) {
  const auto& v = field(j, key, context, code);
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d)) return static_cast<long long>(d);
  }
  wrong_type(key, context, "an integer", code);
}

std::string string_field(const nlohmann::json& j, std::string_view key, std::string_view context,
                         ErrorCode code) {
  const auto& v = field(j, key, context, code);
  if (!v.is_string()) wrong_type(key, context, "a string", code);
  return v.get<std::string>();
}

bool bool_field(const nlohmann::json& j, std::string_view key, std::string_view context,
                ErrorCode code) {
  const auto& v = field(j, key, context, code);
  if (!v.is_boolean()) wrong_type(key, context, "a boolean", code);
  return v.get<bool>();
}

const nlohmann::json& array_field(const nlohmann::json& j, std::string_view key,
                                  std::string_view context, ErrorCode code) {
  const auto& v = field(j, key, context, code);
  if (!v.is_array()) wrong_type(key, context, "an array", code);
  return v;
}

}  // namespace posterkit::detail
