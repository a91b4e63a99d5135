#include "posterkit/prompts.hpp"

#include <utility>

#include "posterkit/error.hpp"

namespace posterkit {

namespace detail {
extern const std::pair<std::string_view, std::string_view> kBuiltinPrompts[];
extern const std::size_t kBuiltinPromptCount;
}  // namespace detail

std::optional<std::string_view> builtin_prompt(std::string_view name) {
  for (std::size_t i = 0; i < detail::kBuiltinPromptCount; ++i) {
    if (detail::kBuiltinPrompts[i].first == name) return detail::kBuiltinPrompts[i].second;
  }
  return std::nullopt;
}

std::vector<std::string_view> builtin_prompt_names() {
  std::vector<std::string_view> names;
  for (std::size_t i = 0; i < detail::kBuiltinPromptCount; ++i) names.push_back(detail::kBuiltinPrompts[i].first);
  return names;
}

std::string_view rubric_criterion(Rubric rubric, JudgeDimension dimension) {
  std::string name = "rubric_" + std::string(to_string(rubric)) + "_" + std::string(to_string(dimension));
  auto text = builtin_prompt(name);
  if (!text) throw Error(ErrorCode::ConfigError, "missing prompt asset " + name);
  return *text;
}

}  // namespace posterkit
