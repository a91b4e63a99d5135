#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "posterkit/report.hpp"

namespace posterkit {

/// Prompt templates compiled into the binary from prompts/*.txt, keyed by
/// file stem ("planner", "composer", "rubric_broad_layout", ...).
std::optional<std::string_view> builtin_prompt(std::string_view name);
std::vector<std::string_view> builtin_prompt_names();

/// Rubric criterion text for one judge dimension.
std::string_view rubric_criterion(Rubric rubric, JudgeDimension dimension);

}  // namespace posterkit
