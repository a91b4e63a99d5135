#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace posterkit {

struct Group {
  std::string group_id;
  std::vector<int> children;  // layer ids, bottom to top when stacked
  std::string theme;

  friend bool operator==(const Group&, const Group&) = default;
};

struct ImagePrompt {
  int layer_id = 0;
  std::string layer_prompt;

  friend bool operator==(const ImagePrompt&, const ImagePrompt&) = default;
};

enum class TextAlign { Left, Center, Right };

std::string_view to_string(TextAlign a);

/// One "TextElement" entry of the planner's text specification.
struct TextSpec {
  int layer_id = 0;
  double width = 0.0;
  double height = 0.0;
  double opacity = 1.0;
  std::string text;
  std::string font;
  double font_size = 0.0;
  TextAlign text_align = TextAlign::Left;
  double angle = 0.0;
  bool capitalize = false;
  double line_height = 1.0;
  double letter_spacing = 0.0;

  friend bool operator==(const TextSpec&, const TextSpec&) = default;
};

struct SemanticPlan {
  std::string layout_thought;
  std::vector<Group> groups;
  std::vector<ImagePrompt> image_prompts;
  std::vector<TextSpec> text_specs;

  friend bool operator==(const SemanticPlan&, const SemanticPlan&) = default;
};

void to_json(nlohmann::json& j, const Group& g);
void from_json(const nlohmann::json& j, Group& g);
void to_json(nlohmann::json& j, const ImagePrompt& p);
void from_json(const nlohmann::json& j, ImagePrompt& p);
void to_json(nlohmann::json& j, const TextSpec& t);
void from_json(const nlohmann::json& j, TextSpec& t);
void to_json(nlohmann::json& j, const SemanticPlan& p);
void from_json(const nlohmann::json& j, SemanticPlan& p);

}  // namespace posterkit
