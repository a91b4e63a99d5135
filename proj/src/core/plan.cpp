#include "posterkit/plan.hpp"

#include "posterkit/detail/json_util.hpp"
#include "posterkit/error.hpp"

namespace posterkit {

using nlohmann::json;

std::string_view to_string(TextAlign a) {
  switch (a) {
    case TextAlign::Left: return "left";
    case TextAlign::Center: return "center";
    case TextAlign::Right: return "right";
  }
  return "left";
}

void to_json(json& j, const Group& g) {
  j = json{{"group_id", g.group_id}, {"children", g.children}, {"theme", g.theme}};
}

void from_json(const json& j, Group& g) {
  constexpr std::string_view ctx = "group";
  if (!j.is_object()) throw Error(ErrorCode::SchemaMismatch, "group: expected an object");
  g.group_id = detail::string_field(j, "group_id", ctx);
  g.theme = detail::string_field(j, "theme", ctx);
  g.children.clear();
  for (const auto& c : detail::array_field(j, "children", ctx)) {
    if (!c.is_number_integer()) {
      throw Error(ErrorCode::SchemaMismatch, "group \"" + g.group_id + "\": children must be integers");
    }
    g.children.push_back(c.get<int>());
  }
}

void to_json(json& j, const ImagePrompt& p) {
  j = json{{"layer_id", p.layer_id}, {"layer_prompt", p.layer_prompt}};
}

void from_json(const json& j, ImagePrompt& p) {
  constexpr std::string_view ctx = "image prompt";
  if (!j.is_object()) throw Error(ErrorCode::SchemaMismatch, "image prompt: expected an object");
  p.layer_id = static_cast<int>(detail::integer_field(j, "layer_id", ctx));
  p.layer_prompt = detail::string_field(j, "layer_prompt", ctx);
}

void to_json(json& j, const TextSpec& t) {
  j = json{{"layer_id", t.layer_id},
           {"type", "TextElement"},
           {"width", t.width},
           {"height", t.height},
           {"opacity", t.opacity},
           {"text", t.text},
           {"font", t.font},
           {"font_size", t.font_size},
           {"text_align", to_string(t.text_align)},
           {"angle", t.angle},
           {"capitalize", t.capitalize},
           {"line_height", t.line_height},
           {"letter_spacing", t.letter_spacing}};
}

void from_json(const json& j, TextSpec& t) {
  constexpr std::string_view ctx = "text spec";
  if (!j.is_object()) throw Error(ErrorCode::SchemaMismatch, "text spec: expected an object");
  if (auto it = j.find("type"); it != j.end() && *it != "TextElement") {
    throw Error(ErrorCode::SchemaMismatch, "text spec: type must be \"TextElement\"");
  }
  t.layer_id = static_cast<int>(detail::integer_field(j, "layer_id", ctx));
  t.width = detail::number_field(j, "width", ctx);
  t.height = detail::number_field(j, "height", ctx);
  t.opacity = detail::number_field(j, "opacity", ctx);
  t.text = detail::string_field(j, "text", ctx);
  t.font = detail::string_field(j, "font", ctx);
  t.font_size = detail::number_field(j, "font_size", ctx);
  auto align = detail::string_field(j, "text_align", ctx);
  if (align == "left") {
    t.text_align = TextAlign::Left;
  } else if (align == "center") {
    t.text_align = TextAlign::Center;
  } else if (align == "right") {
    t.text_align = TextAlign::Right;
  } else {
    throw Error(ErrorCode::SchemaMismatch, "text spec: unknown text_align \"" + align + "\"");
  }
  t.angle = detail::number_field(j, "angle", ctx);
  t.capitalize = detail::bool_field(j, "capitalize", ctx);
  t.line_height = detail::number_field(j, "line_height", ctx);
  t.letter_spacing = detail::number_field(j, "letter_spacing", ctx);

  std::string where = "text spec layer " + std::to_string(t.layer_id);
  if (!(t.width > 0 && t.height > 0 && t.font_size > 0)) {
    throw Error(ErrorCode::SchemaMismatch, where + ": width, height and font_size must be > 0");
  }
  if (!(t.opacity >= 0.0 && t.opacity <= 1.0)) {
    throw Error(ErrorCode::SchemaMismatch, where + ": opacity must lie in [0,1]");
  }
  if (!(t.line_height > 0)) {
    throw Error(ErrorCode::SchemaMismatch, where + ": line_height must be > 0");
  }
}

void to_json(json& j, const SemanticPlan& p) {
  j = json{{"layout_thought", p.layout_thought},
           {"groups", p.groups},
           {"image_prompts", p.image_prompts},
           {"text_specs", p.text_specs}};
}

void from_json(const json& j, SemanticPlan& p) {
  detail::expect_object(j, {"layout_thought", "groups", "image_prompts", "text_specs"}, {}, "plan");
  p.layout_thought = detail::string_field(j, "layout_thought", "plan");
  p.groups = j.at("groups").get<std::vector<Group>>();
  p.image_prompts = j.at("image_prompts").get<std::vector<ImagePrompt>>();
  p.text_specs = j.at("text_specs").get<std::vector<TextSpec>>();
}

}  // namespace posterkit
