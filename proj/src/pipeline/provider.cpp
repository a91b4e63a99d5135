#include "posterkit/provider.hpp"

#include "posterkit/detail/json_util.hpp"
#include "posterkit/error.hpp"

namespace posterkit {

using nlohmann::json;

MessagePart MessagePart::text_part(std::string text, std::string name) {
  MessagePart p;
  p.kind = Kind::Text;
  p.text = std::move(text);
  p.name = std::move(name);
  return p;
}

MessagePart MessagePart::image_part(std::filesystem::path image, std::string name) {
  MessagePart p;
  p.kind = Kind::Image;
  p.image = std::move(image);
  p.name = std::move(name);
  return p;
}

void to_json(json& j, const MessagePart& p) {
  if (p.kind == MessagePart::Kind::Text) {
    j = json{{"type", "text"}, {"text", p.text}};
  } else {
    j = json{{"type", "image"}, {"image", p.image.generic_string()}};
  }
  if (!p.name.empty()) j["name"] = p.name;
}

void from_json(const json& j, MessagePart& p) {
  constexpr std::string_view ctx = "message part";
  auto type = detail::string_field(j, "type", ctx);
  p.name = j.contains("name") ? detail::string_field(j, "name", ctx) : std::string();
  if (type == "text") {
    detail::expect_object(j, {"type", "text"}, {"name"}, ctx);
    p.kind = MessagePart::Kind::Text;
    p.text = detail::string_field(j, "text", ctx);
    p.image.clear();
  } else if (type == "image") {
    detail::expect_object(j, {"type", "image"}, {"name"}, ctx);
    p.kind = MessagePart::Kind::Image;
    p.image = detail::string_field(j, "image", ctx);
    p.text.clear();
  } else {
    throw Error(ErrorCode::SchemaMismatch, "message part: unknown type \"" + type + "\"");
  }
}

void to_json(json& j, const Message& m) { j = json{{"role", m.role}, {"parts", m.parts}}; }

void from_json(const json& j, Message& m) {
  detail::expect_object(j, {"role", "parts"}, {}, "message");
  m.role = detail::string_field(j, "role", "message");
  m.parts = detail::array_field(j, "parts", "message").get<std::vector<MessagePart>>();
}

void to_json(json& j, const ProviderRequest& r) {
  j = json{{"role", r.role}, {"messages", r.messages}, {"params", r.params}};
}

void from_json(const json& j, ProviderRequest& r) {
  detail::expect_object(j, {"role", "messages"}, {"params"}, "request");
  r.role = detail::string_field(j, "role", "request");
  r.messages = detail::array_field(j, "messages", "request").get<std::vector<Message>>();
  r.params = j.value("params", json::object());
}

void to_json(json& j, const ProviderResponse& r) {
  json images = json::array();
  for (const auto& p : r.images) images.push_back(p.generic_string());
  j = json{{"text", r.text}, {"images", images}};
}

void from_json(const json& j, ProviderResponse& r) {
  detail::expect_object(j, {"text"}, {"images"}, "response");
  r.text = detail::string_field(j, "text", "response");
  r.images.clear();
  if (j.contains("images")) {
    for (const auto& p : detail::array_field(j, "images", "response")) {
      if (!p.is_string()) throw Error(ErrorCode::SchemaMismatch, "response: image paths must be strings");
      r.images.emplace_back(p.get<std::string>());
    }
  }
}

}  // namespace posterkit
