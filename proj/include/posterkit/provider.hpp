#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace posterkit {

struct MessagePart {
  enum class Kind { Text, Image };
  Kind kind = Kind::Text;
  std::string text;             // Kind::Text
  std::filesystem::path image;  // Kind::Image, a PNG on disk
  std::string name;             // optional label, e.g. "html" or "render"

  static MessagePart text_part(std::string text, std::string name = {});
  static MessagePart image_part(std::filesystem::path image, std::string name = {});

  friend bool operator==(const MessagePart&, const MessagePart&) = default;
};

struct Message {
  std::string role;  // "system" | "user" | "assistant"
  std::vector<MessagePart> parts;

  friend bool operator==(const Message&, const Message&) = default;
};

/// One call to a model backend. `role` names the pipeline role issuing it
/// (planner, composer, refiner, editor, judge, generator, layer_judge).
struct ProviderRequest {
  std::string role;
  std::vector<Message> messages;
  nlohmann::json params = nlohmann::json::object();

  friend bool operator==(const ProviderRequest&, const ProviderRequest&) = default;
};

struct ProviderResponse {
  std::string text;
  std::vector<std::filesystem::path> images;

  friend bool operator==(const ProviderResponse&, const ProviderResponse&) = default;
};

void to_json(nlohmann::json& j, const MessagePart& p);
void from_json(const nlohmann::json& j, MessagePart& p);
void to_json(nlohmann::json& j, const Message& m);
void from_json(const nlohmann::json& j, Message& m);
void to_json(nlohmann::json& j, const ProviderRequest& r);
void from_json(const nlohmann::json& j, ProviderRequest& r);
void to_json(nlohmann::json& j, const ProviderResponse& r);
void from_json(const nlohmann::json& j, ProviderResponse& r);

/// Uniform contract for every model role. Implementations throw
/// Error{BackendError} on transport or protocol failure.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual ProviderResponse complete(const ProviderRequest& request) = 0;
};

/// Maps prompt text into the asset index's embedding space.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> embed(std::string_view text) = 0;
};

}  // namespace posterkit
