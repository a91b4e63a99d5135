#pragma once

#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "posterkit/provider.hpp"

namespace posterkit {

/// Serves canned responses from a directory, one file per call in name
/// order: *.txt is reply text, *.png an image reply, *.json a
/// ProviderResponse object. The last file repeats once the sequence ends.
class ReplayBackend : public ModelBackend {
 public:
  explicit ReplayBackend(const std::filesystem::path& dir);
  ProviderResponse complete(const ProviderRequest& request) override;
  std::size_t calls() const;

 private:
  std::vector<ProviderResponse> responses_;
  mutable std::mutex mutex_;
  std::size_t next_ = 0;
};

/// Identity backend: returns the text part named "html" (else the last text
/// part) and the first image of the request.
class EchoBackend : public ModelBackend {
 public:
  ProviderResponse complete(const ProviderRequest& request) override;
};

/// Always returns the same response.
class FixedBackend : public ModelBackend {
 public:
  explicit FixedBackend(ProviderResponse response) : response_(std::move(response)) {}
  ProviderResponse complete(const ProviderRequest&) override { return response_; }

 private:
  ProviderResponse response_;
};

struct HttpBackendOptions {
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string model;
  std::string api_key_env;  // name of the env var holding the bearer token
  enum class Api { Chat, Images } api = Api::Chat;
  nlohmann::json params = nlohmann::json::object();  // merged into every payload
  int timeout_ms = 120000;
  std::filesystem::path output_dir;  // where returned images are written
};

/// OpenAI-compatible adapter. Chat: POST {base}/chat/completions with
/// images inlined as base64 data URLs. Images: POST {base}/images/generations
/// (or /images/edits when the request carries images), reading b64_json.
class HttpBackend : public ModelBackend {
 public:
  explicit HttpBackend(HttpBackendOptions options);
  ProviderResponse complete(const ProviderRequest& request) override;

  /// The chat payload a request maps to (exposed for tests and dry runs).
  nlohmann::json chat_payload(const ProviderRequest& request) const;

 private:
  HttpBackendOptions options_;
  std::mutex counter_mutex_;
  std::size_t image_counter_ = 0;
};

/// Caps concurrent calls into a backend that cannot take parallel requests.
class LimitedBackend : public ModelBackend {
 public:
  LimitedBackend(std::shared_ptr<ModelBackend> inner, std::size_t limit);
  ProviderResponse complete(const ProviderRequest& request) override;

 private:
  std::shared_ptr<ModelBackend> inner_;
  std::size_t limit_;
  std::size_t active_ = 0;
  std::mutex mutex_;
  std::condition_variable cv_;
};

/// Builds a backend from its config object: {"type": "replay"|"echo"|
/// "fixed"|"http", ...}. Relative paths resolve against `base_dir`.
std::shared_ptr<ModelBackend> make_backend(const nlohmann::json& config,
                                           const std::filesystem::path& base_dir);

/// Deterministic bag-of-words embedding (hashed tokens, unit norm). Good
/// enough for offline demos and tests; not semantically meaningful.
class HashEmbedder : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dimension) : dimension_(dimension) {}
  std::vector<double> embed(std::string_view text) override;

 private:
  std::size_t dimension_;
};

/// Looks prompts up in a JSON object {prompt: [numbers]}.
class TableEmbedder : public Embedder {
 public:
  explicit TableEmbedder(const std::filesystem::path& file);
  std::vector<double> embed(std::string_view text) override;

 private:
  std::map<std::string, std::vector<double>, std::less<>> table_;
};

/// OpenAI-compatible POST {base}/embeddings.
class HttpEmbedder : public Embedder {
 public:
  explicit HttpEmbedder(HttpBackendOptions options) : options_(std::move(options)) {}
  std::vector<double> embed(std::string_view text) override;

 private:
  HttpBackendOptions options_;
};

std::shared_ptr<Embedder> make_embedder(const nlohmann::json& config, const std::filesystem::path& base_dir);

/// Persists every exchange under `dir` as NNN-<role>.json (request,
/// response, image digests), copying reply images next to it. With replay
/// enabled, an existing record whose request matches is returned instead of
/// calling the backend; the first mismatch disables replay for the rest of
/// the directory.
class ExchangeRecorder {
 public:
  ExchangeRecorder(std::filesystem::path dir, std::filesystem::path job_root, bool replay);

  ProviderResponse call(ModelBackend& backend, const ProviderRequest& request);
  /// A backend view that routes through call().
  std::unique_ptr<ModelBackend> wrap(ModelBackend& backend);

  std::size_t live_calls() const { return live_calls_; }
  std::size_t replayed_calls() const { return replayed_calls_; }

 private:
  std::filesystem::path dir_;
  std::filesystem::path job_root_;
  bool replay_;
  std::size_t sequence_ = 0;
  std::size_t live_calls_ = 0;
  std::size_t replayed_calls_ = 0;
  std::mutex mutex_;
};

}  // namespace posterkit
