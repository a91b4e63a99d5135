#include <httplib.h>

#include "posterkit/backends.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <cstdio>
#include <regex>

#include "posterkit/detail/json_util.hpp"
#include "posterkit/digest.hpp"
#include "posterkit/error.hpp"

namespace posterkit {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  std::string clean;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) clean.push_back(c);
  }
  if (clean.size() % 4 != 0) throw Error(ErrorCode::BackendError, "malformed base64 payload");
  std::string out(3 * clean.size() / 4, '\0');
  int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(clean.data()), static_cast<int>(clean.size()));
  if (n < 0) throw Error(ErrorCode::BackendError, "malformed base64 payload");
  std::size_t padding = 0;
  if (!clean.empty() && clean.back() == '=') ++padding;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_relative() ? base / p : p; }

ProviderResponse load_canned(const fs::path& file) {
  auto ext = file.extension().string();
  ProviderResponse r;
  if (ext == ".txt") {
    r.text = read_file(file);
  } else if (ext == ".png") {
    r.images.push_back(file);
  } else {
    try {
      r = json::parse(read_file(file)).get<ProviderResponse>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigError, file.string() + ": " + e.what());
    }
    for (auto& image : r.images) image = resolve(file.parent_path(), image);
  }
  return r;
}

}  // namespace

ReplayBackend::ReplayBackend(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::ConfigError, "replay directory " + dir.string() + " not found");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    auto ext = entry.path().extension().string();
    if (entry.is_regular_file() && (ext == ".txt" || ext == ".png" || ext == ".json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::ConfigError, "replay directory " + dir.string() + " is empty");
  for (const auto& f : files) responses_.push_back(load_canned(f));
}

ProviderResponse ReplayBackend::complete(const ProviderRequest&) {
  std::lock_guard lock(mutex_);
  auto i = std::min(next_, responses_.size() - 1);
  ++next_;
  return responses_[i];
}

std::size_t ReplayBackend::calls() const {
  std::lock_guard lock(mutex_);
  return next_;
}

ProviderResponse EchoBackend::complete(const ProviderRequest& request) {
  ProviderResponse r;
  const MessagePart* last_text = nullptr;
  const MessagePart* html = nullptr;
  for (const auto& m : request.messages) {
    for (const auto& p : m.parts) {
      if (p.kind == MessagePart::Kind::Text) {
        if (m.role != "system") last_text = &p;
        if (p.name == "html") html = &p;
      } else if (r.images.empty()) {
        r.images.push_back(p.image);
      }
    }
  }
  if (html) {
    r.text = html->text;
  } else if (last_text) {
    r.text = last_text->text;
  }
  return r;
}

namespace {

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

UrlParts split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw Error(ErrorCode::ConfigError, "bad base_url \"" + url + "\"");
  std::string prefix = m[2].matched ? m[2].str() : "";
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {m[1].str(), prefix};
}

httplib::Headers auth_headers(const HttpBackendOptions& o) {
  httplib::Headers headers;
  if (!o.api_key_env.empty()) {
    const char* token = std::getenv(o.api_key_env.c_str());
    if (!token || !*token) {
      throw Error(ErrorCode::ConfigError, "environment variable " + o.api_key_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  return headers;
}

httplib::Client make_client(const HttpBackendOptions& o, const UrlParts& url) {
  httplib::Client client(url.origin);
  auto seconds = o.timeout_ms / 1000;
  auto micros = (o.timeout_ms % 1000) * 1000;
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
  client.set_connection_timeout(seconds, micros);
  return client;
}

json checked_json(const httplib::Result& res, const std::string& what) {
  if (!res) throw Error(ErrorCode::BackendError, what + ": " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::BackendError, what + ": HTTP " + std::to_string(res->status),
                json{{"status", res->status}, {"body", res->body.substr(0, 2000)}});
  }
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BackendError, what + ": response is not JSON: " + e.what());
  }
}

void merge(json& payload, const json& extra) {
  if (!extra.is_object()) return;
  for (const auto& [k, v] : extra.items()) payload[k] = v;
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
  split_url(options_.base_url);
}

json HttpBackend::chat_payload(const ProviderRequest& request) const {
  json messages = json::array();
  for (const auto& m : request.messages) {
    json content = json::array();
    for (const auto& p : m.parts) {
      if (p.kind == MessagePart::Kind::Text) {
        content.push_back({{"type", "text"}, {"text", p.text}});
      } else {
        auto url = "data:image/png;base64," + base64_encode(read_file(p.image));
        content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
      }
    }
    if (m.role == "system") {
      std::string joined;
      for (const auto& c : content) {
        if (c["type"] == "text") joined += (joined.empty() ? "" : "\n\n") + c["text"].get<std::string>();
      }
      messages.push_back({{"role", m.role}, {"content", joined}});
    } else {
      messages.push_back({{"role", m.role}, {"content", content}});
    }
  }
  json payload{{"model", options_.model}, {"messages", messages}};
  merge(payload, options_.params);
  merge(payload, request.params);
  return payload;
}

ProviderResponse HttpBackend::complete(const ProviderRequest& request) {
  auto url = split_url(options_.base_url);
  auto client = make_client(options_, url);
  auto headers = auth_headers(options_);
  ProviderResponse response;

  if (options_.api == HttpBackendOptions::Api::Chat) {
    auto body = checked_json(
        client.Post(url.prefix + "/chat/completions", headers, chat_payload(request).dump(), "application/json"),
        "chat completion");
    try {
      const auto& content = body.at("choices").at(0).at("message").at("content");
      if (content.is_string()) {
        response.text = content.get<std::string>();
      } else {
        for (const auto& c : content) {
          if (c.value("type", "") == "text") response.text += c.value("text", "");
        }
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::BackendError, std::string("unexpected chat completion shape: ") + e.what());
    }
    return response;
  }

  std::string prompt;
  std::vector<fs::path> images;
  for (const auto& m : request.messages) {
    for (const auto& p : m.parts) {
      if (p.kind == MessagePart::Kind::Text) {
        prompt += (prompt.empty() ? "" : "\n\n") + p.text;
      } else {
        images.push_back(p.image);
      }
    }
  }
  httplib::Result res;
  if (images.empty()) {
    json payload{{"model", options_.model}, {"prompt", prompt}, {"n", 1}};
    merge(payload, options_.params);
    merge(payload, request.params);
    res = client.Post(url.prefix + "/images/generations", headers, payload.dump(), "application/json");
  } else {
    httplib::MultipartFormDataItems items{{"model", options_.model, "", ""}, {"prompt", prompt, "", ""}};
    for (const auto& image : images) {
      items.push_back({images.size() == 1 ? "image" : "image[]", read_file(image), image.filename().string(),
                       "image/png"});
    }
    for (const json* extra : std::initializer_list<const json*>{&options_.params, &request.params}) {
      for (const auto& [k, v] : extra->items()) {
        items.push_back({k, v.is_string() ? v.template get<std::string>() : v.dump(), "", ""});
      }
    }
    res = client.Post(url.prefix + "/images/edits", headers, items);
  }
  auto body = checked_json(res, "image request");
  std::string b64;
  try {
    b64 = body.at("data").at(0).at("b64_json").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BackendError, std::string("image response carries no b64_json: ") + e.what());
  }
  auto dir = options_.output_dir.empty() ? fs::temp_directory_path() / "posterkit-images" : options_.output_dir;
  std::size_t n;
  {
    std::lock_guard lock(counter_mutex_);
    n = image_counter_++;
  }
  auto path = dir / (sha256_hex(b64).substr(0, 16) + "-" + std::to_string(n) + ".png");
  write_file(path, base64_decode(b64));
  response.images.push_back(path);
  return response;
}

LimitedBackend::LimitedBackend(std::shared_ptr<ModelBackend> inner, std::size_t limit)
    : inner_(std::move(inner)), limit_(std::max<std::size_t>(limit, 1)) {}

ProviderResponse LimitedBackend::complete(const ProviderRequest& request) {
  {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return active_ < limit_; });
    ++active_;
  }
  struct Release {
    LimitedBackend* self;
    ~Release() {
      {
        std::lock_guard lock(self->mutex_);
        --self->active_;
      }
      self->cv_.notify_one();
    }
  } release{this};
  return inner_->complete(request);
}

namespace {

HttpBackendOptions http_options(const json& c, const fs::path& base_dir) {
  HttpBackendOptions o;
  o.base_url = detail::string_field(c, "base_url", "http backend", ErrorCode::ConfigError);
  o.model = detail::string_field(c, "model", "http backend", ErrorCode::ConfigError);
  o.api_key_env = c.value("api_key_env", "");
  o.params = c.value("params", json::object());
  o.timeout_ms = c.value("timeout_ms", 120000);
  auto api = c.value("api", "chat");
  if (api == "chat") {
    o.api = HttpBackendOptions::Api::Chat;
  } else if (api == "images") {
    o.api = HttpBackendOptions::Api::Images;
  } else {
    throw Error(ErrorCode::ConfigError, "http backend: unknown api \"" + api + "\"");
  }
  if (c.contains("output_dir")) o.output_dir = resolve(base_dir, c["output_dir"].get<std::string>());
  return o;
}

}  // namespace

std::shared_ptr<ModelBackend> make_backend(const json& config, const fs::path& base_dir) {
  if (!config.is_object()) throw Error(ErrorCode::ConfigError, "backend config must be an object");
  auto type = detail::string_field(config, "type", "backend", ErrorCode::ConfigError);
  std::shared_ptr<ModelBackend> backend;
  try {
    if (type == "replay") {
      backend = std::make_shared<ReplayBackend>(
          resolve(base_dir, detail::string_field(config, "dir", "replay backend", ErrorCode::ConfigError)));
    } else if (type == "echo") {
      backend = std::make_shared<EchoBackend>();
    } else if (type == "fixed") {
      ProviderResponse r;
      r.text = config.value("text", "");
      for (const auto& image : config.value("images", json::array())) {
        r.images.push_back(resolve(base_dir, image.get<std::string>()));
      }
      backend = std::make_shared<FixedBackend>(std::move(r));
    } else if (type == "http") {
      backend = std::make_shared<HttpBackend>(http_options(config, base_dir));
    } else {
      throw Error(ErrorCode::ConfigError, "unknown backend type \"" + type + "\"");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, "backend \"" + type + "\": " + e.what());
  }
  if (auto limit = config.value("max_concurrency", 0); limit > 0) {
    backend = std::make_shared<LimitedBackend>(backend, static_cast<std::size_t>(limit));
  }
  return backend;
}

std::vector<double> HashEmbedder::embed(std::string_view text) {
  std::vector<double> v(dimension_, 0.0);
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    auto digest = sha256_hex(token);
    auto h = std::stoull(digest.substr(0, 15), nullptr, 16);
    v[h % dimension_] += (h >> 59) & 1 ? -1.0 : 1.0;
    token.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  double n = 0.0;
  for (double x : v) n += x * x;
  if (n == 0.0) {
    v[0] = 1.0;
    return v;
  }
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

TableEmbedder::TableEmbedder(const fs::path& file) {
  json j;
  try {
    j = json::parse(read_file(file));
    table_ = j.get<std::map<std::string, std::vector<double>, std::less<>>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, file.string() + ": " + e.what());
  }
}

std::vector<double> TableEmbedder::embed(std::string_view text) {
  auto it = table_.find(text);
  if (it == table_.end()) {
    throw Error(ErrorCode::BackendError, "no embedding for prompt \"" + std::string(text.substr(0, 80)) + "\"");
  }
  return it->second;
}

std::vector<double> HttpEmbedder::embed(std::string_view text) {
  auto url = split_url(options_.base_url);
  auto client = make_client(options_, url);
  json payload{{"model", options_.model}, {"input", text}};
  merge(payload, options_.params);
  auto body = checked_json(client.Post(url.prefix + "/embeddings", auth_headers(options_), payload.dump(),
                                       "application/json"),
                           "embedding request");
  try {
    return body.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BackendError, std::string("unexpected embedding response: ") + e.what());
  }
}

std::shared_ptr<Embedder> make_embedder(const json& config, const fs::path& base_dir) {
  if (config.is_null()) return nullptr;
  auto type = detail::string_field(config, "type", "embedder", ErrorCode::ConfigError);
  try {
    if (type == "hash") return std::make_shared<HashEmbedder>(config.value("dimension", 64));
    if (type == "table") {
      return std::make_shared<TableEmbedder>(
          resolve(base_dir, detail::string_field(config, "file", "table embedder", ErrorCode::ConfigError)));
    }
    if (type == "http") return std::make_shared<HttpEmbedder>(http_options(config, base_dir));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, "embedder \"" + type + "\": " + e.what());
  }
  throw Error(ErrorCode::ConfigError, "unknown embedder type \"" + type + "\"");
}

// ---------------------------------------------------------------------------

ExchangeRecorder::ExchangeRecorder(fs::path dir, fs::path job_root, bool replay)
    : dir_(std::move(dir)), job_root_(std::move(job_root)), replay_(replay) {}

namespace {

std::string relative_to(const fs::path& p, const fs::path& root) {
  auto rel = p.lexically_relative(root);
  if (rel.empty() || *rel.begin() == "..") return p.generic_string();
  return rel.generic_string();
}

json persisted_request(const ProviderRequest& request, const fs::path& root) {
  auto copy = request;
  json digests = json::array();
  for (auto& m : copy.messages) {
    for (auto& p : m.parts) {
      if (p.kind != MessagePart::Kind::Image) continue;
      digests.push_back(sha256_hex(read_file(p.image)));
      p.image = relative_to(p.image, root);
    }
  }
  return json{{"request", copy}, {"image_digests", digests}};
}

class RecordedBackend : public ModelBackend {
 public:
  RecordedBackend(ExchangeRecorder& recorder, ModelBackend& inner) : recorder_(recorder), inner_(inner) {}
  ProviderResponse complete(const ProviderRequest& request) override { return recorder_.call(inner_, request); }

 private:
  ExchangeRecorder& recorder_;
  ModelBackend& inner_;
};

std::string sequence_name(std::size_t seq) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", seq);
  return buf;
}

}  // namespace

ProviderResponse ExchangeRecorder::call(ModelBackend& backend, const ProviderRequest& request) {
  std::lock_guard lock(mutex_);
  auto seq = sequence_name(++sequence_);
  auto stem = seq + "-" + (request.role.empty() ? std::string("call") : request.role);
  auto record_path = dir_ / (stem + ".json");
  auto key = persisted_request(request, job_root_);

  if (replay_ && fs::exists(record_path)) {
    try {
      auto record = json::parse(read_file(record_path));
      if (record.at("request") == key.at("request") && record.at("image_digests") == key.at("image_digests")) {
        auto response = record.at("response").get<ProviderResponse>();
        bool files_present = true;
        for (auto& image : response.images) {
          image = resolve(job_root_, image);
          files_present = files_present && fs::exists(image);
        }
        if (files_present) {
          ++replayed_calls_;
          return response;
        }
      }
    } catch (const std::exception&) {
      // unreadable record: fall through to a live call
    }
  }
  if (replay_) {
    // Diverged: records from here on belong to the old run.
    replay_ = false;
    if (fs::is_directory(dir_)) {
      for (const auto& entry : fs::directory_iterator(dir_)) {
        if (entry.path().filename().string().substr(0, 3) >= seq) fs::remove_all(entry.path());
      }
    }
  }

  auto response = backend.complete(request);
  ++live_calls_;
  ProviderResponse stored;
  stored.text = response.text;
  ProviderResponse returned = stored;
  for (std::size_t k = 0; k < response.images.size(); ++k) {
    auto dest = dir_ / (stem + "-" + std::to_string(k) + ".png");
    write_file(dest, read_file(response.images[k]));
    stored.images.push_back(relative_to(dest, job_root_));
    returned.images.push_back(dest);
  }
  key["response"] = stored;
  write_file(record_path, key.dump(2) + "\n");
  return returned;
}

std::unique_ptr<ModelBackend> ExchangeRecorder::wrap(ModelBackend& backend) {
  return std::make_unique<RecordedBackend>(*this, backend);
}

}  // namespace posterkit
