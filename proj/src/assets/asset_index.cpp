#include "posterkit/asset_index.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>

#include "posterkit/detail/json_util.hpp"
#include "posterkit/digest.hpp"
#include "posterkit/error.hpp"

namespace posterkit {

using nlohmann::json;

void to_json(json& j, const AssetRecord& r) {
  j = json{{"asset_id", r.asset_id}, {"prompt", r.prompt}, {"embedding", r.embedding}, {"uri", r.uri}};
}

void from_json(const json& j, AssetRecord& r) {
  constexpr std::string_view ctx = "asset record";
  detail::expect_object(j, {"asset_id", "prompt", "embedding", "uri"}, {}, ctx);
  r.asset_id = detail::string_field(j, "asset_id", ctx);
  r.prompt = detail::string_field(j, "prompt", ctx);
  r.uri = detail::string_field(j, "uri", ctx);
  r.embedding.clear();
  for (const auto& x : detail::array_field(j, "embedding", ctx)) {
    if (!x.is_number()) {
      throw Error(ErrorCode::SchemaMismatch, "asset \"" + r.asset_id + "\": embedding entries must be numbers");
    }
    r.embedding.push_back(x.get<double>());
  }
}

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

AssetIndex::AssetIndex(std::vector<AssetRecord> records) : records_(std::move(records)) {
  if (records_.empty()) return;
  dimension_ = records_.front().embedding.size();
  if (dimension_ == 0) throw Error(ErrorCode::DimensionMismatch, "embeddings must not be empty");
  std::set<std::string> seen;
  unit_.reserve(records_.size() * dimension_);
  for (const auto& r : records_) {
    if (!seen.insert(r.asset_id).second) {
      throw Error(ErrorCode::DuplicateAssetId, "asset id \"" + r.asset_id + "\" appears twice",
                  json{{"asset_id", r.asset_id}});
    }
    if (r.embedding.size() != dimension_) {
      throw Error(ErrorCode::DimensionMismatch,
                  "asset \"" + r.asset_id + "\" has dimension " + std::to_string(r.embedding.size()) +
                      ", index has " + std::to_string(dimension_),
                  json{{"asset_id", r.asset_id}});
    }
    double n = norm(r.embedding);
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw Error(ErrorCode::ZeroVector, "asset \"" + r.asset_id + "\" has a zero or non-finite embedding",
                  json{{"asset_id", r.asset_id}});
    }
    for (double x : r.embedding) unit_.push_back(x / n);
  }
}

std::span<const double> AssetIndex::normalized(std::size_t record) const {
  return std::span<const double>(unit_).subspan(record * dimension_, dimension_);
}

std::vector<QueryHit> AssetIndex::query(std::span<const double> embedding, std::size_t k) const {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (empty()) return {};
  if (embedding.size() != dimension_) {
    throw Error(ErrorCode::DimensionMismatch, "query has dimension " + std::to_string(embedding.size()) +
                                                  ", index has " + std::to_string(dimension_));
  }
  double n = norm(embedding);
  if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorCode::ZeroVector, "query embedding has zero norm");

  std::vector<QueryHit> hits;
  hits.reserve(records_.size());
  for (std::size_t r = 0; r < records_.size(); ++r) {
    auto row = normalized(r);
    double dot = 0.0;
    for (std::size_t i = 0; i < dimension_; ++i) dot += row[i] * (embedding[i] / n);
    hits.push_back({records_[r].asset_id, std::clamp(dot, -1.0, 1.0), r});
  }
  auto better = [](const QueryHit& a, const QueryHit& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.asset_id < b.asset_id;
  };
  k = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), better);
  hits.resize(k);
  return hits;
}

AssetIndex build_index(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorCode::IoError, "cannot open manifest " + manifest.string());
  auto base = manifest.parent_path();
  std::vector<AssetRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    AssetRecord r;
    try {
      r = json::parse(line).get<AssetRecord>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaMismatch,
                  manifest.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), manifest.string() + ":" + std::to_string(line_no) + ": " + e.message());
    }
    std::filesystem::path uri(r.uri);
    if (r.uri.find("://") == std::string::npos && uri.is_relative()) {
      r.uri = (base / uri).lexically_normal().generic_string();
    }
    records.push_back(std::move(r));
  }
  return AssetIndex(std::move(records));
}

std::string_view to_string(AssetPolicy p) {
  switch (p) {
    case AssetPolicy::RetrievalOnly: return "retrieval_only";
    case AssetPolicy::GenerationOnly: return "generation_only";
    case AssetPolicy::Hybrid: return "hybrid";
  }
  return "hybrid";
}

AssetPolicy asset_policy_from_string(std::string_view s) {
  if (s == "retrieval_only") return AssetPolicy::RetrievalOnly;
  if (s == "generation_only") return AssetPolicy::GenerationOnly;
  if (s == "hybrid") return AssetPolicy::Hybrid;
  throw Error(ErrorCode::ConfigError, "unknown asset policy \"" + std::string(s) + "\"");
}

std::string_view to_string(Provenance p) { return p == Provenance::Generated ? "generated" : "retrieved"; }

void to_json(json& j, const AssetBinding& b) {
  j = json{{"layer_id", b.layer_id},
           {"uri", b.uri},
           {"provenance", to_string(b.provenance)},
           {"asset_id", b.asset_id}};
}

void from_json(const json& j, AssetBinding& b) {
  constexpr std::string_view ctx = "asset binding";
  detail::expect_object(j, {"layer_id", "uri", "provenance", "asset_id"}, {}, ctx);
  b.layer_id = static_cast<int>(detail::integer_field(j, "layer_id", ctx));
  b.uri = detail::string_field(j, "uri", ctx);
  b.asset_id = detail::string_field(j, "asset_id", ctx);
  auto p = detail::string_field(j, "provenance", ctx);
  if (p == "retrieved") {
    b.provenance = Provenance::Retrieved;
  } else if (p == "generated") {
    b.provenance = Provenance::Generated;
  } else {
    throw Error(ErrorCode::SchemaMismatch, "asset binding: unknown provenance \"" + p + "\"");
  }
}

bool parse_layer_verdict(std::string_view reply) {
  std::size_t i = 0;
  while (i < reply.size() && !std::isalpha(static_cast<unsigned char>(reply[i]))) ++i;
  std::string word;
  while (i < reply.size() && std::isalpha(static_cast<unsigned char>(reply[i]))) {
    word.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(reply[i++]))));
  }
  if (word == "ACCEPT" || word == "YES") return true;
  if (word == "REJECT" || word == "NO") return false;
  throw Error(ErrorCode::BackendError, "layer judge reply has no ACCEPT/REJECT verdict",
              json{{"reply", std::string(reply.substr(0, 200))}});
}

namespace {

// Regenerated assets are written in place; writers of one uri take turns.
std::mutex& uri_mutex(const std::filesystem::path& uri) {
  static std::mutex registry_mutex;
  static std::map<std::string, std::unique_ptr<std::mutex>> registry;
  auto key = std::filesystem::weakly_canonical(uri).string();
  std::lock_guard lock(registry_mutex);
  auto& m = registry[key];
  if (!m) m = std::make_unique<std::mutex>();
  return *m;
}

template <typename F>
auto for_layer(int layer_id, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    auto details = e.details().is_object() ? e.details() : json::object();
    details["layer_id"] = layer_id;
    throw Error(ErrorCode::BackendError, "layer " + std::to_string(layer_id) + ": " + e.message(), details);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::BackendError, "layer " + std::to_string(layer_id) + ": " + e.what(),
                json{{"layer_id", layer_id}});
  }
}

void generate_into(ModelBackend& generator, const ImagePrompt& prompt, const std::filesystem::path& uri) {
  ProviderRequest request;
  request.role = "generator";
  request.messages.push_back({"user", {MessagePart::text_part(prompt.layer_prompt, "layer_prompt")}});
  auto response = for_layer(prompt.layer_id, [&] { return generator.complete(request); });
  if (response.images.empty()) {
    throw Error(ErrorCode::BackendError,
                "layer " + std::to_string(prompt.layer_id) + ": generator returned no image",
                json{{"layer_id", prompt.layer_id}});
  }
  auto bytes = for_layer(prompt.layer_id, [&] { return read_file(response.images.front()); });
  std::lock_guard lock(uri_mutex(uri));
  write_file(uri, bytes);
}

bool judge_accepts(ModelBackend& judge, const std::string& system_prompt, const ImagePrompt& prompt,
                   const AssetRecord& candidate, const std::filesystem::path& file) {
  ProviderRequest request;
  request.role = "layer_judge";
  if (!system_prompt.empty()) request.messages.push_back({"system", {MessagePart::text_part(system_prompt)}});
  request.messages.push_back(
      {"user",
       {MessagePart::text_part("Requested layer prompt:\n" + prompt.layer_prompt, "layer_prompt"),
        MessagePart::text_part("Retrieved asset prompt:\n" + candidate.prompt, "asset_prompt"),
        MessagePart::image_part(file, "asset")}});
  return for_layer(prompt.layer_id, [&] { return parse_layer_verdict(judge.complete(request).text); });
}

std::filesystem::path layer_path(const std::filesystem::path& dir, int layer_id, const std::string& source_uri) {
  auto ext = std::filesystem::path(source_uri).extension().string();
  if (ext.empty()) ext = ".png";
  return dir / ("layer-" + std::to_string(layer_id) + ext);
}

}  // namespace

std::vector<AssetBinding> retrieve_or_generate(const std::vector<ImagePrompt>& prompts,
                                               const AssetIndex& index,
                                               const RetrieveOptions& options,
                                               const RetrieveBackends& backends) {
  const bool retrieve = options.policy != AssetPolicy::GenerationOnly;
  const bool generate = options.policy != AssetPolicy::RetrievalOnly;
  if (retrieve && !backends.embedder) throw Error(ErrorCode::ConfigError, "retrieval needs an embedder");
  if (generate && !backends.generator) throw Error(ErrorCode::ConfigError, "generation needs a generator backend");
  if (options.policy == AssetPolicy::Hybrid && !backends.layer_judge) {
    throw Error(ErrorCode::ConfigError, "hybrid asset policy needs a layer judge backend");
  }
  if (options.policy == AssetPolicy::RetrievalOnly && index.empty() && !prompts.empty()) {
    throw Error(ErrorCode::EmptyIndex, "retrieval_only policy with an empty asset index");
  }
  if (options.top_k == 0) throw Error(ErrorCode::InvalidArgument, "top_k must be at least 1");

  std::vector<AssetBinding> bindings;
  for (const auto& prompt : prompts) {
    AssetBinding binding;
    binding.layer_id = prompt.layer_id;

    if (!retrieve || index.empty()) {
      if (options.asset_dir.empty()) {
        throw Error(ErrorCode::ConfigError, "generated assets need an asset directory");
      }
      auto uri = layer_path(options.asset_dir, prompt.layer_id, ".png");
      generate_into(*backends.generator, prompt, uri);
      binding.uri = uri.generic_string();
      binding.provenance = Provenance::Generated;
      bindings.push_back(std::move(binding));
      continue;
    }

    auto embedding = for_layer(prompt.layer_id, [&] { return backends.embedder->embed(prompt.layer_prompt); });
    auto hits = index.query(embedding, options.top_k);
    const AssetRecord* chosen = &index.records()[hits.front().record];
    bool accepted = true;
    if (options.policy == AssetPolicy::Hybrid) {
      accepted = false;
      for (const auto& hit : hits) {
        const auto& candidate = index.records()[hit.record];
        if (judge_accepts(*backends.layer_judge, options.layer_judge_prompt, prompt, candidate, candidate.uri)) {
          chosen = &candidate;
          accepted = true;
          break;
        }
      }
    }

    std::filesystem::path uri = chosen->uri;
    if (!options.asset_dir.empty()) {
      uri = layer_path(options.asset_dir, prompt.layer_id, chosen->uri);
      auto bytes = for_layer(prompt.layer_id, [&] { return read_file(chosen->uri); });
      std::lock_guard lock(uri_mutex(uri));
      write_file(uri, bytes);
    }
    binding.uri = uri.generic_string();
    binding.asset_id = chosen->asset_id;
    if (!accepted) {
      generate_into(*backends.generator, prompt, uri);
      binding.provenance = Provenance::Generated;
    }
    bindings.push_back(std::move(binding));
  }
  return bindings;
}

}  // namespace posterkit
