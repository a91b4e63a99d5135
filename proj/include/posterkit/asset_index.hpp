#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "posterkit/plan.hpp"
#include "posterkit/provider.hpp"

namespace posterkit {

struct AssetRecord {
  std::string asset_id;
  std::string prompt;
  std::vector<double> embedding;
  std::string uri;

  friend bool operator==(const AssetRecord&, const AssetRecord&) = default;
};

void to_json(nlohmann::json& j, const AssetRecord& r);
void from_json(const nlohmann::json& j, AssetRecord& r);

struct QueryHit {
  std::string asset_id;
  double similarity = 0.0;
  std::size_t record = 0;  // position in AssetIndex::records()
};

/// Exact cosine-similarity index over prompt embeddings. Immutable once
/// built, so concurrent queries are safe.
class AssetIndex {
 public:
  AssetIndex() = default;
  /// Throws DimensionMismatch, DuplicateAssetId or ZeroVector.
  explicit AssetIndex(std::vector<AssetRecord> records);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<AssetRecord>& records() const { return records_; }
  std::span<const double> normalized(std::size_t record) const;

  /// Top-k by cosine similarity, descending, ties by ascending asset_id.
  std::vector<QueryHit> query(std::span<const double> embedding, std::size_t k) const;

 private:
  std::size_t dimension_ = 0;
  std::vector<AssetRecord> records_;
  std::vector<double> unit_;  // row-major, dimension_ per record
};

/// Reads a JSON-lines manifest. Relative uris are resolved against the
/// manifest's directory.
AssetIndex build_index(const std::filesystem::path& manifest);

enum class AssetPolicy { RetrievalOnly, GenerationOnly, Hybrid };

std::string_view to_string(AssetPolicy p);
AssetPolicy asset_policy_from_string(std::string_view s);

enum class Provenance { Retrieved, Generated };

std::string_view to_string(Provenance p);

struct AssetBinding {
  int layer_id = 0;
  std::string uri;
  Provenance provenance = Provenance::Retrieved;
  std::string asset_id;  // retrieved record, empty for generation_only

  friend bool operator==(const AssetBinding&, const AssetBinding&) = default;
};

void to_json(nlohmann::json& j, const AssetBinding& b);
void from_json(const nlohmann::json& j, AssetBinding& b);

struct RetrieveOptions {
  AssetPolicy policy = AssetPolicy::Hybrid;
  std::size_t top_k = 1;
  /// Where bindings live. When set, retrieved files are copied here first so
  /// regeneration overwrites the copy and never the shared repository file;
  /// when empty, retrieved uris are used (and overwritten) in place.
  /// Required for generation_only.
  std::filesystem::path asset_dir;
  std::string layer_judge_prompt;
};

struct RetrieveBackends {
  Embedder* embedder = nullptr;          // needed unless generation_only
  ModelBackend* generator = nullptr;     // needed unless retrieval_only
  ModelBackend* layer_judge = nullptr;   // needed for hybrid
};

/// Binds every image prompt to an asset file. Under hybrid, each retrieved
/// asset is shown to the layer judge and regenerated at the same uri when
/// rejected. Throws BackendError (details carry "layer_id") or EmptyIndex.
std::vector<AssetBinding> retrieve_or_generate(const std::vector<ImagePrompt>& prompts,
                                               const AssetIndex& index,
                                               const RetrieveOptions& options,
                                               const RetrieveBackends& backends);

/// Reads the judge's verdict: a leading ACCEPT/YES or REJECT/NO.
/// Anything else throws BackendError.
bool parse_layer_verdict(std::string_view reply);

}  // namespace posterkit
