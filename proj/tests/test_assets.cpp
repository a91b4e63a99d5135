#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "posterkit/asset_index.hpp"
#include "posterkit/backends.hpp"
#include "posterkit/error.hpp"
#include "posterkit/raster.hpp"
#include "support.hpp"

using namespace posterkit;
using nlohmann::json;

namespace {

void write_manifest(const std::filesystem::path& path, const std::vector<json>& lines) {
  std::ofstream out(path);
  for (const auto& l : lines) out << l.dump() << "\n";
}

AssetRecord rec(std::string id, std::vector<double> e, std::string uri = "x.png") {
  return {std::move(id), "prompt", std::move(e), std::move(uri)};
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return d / std::sqrt(na * nb);
}

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n;
  std::vector<double> v(dim);
  for (auto& x : v) x = n(rng);
  return v;
}

// Embeds each prompt as a fixed vector keyed by prompt text.
class MapEmbedder : public Embedder {
 public:
  std::map<std::string, std::vector<double>, std::less<>> table;
  std::vector<double> embed(std::string_view text) override { return table.at(std::string(text)); }
};

ProviderResponse image_reply(const std::filesystem::path& png) { return {"", {png}}; }

struct Repo {
  testsupport::TempDir dir;
  AssetIndex index;
  MapEmbedder embedder;
  std::filesystem::path generated_png;

  Repo() {
    std::vector<AssetRecord> records;
    for (int i = 0; i < 3; ++i) {
      auto uri = dir / ("asset-" + std::to_string(i) + ".png");
      save_png(uri, GrayImage(4, 4, static_cast<std::uint8_t>(10 * i)));
      std::vector<double> e(3, 0.0);
      e[i] = 1.0;
      records.push_back({"a" + std::to_string(i), "stored " + std::to_string(i), e, uri.string()});
      embedder.table["prompt " + std::to_string(i)] = e;
    }
    index = AssetIndex(records);
    generated_png = dir / "generated.png";
    save_png(generated_png, GrayImage(4, 4, std::uint8_t{200}));
  }

  std::vector<ImagePrompt> prompts() const { return {{0, "prompt 0"}, {1, "prompt 1"}, {2, "prompt 2"}}; }
};

}  // namespace

TEST(AssetIndex, BuildFromManifest) {
  testsupport::TempDir dir;
  write_manifest(dir / "m.jsonl", {{{"asset_id", "a"}, {"prompt", "p"}, {"embedding", {1, 0, 0, 0}}, {"uri", "a.png"}},
                                   {{"asset_id", "b"}, {"prompt", "q"}, {"embedding", {0, 1, 0, 0}}, {"uri", "/abs/b.png"}},
                                   {{"asset_id", "c"}, {"prompt", "r"}, {"embedding", {0, 0, 1, 1}}, {"uri", "c.png"}}});
  auto index = build_index(dir / "m.jsonl");
  EXPECT_EQ(index.size(), 3u);
  EXPECT_EQ(index.dimension(), 4u);
  EXPECT_EQ(std::filesystem::path(index.records()[0].uri), dir / "a.png");
  EXPECT_EQ(index.records()[1].uri, "/abs/b.png");
  auto unit = index.normalized(2);
  EXPECT_NEAR(unit[2], 1 / std::sqrt(2.0), 1e-15);
}

TEST(AssetIndex, ManifestErrors) {
  testsupport::TempDir dir;
  write_manifest(dir / "mixed.jsonl",
                 {{{"asset_id", "a"}, {"prompt", "p"}, {"embedding", {1, 0}}, {"uri", "a.png"}},
                  {{"asset_id", "b"}, {"prompt", "p"}, {"embedding", {1, 0, 0}}, {"uri", "b.png"}}});
  try {
    build_index(dir / "mixed.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  write_manifest(dir / "dup.jsonl", {{{"asset_id", "a"}, {"prompt", "p"}, {"embedding", {1, 0}}, {"uri", "a.png"}},
                                     {{"asset_id", "a"}, {"prompt", "p"}, {"embedding", {0, 1}}, {"uri", "b.png"}}});
  try {
    build_index(dir / "dup.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateAssetId);
  }
  EXPECT_THROW(AssetIndex({rec("z", {0, 0})}), Error);
  EXPECT_THROW(build_index(dir / "none.jsonl"), Error);
}

TEST(AssetIndex, TenThousandRecords) {
  std::mt19937_64 rng(1);
  std::vector<AssetRecord> records;
  for (int i = 0; i < 10000; ++i) records.push_back(rec("id" + std::to_string(i), random_vec(rng, 32)));
  AssetIndex index(records);
  EXPECT_EQ(index.size(), 10000u);
  auto hits = index.query(records[1234].embedding, 3);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].asset_id, "id1234");
  EXPECT_NEAR(hits[0].similarity, 1.0, 1e-12);
}

TEST(AssetIndex, SelfRetrievalAndLargeK) {
  AssetIndex index({rec("a", {1, 0, 0}), rec("b", {0, 1, 0}), rec("c", {1, 1, 0})});
  auto hits = index.query(std::vector<double>{2, 0, 0}, 1);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].asset_id, "a");
  EXPECT_DOUBLE_EQ(hits[0].similarity, 1.0);
  EXPECT_EQ(index.query(std::vector<double>{1, 0, 0}, 10).size(), 3u);
  EXPECT_THROW(index.query(std::vector<double>{1, 0}, 1), Error);
  EXPECT_THROW(index.query(std::vector<double>{0, 0, 0}, 1), Error);
  EXPECT_THROW(index.query(std::vector<double>{1, 0, 0}, 0), Error);
}

TEST(AssetIndex, TiesBreakByAscendingId) {
  AssetIndex index({rec("zeta", {1, 0}), rec("alpha", {2, 0}), rec("mid", {3, 0}), rec("other", {0, 1})});
  auto hits = index.query(std::vector<double>{1, 0}, 3);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].asset_id, "alpha");
  EXPECT_EQ(hits[1].asset_id, "mid");
  EXPECT_EQ(hits[2].asset_id, "zeta");
}

TEST(AssetIndex, MatchesBruteForceCosine) {
  std::mt19937_64 rng(2);
  std::vector<AssetRecord> records;
  for (int i = 0; i < 50; ++i) records.push_back(rec("r" + std::to_string(100 + i), random_vec(rng, 8)));
  AssetIndex index(records);
  for (int q = 0; q < 20; ++q) {
    auto query = random_vec(rng, 8);
    std::vector<std::pair<double, std::string>> expect;
    for (const auto& r : records) expect.push_back({cosine(query, r.embedding), r.asset_id});
    std::sort(expect.begin(), expect.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    auto hits = index.query(query, 5);
    ASSERT_EQ(hits.size(), 5u);
    for (int i = 0; i < 5; ++i) {
      EXPECT_EQ(hits[i].asset_id, expect[i].second);
      EXPECT_NEAR(hits[i].similarity, expect[i].first, 1e-12);
      if (i) EXPECT_GE(hits[i - 1].similarity, hits[i].similarity);
    }
  }
}

TEST(LayerVerdict, Parsing) {
  EXPECT_TRUE(parse_layer_verdict("ACCEPT"));
  EXPECT_TRUE(parse_layer_verdict("  yes, looks right"));
  EXPECT_TRUE(parse_layer_verdict("**Accept**. Fine."));
  EXPECT_FALSE(parse_layer_verdict("REJECT. Wrong colour."));
  EXPECT_FALSE(parse_layer_verdict("no"));
  EXPECT_THROW(parse_layer_verdict("Maybe"), Error);
  EXPECT_THROW(parse_layer_verdict(""), Error);
}

TEST(Retrieve, AcceptAllMeansNoGeneration) {
  Repo repo;
  auto log = std::make_shared<testsupport::CallLog>();
  testsupport::RecordingBackend judge(log, "layer_judge", [](const ProviderRequest&) { return ProviderResponse{"ACCEPT", {}}; });
  testsupport::RecordingBackend gen(log, "generator", [&](const ProviderRequest&) { return image_reply(repo.generated_png); });
  RetrieveOptions opts;
  opts.asset_dir = repo.dir / "job-assets";
  auto b = retrieve_or_generate(repo.prompts(), repo.index, opts, {&repo.embedder, &gen, &judge});
  EXPECT_EQ(log->count("generator"), 0u);
  EXPECT_EQ(log->count("layer_judge"), 3u);
  ASSERT_EQ(b.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(b[i].layer_id, i);
    EXPECT_EQ(b[i].asset_id, "a" + std::to_string(i));
    EXPECT_EQ(b[i].provenance, Provenance::Retrieved);
    EXPECT_EQ(std::filesystem::path(b[i].uri), opts.asset_dir / ("layer-" + std::to_string(i) + ".png"));
    EXPECT_EQ(read_file(b[i].uri), read_file(repo.index.records()[i].uri));
  }
  auto first = judge.requests().at(0);
  EXPECT_EQ(first.role, "layer_judge");
  ASSERT_NE(testsupport::find_part(first, "asset"), nullptr);
  EXPECT_EQ(testsupport::find_part(first, "asset")->kind, MessagePart::Kind::Image);
}

TEST(Retrieve, RejectedLayerRegeneratedAtSameUri) {
  Repo repo;
  auto log = std::make_shared<testsupport::CallLog>();
  testsupport::RecordingBackend judge(log, "layer_judge", [](const ProviderRequest& r) {
    bool second = testsupport::find_part(r, "layer_prompt")->text.find("prompt 1") != std::string::npos;
    return ProviderResponse{second ? "REJECT. Wrong." : "ACCEPT", {}};
  });
  testsupport::RecordingBackend gen(log, "generator", [&](const ProviderRequest&) { return image_reply(repo.generated_png); });
  RetrieveOptions opts;
  opts.asset_dir = repo.dir / "job-assets";
  auto original = read_file(repo.index.records()[1].uri);
  auto b = retrieve_or_generate(repo.prompts(), repo.index, opts, {&repo.embedder, &gen, &judge});
  EXPECT_EQ(log->count("generator"), 1u);
  EXPECT_EQ(b[1].provenance, Provenance::Generated);
  EXPECT_EQ(std::filesystem::path(b[1].uri), opts.asset_dir / "layer-1.png");
  EXPECT_EQ(read_file(b[1].uri), read_file(repo.generated_png));
  EXPECT_EQ(read_file(repo.index.records()[1].uri), original);
  EXPECT_EQ(b[0].provenance, Provenance::Retrieved);
  EXPECT_EQ(b[2].provenance, Provenance::Retrieved);
  EXPECT_EQ(testsupport::find_part(gen.requests().at(0), "layer_prompt")->text, "prompt 1");
}

TEST(Retrieve, RejectInPlaceWithoutAssetDir) {
  Repo repo;
  auto log = std::make_shared<testsupport::CallLog>();
  testsupport::RecordingBackend judge(log, "layer_judge", [](const ProviderRequest&) { return ProviderResponse{"NO", {}}; });
  testsupport::RecordingBackend gen(log, "generator", [&](const ProviderRequest&) { return image_reply(repo.generated_png); });
  auto b = retrieve_or_generate({{0, "prompt 0"}}, repo.index, {}, {&repo.embedder, &gen, &judge});
  EXPECT_EQ(b[0].uri, std::filesystem::path(repo.index.records()[0].uri).generic_string());
  EXPECT_EQ(read_file(b[0].uri), read_file(repo.generated_png));
}

TEST(Retrieve, TopKTriesCandidatesInOrder) {
  Repo repo;
  repo.embedder.table["blend"] = {1.0, 0.5, 0.0};
  auto log = std::make_shared<testsupport::CallLog>();
  testsupport::RecordingBackend judge(log, "layer_judge", [](const ProviderRequest& r) {
    bool first = testsupport::find_part(r, "asset_prompt")->text.find("stored 0") != std::string::npos;
    return ProviderResponse{first ? "REJECT" : "ACCEPT", {}};
  });
  testsupport::RecordingBackend gen(log, "generator", [&](const ProviderRequest&) { return image_reply(repo.generated_png); });
  RetrieveOptions opts;
  opts.top_k = 2;
  opts.asset_dir = repo.dir / "out";
  auto b = retrieve_or_generate({{5, "blend"}}, repo.index, opts, {&repo.embedder, &gen, &judge});
  EXPECT_EQ(b[0].asset_id, "a1");
  EXPECT_EQ(b[0].provenance, Provenance::Retrieved);
  EXPECT_EQ(log->count("layer_judge"), 2u);
  EXPECT_EQ(log->count("generator"), 0u);
}

TEST(Retrieve, RetrievalOnlyNeverJudgesOrGenerates) {
  Repo repo;
  RetrieveOptions opts;
  opts.policy = AssetPolicy::RetrievalOnly;
  auto b = retrieve_or_generate(repo.prompts(), repo.index, opts, {&repo.embedder, nullptr, nullptr});
  EXPECT_EQ(b[2].asset_id, "a2");
  try {
    retrieve_or_generate(repo.prompts(), AssetIndex{}, opts, {&repo.embedder, nullptr, nullptr});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyIndex);
  }
}

TEST(Retrieve, GenerationOnly) {
  Repo repo;
  auto log = std::make_shared<testsupport::CallLog>();
  testsupport::RecordingBackend gen(log, "generator", [&](const ProviderRequest&) { return image_reply(repo.generated_png); });
  RetrieveOptions opts;
  opts.policy = AssetPolicy::GenerationOnly;
  opts.asset_dir = repo.dir / "gen";
  auto b = retrieve_or_generate(repo.prompts(), repo.index, opts, {nullptr, &gen, nullptr});
  EXPECT_EQ(log->count("generator"), 3u);
  for (const auto& x : b) {
    EXPECT_EQ(x.provenance, Provenance::Generated);
    EXPECT_TRUE(x.asset_id.empty());
    EXPECT_TRUE(std::filesystem::exists(x.uri));
  }
}

TEST(Retrieve, GeneratorWithoutImageIsBackendError) {
  Repo repo;
  FixedBackend gen({"no image here", {}});
  RetrieveOptions opts;
  opts.policy = AssetPolicy::GenerationOnly;
  opts.asset_dir = repo.dir / "gen";
  try {
    retrieve_or_generate({{7, "x"}}, repo.index, opts, {nullptr, &gen, nullptr});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BackendError);
    EXPECT_EQ(e.details()["layer_id"], 7);
  }
}

TEST(Retrieve, PolicyNames) {
  EXPECT_EQ(asset_policy_from_string("hybrid"), AssetPolicy::Hybrid);
  EXPECT_EQ(asset_policy_from_string("retrieval_only"), AssetPolicy::RetrievalOnly);
  EXPECT_EQ(to_string(AssetPolicy::GenerationOnly), "generation_only");
  EXPECT_THROW(asset_policy_from_string("random"), Error);
}

TEST(Embedders, HashEmbedderDeterministicUnitNorm) {
  HashEmbedder e(64);
  auto a = e.embed("A blue diagonal band");
  EXPECT_EQ(a, e.embed("A blue diagonal band"));
  ASSERT_EQ(a.size(), 64u);
  double n = 0;
  for (double x : a) n += x * x;
  EXPECT_NEAR(n, 1.0, 1e-12);
  EXPECT_NE(a, e.embed("An orange cyclist"));
}

TEST(Embedders, TableEmbedder) {
  testsupport::TempDir dir;
  write_file(dir / "t.json", R"({"hello": [1, 2, 3]})");
  TableEmbedder e(dir / "t.json");
  EXPECT_EQ(e.embed("hello"), (std::vector<double>{1, 2, 3}));
  EXPECT_THROW(e.embed("missing"), Error);
}
