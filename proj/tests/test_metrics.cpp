#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "posterkit/digest.hpp"
#include "posterkit/error.hpp"
#include "posterkit/metrics.hpp"
#include "support.hpp"

using namespace posterkit;
using nlohmann::json;

namespace {

ElementGeometry box(std::string id, Rect r, ElementKind kind = ElementKind::Shape) {
  ElementGeometry e;
  e.id = std::move(id);
  e.kind = kind;
  e.bbox = r;
  return e;
}

GeometrySet canvas(double w, double h) {
  GeometrySet g;
  g.canvas = {w, h};
  return g;
}

void translate(GeometrySet& g, double dx, double dy) {
  for (auto& e : g.elements) {
    e.bbox.x += dx;
    e.bbox.y += dy;
  }
}

void scale(GeometrySet& g, double s) {
  g.canvas.width *= s;
  g.canvas.height *= s;
  for (auto& e : g.elements) e.bbox = {e.bbox.x * s, e.bbox.y * s, e.bbox.w * s, e.bbox.h * s};
}

}  // namespace

// ---- validity

TEST(Validity, TenElementsAtOnePercent) {
  auto g = canvas(1000, 1000);
  for (int i = 0; i < 10; ++i) g.elements.push_back(box("e" + std::to_string(i), {i * 100.0, 0, 100, 100}));
  auto v = validity(g, ThresholdProfile::standard());
  EXPECT_EQ(v.n_valid, 10);
  EXPECT_EQ(v.n_total, 10);
  EXPECT_DOUBLE_EQ(v.score, 1.0);
}

TEST(Validity, PaperThresholds) {
  EXPECT_DOUBLE_EQ(ThresholdProfile::standard().area_ratio_threshold, 0.001);
  EXPECT_DOUBLE_EQ(ThresholdProfile::broad().area_ratio_threshold, 0.0001);
  auto g = canvas(1000, 1000);
  g.elements.push_back(box("a", {0, 0, 25, 20}));  // 500 / 1e6 = 0.0005
  EXPECT_EQ(validity(g, ThresholdProfile::standard()).n_valid, 0);
  EXPECT_EQ(validity(g, ThresholdProfile::standard()).per_element.at("a").reason, "below-area-threshold");
  EXPECT_EQ(validity(g, ThresholdProfile::broad()).n_valid, 1);
}

TEST(Validity, BoundaryEqualIsInvalid) {
  auto g = canvas(1000, 1000);
  g.elements.push_back(box("a", {0, 0, 100, 10}));  // exactly 0.001
  EXPECT_EQ(validity(g, ThresholdProfile::standard()).n_valid, 0);
}

TEST(Validity, HalfValid) {
  auto g = canvas(1000, 1000);
  g.elements.push_back(box("a", {0, 0, 100, 100}));
  g.elements.push_back(box("b", {0, 0, 10, 10}));
  EXPECT_DOUBLE_EQ(validity(g, ThresholdProfile::standard()).score, 0.5);
}

TEST(Validity, ReasonsAndExclusions) {
  auto g = canvas(100, 100);
  g.elements.push_back(box("container", {0, 0, 100, 100}, ElementKind::Container));
  g.elements.push_back(box("off", {200, 200, 50, 50}));
  g.elements.push_back(box("flat", {0, 0, 50, 0}));
  auto ghost = box("ghost", {0, 0, 50, 50});
  ghost.opacity = 0.0;
  g.elements.push_back(ghost);
  auto v = validity(g, ThresholdProfile::standard());
  EXPECT_EQ(v.per_element.at("container").reason, "excluded-container");
  EXPECT_EQ(v.per_element.at("off").reason, "off-canvas");
  EXPECT_EQ(v.per_element.at("flat").reason, "zero-size");
  EXPECT_TRUE(v.per_element.at("ghost").valid);
  EXPECT_EQ(v.n_total, 3);
  auto hide = ThresholdProfile::standard();
  hide.count_zero_opacity = false;
  auto h = validity(g, hide);
  EXPECT_EQ(h.n_total, 2);
  EXPECT_EQ(h.per_element.at("ghost").reason, "excluded-zero-opacity");
}

TEST(Validity, NoElementsScoresOneAndFlags) {
  auto v = validity(canvas(10, 10), ThresholdProfile::standard());
  EXPECT_DOUBLE_EQ(v.score, 1.0);
  EXPECT_EQ(v.flags, std::vector<std::string>{"no-elements"});
}

TEST(Validity, MonotoneUnderThresholdDecrease) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> t(1e-6, 0.2);
  for (int i = 0; i < 100; ++i) {
    auto g = oracle::grid_geometry(rng, 2 + i % 7);
    for (auto& e : g.elements) e.bbox.w = std::max(1.0, e.bbox.w / 20);
    double hi = t(rng), lo = hi * std::uniform_real_distribution<double>(0.01, 1.0)(rng);
    double a = validity(g, ThresholdProfile::custom(hi)).score;
    double b = validity(g, ThresholdProfile::custom(lo)).score;
    EXPECT_LE(a, b);
    EXPECT_DOUBLE_EQ(a, oracle::validity(g, hi));
  }
}

TEST(Validity, CustomProfileRange) {
  EXPECT_THROW(ThresholdProfile::custom(0.0), Error);
  EXPECT_THROW(ThresholdProfile::custom(1.0), Error);
  EXPECT_THROW(ThresholdProfile::from_name("wide"), Error);
}

// ---- alignment

TEST(Alignment, SingleElementIsZero) {
  auto g = canvas(1000, 1000);
  g.elements.push_back(box("a", {0, 0, 100, 100}));
  EXPECT_DOUBLE_EQ(alignment(g, ThresholdProfile::standard()), 0.0);
}

TEST(Alignment, SharedLeftEdgeIsZero) {
  auto g = canvas(1000, 1000);
  g.elements.push_back(box("a", {0, 0, 100, 100}));
  g.elements.push_back(box("b", {0, 300, 100, 100}));
  EXPECT_DOUBLE_EQ(alignment(g, ThresholdProfile::standard()), 0.0);
}

TEST(Alignment, WorkedExample) {
  auto g = canvas(1000, 1000);
  g.elements.push_back(box("a", {0, 0, 100, 100}));
  g.elements.push_back(box("b", {105, 203, 100, 100}));
  double expect = (5.0 + 5.0) / (2.0 * std::sqrt(2.0) * 1000.0);
  EXPECT_NEAR(alignment(g, ThresholdProfile::standard()), expect, 1e-15);
  EXPECT_NEAR(expect, 3.5355e-3, 1e-7);
  // Same-axis pairs only: x gap 5 (100 vs 105), y gap 103 (100 vs 203) -> 5 each.
  EXPECT_NEAR(alignment(g, ThresholdProfile::standard(), AlignmentMode::SameAxis), expect, 1e-15);
}

TEST(Alignment, CrossAxisPairsOnlyCountInLiteralMode) {
  auto g = canvas(1000, 1000);
  g.elements.push_back(box("a", {0, 300, 100, 100}));    // x {0,50,100}  y {300,350,400}
  g.elements.push_back(box("b", {600, 700, 100, 100}));  // x {600,650,700} y {700,750,800}
  // a.y 400 meets c.x 400 only across axes.
  g.elements.push_back(box("c", {400, 0, 200, 100}));    // x {400,500,600} y {0,50,100}
  double literal = alignment(g, ThresholdProfile::standard(), AlignmentMode::Literal);
  double same = alignment(g, ThresholdProfile::standard(), AlignmentMode::SameAxis);
  EXPECT_DOUBLE_EQ(literal, oracle::alignment(g, 0.001, false));
  EXPECT_DOUBLE_EQ(same, oracle::alignment(g, 0.001, true));
  EXPECT_LT(literal, same);
}

TEST(Alignment, InvalidElementsExcluded) {
  auto g = canvas(1000, 1000);
  g.elements.push_back(box("a", {0, 0, 100, 100}));
  g.elements.push_back(box("b", {333, 333, 100, 100}));
  g.elements.push_back(box("tiny", {0, 500, 5, 5}));
  g.elements.push_back(box("wrap", {0, 0, 1000, 1000}, ElementKind::Container));
  EXPECT_DOUBLE_EQ(alignment(g, ThresholdProfile::standard()), oracle::alignment(g, 0.001, false));
  auto d = alignment_detail(g, ThresholdProfile::standard());
  EXPECT_EQ(d.element_count, 2u);
}

TEST(Alignment, BruteForceOracleBothModes) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    auto g = testsupport::random_geometry(rng, 2 + i % 7);
    for (auto mode : {AlignmentMode::Literal, AlignmentMode::SameAxis}) {
      double got = alignment(g, ThresholdProfile::standard(), mode);
      double want = oracle::alignment(g, 0.001, mode == AlignmentMode::SameAxis);
      EXPECT_TRUE(oracle::close_rel(got, want, 1e-12)) << got << " vs " << want;
    }
  }
}

TEST(Alignment, TranslationAndScalingInvariance) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    auto g = oracle::grid_geometry(rng, 2 + i % 7);
    double min_x = 1e9, min_y = 1e9, max_r = 0, max_b = 0;
    for (const auto& e : g.elements) {
      min_x = std::min(min_x, e.bbox.x);
      min_y = std::min(min_y, e.bbox.y);
      max_r = std::max(max_r, e.bbox.right());
      max_b = std::max(max_b, e.bbox.bottom());
    }
    double dx = std::uniform_int_distribution<int>(int(-min_x), int(g.canvas.width - max_r))(rng);
    double dy = std::uniform_int_distribution<int>(int(-min_y), int(g.canvas.height - max_b))(rng);
    double diag = std::uniform_int_distribution<int>(int(std::max(-min_x, -min_y)),
                                                     int(std::min(g.canvas.width - max_r, g.canvas.height - max_b)))(rng);
    for (auto mode : {AlignmentMode::Literal, AlignmentMode::SameAxis}) {
      double base = alignment(g, ThresholdProfile::standard(), mode);
      auto moved = g;
      if (mode == AlignmentMode::Literal) {
        translate(moved, diag, diag);
      } else {
        translate(moved, dx, dy);
      }
      EXPECT_TRUE(oracle::close_rel(alignment(moved, ThresholdProfile::standard(), mode), base, 1e-12));
      for (double s : {0.5, 2.0, 3.0, 2.5}) {
        auto scaled = g;
        scale(scaled, s);
        EXPECT_TRUE(oracle::close_rel(alignment(scaled, ThresholdProfile::standard(), mode), base, 1e-12))
            << "scale " << s;
      }
    }
  }
}

TEST(Alignment, LeftAlignedColumnIsExactlyZero) {
  auto g = canvas(800, 1200);
  for (int i = 0; i < 6; ++i) g.elements.push_back(box("r" + std::to_string(i), {40, 40 + i * 170.0, 300 + i * 7.0, 90}));
  EXPECT_EQ(alignment(g, ThresholdProfile::standard()), 0.0);
  EXPECT_EQ(alignment(g, ThresholdProfile::standard(), AlignmentMode::SameAxis), 0.0);
}

TEST(Alignment, ClampedForFarOffCanvasPairs) {
  auto g = canvas(10, 10);
  auto profile = ThresholdProfile::standard();
  profile.require_canvas_intersection = false;
  g.elements.push_back(box("a", {0, 0, 5, 5}));
  g.elements.push_back(box("b", {1000, 1000, 5, 5}));
  auto d = alignment_detail(g, profile);
  EXPECT_GT(d.unclamped, 1.0);
  EXPECT_DOUBLE_EQ(d.score, 1.0);
}

TEST(Alignment, ModeNames) {
  EXPECT_EQ(alignment_mode_from_string("same_axis"), AlignmentMode::SameAxis);
  EXPECT_EQ(to_string(AlignmentMode::Literal), "literal");
  EXPECT_THROW(alignment_mode_from_string("diagonal"), Error);
}

// ---- readability

TEST(Readability, UniformBackgroundIsZero) {
  auto g = canvas(100, 100);
  g.text_regions.push_back({"hello", {{10, 10, 50, 20}}});
  EXPECT_DOUBLE_EQ(readability(GrayImage(100, 100, std::uint8_t{200}), g), 0.0);
}

TEST(Readability, MeanOfNormalizedRegions) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> v(0, 255);
  std::vector<std::uint8_t> px(60 * 40);
  for (auto& p : px) p = static_cast<std::uint8_t>(v(rng));
  GrayImage img(60, 40, px);
  auto g = canvas(60, 40);
  g.text_regions.push_back({"a", {{0, 0, 20, 20}}});
  g.text_regions.push_back({"b", {{30, 10, 25, 25}}});
  double a = sobel_mean_magnitude(img, {0, 0, 20, 20});
  double b = sobel_mean_magnitude(img, {30, 10, 25, 25});
  auto r = readability_detail(img, g);
  EXPECT_NEAR(r.score, (a / 1442.497 + b / 1442.497) / 2, 1e-6);
  EXPECT_NEAR(r.score, (a / kMaxSobelMagnitude + b / kMaxSobelMagnitude) / 2, 1e-15);
  EXPECT_EQ(r.per_region, (std::vector<double>{a, b}));
}

TEST(Readability, MultiRectRegionsArePixelWeighted) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> v(0, 255);
  std::vector<std::uint8_t> px(80 * 80);
  for (auto& p : px) p = static_cast<std::uint8_t>(v(rng));
  GrayImage img(80, 80, px);
  auto g = canvas(80, 80);
  g.text_regions.push_back({"wrapped line", {{0, 0, 60, 12}, {0, 12, 22, 12}, {70, 70, 30, 30}}});
  EXPECT_NEAR(readability(img, g), oracle::readability(img, g), 1e-12);
}

TEST(Readability, BusyBackgroundScoresHigherThanFlat) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> v(0, 255);
  std::vector<std::uint8_t> photo(200 * 100);
  for (auto& p : photo) p = static_cast<std::uint8_t>(v(rng));
  auto g = canvas(200, 100);
  g.text_regions.push_back({"TITLE", {{20, 20, 160, 40}}});
  double busy = readability(GrayImage(200, 100, photo), g);
  double flat = readability(GrayImage(200, 100, std::uint8_t{90}), g);
  EXPECT_GT(busy, flat);
  EXPECT_NEAR(busy, oracle::readability(GrayImage(200, 100, photo), g), 1e-12);
}

TEST(Readability, InUnitIntervalOnRandomScreenshots) {
  std::mt19937_64 rng(10);
  for (int i = 0; i < 50; ++i) {
    int w = std::uniform_int_distribution<int>(20, 120)(rng), h = std::uniform_int_distribution<int>(20, 120)(rng);
    std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
    int mode = i % 3;
    for (std::size_t k = 0; k < px.size(); ++k) {
      px[k] = mode == 0 ? static_cast<std::uint8_t>(rng() & 0xff) : mode == 1 ? ((k / w + k % w) % 2 ? 255 : 0) : 7;
    }
    GrayImage img(w, h, px);
    auto g = canvas(w, h);
    int regions = 1 + i % 4;
    for (int k = 0; k < regions; ++k) {
      double x = std::uniform_real_distribution<double>(-10, w)(rng);
      double y = std::uniform_real_distribution<double>(-10, h)(rng);
      g.text_regions.push_back({"t", {{x, y, 15, 12}}});
    }
    double r = readability(img, g);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
    EXPECT_NEAR(r, oracle::readability(img, g), 1e-12);
  }
}

TEST(Readability, SmallerRegionValueLowersTheMean) {
  auto g = canvas(40, 20);
  g.text_regions.push_back({"a", {{0, 0, 20, 20}}});
  g.text_regions.push_back({"b", {{20, 0, 20, 20}}});
  std::vector<std::uint8_t> px(40 * 20, 100);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 40; ++x) px[y * 40 + x] = x % 4 < 2 ? 255 : 0;
  }
  double before = readability(GrayImage(40, 20, px), g);
  for (int y = 0; y < 20; ++y) {
    for (int x = 20; x < 40; ++x) px[y * 40 + x] = 100;
  }
  double after = readability(GrayImage(40, 20, px), g);
  EXPECT_LT(after, before);
}

TEST(Readability, NoTextFlag) {
  auto r = readability_detail(GrayImage(10, 10, std::uint8_t{0}), canvas(10, 10));
  EXPECT_DOUBLE_EQ(r.score, 0.0);
  EXPECT_EQ(r.flags, std::vector<std::string>{"no-text"});
}

TEST(Readability, DimensionMismatch) {
  try {
    readability(GrayImage(10, 11, std::uint8_t{0}), canvas(10, 10));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

// ---- embedding similarity

TEST(Similarity, KnownValues) {
  std::vector<double> a = {1, 0, 0}, b = {0, 1, 0};
  EXPECT_DOUBLE_EQ(embedding_similarity(a, a), 1.0);
  EXPECT_DOUBLE_EQ(embedding_similarity(a, b), 0.0);
  std::vector<double> c = {1, 2, 3}, d = {4, 5, 6};
  double want = 32.0 / (std::sqrt(14.0) * std::sqrt(77.0));
  EXPECT_NEAR(embedding_similarity(c, d), want, 1e-15);
  EXPECT_NEAR(want, 0.974631, 1e-6);
  std::vector<double> neg = {-1, -2, -3};
  EXPECT_DOUBLE_EQ(embedding_similarity(c, neg), -1.0);
}

TEST(Similarity, Errors) {
  std::vector<double> a = {1, 2}, b = {1, 2, 3}, z = {0, 0};
  try {
    embedding_similarity(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  try {
    embedding_similarity(a, z);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroVector);
  }
}

// ---- evaluate

namespace {

struct Fixture {
  testsupport::TempDir dir;
  std::filesystem::path geometry, screenshot, html;

  Fixture() {
    GeometrySet g = canvas(120, 80);
    g.elements.push_back(box("bg", {0, 0, 120, 80}, ElementKind::Image));
    auto title = box("title", {10, 10, 80, 20}, ElementKind::Text);
    title.text = "Title";
    g.elements.push_back(title);
    g.text_regions.push_back({"Title", {{10, 10, 80, 20}}});
    geometry = dir / "g.json";
    write_file(geometry, json(g).dump());
    std::vector<std::uint8_t> px(120 * 80 * 3);
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>((i * 37) % 251);
    screenshot = dir / "s.png";
    save_png(screenshot, RasterImage(120, 80, PixelFormat::Rgb8, px));
    html = dir / "p.html";
    write_file(html, R"(<div class="poster" style="width:120px;height:80px"><img src="bg.png" style="position:absolute;left:0;top:0;width:120px;height:80px"><p style="position:absolute;left:10px;top:10px;width:80px;height:20px">Title</p></div>)");
  }
};

}  // namespace

TEST(Evaluate, DumpAndScreenshotPopulateAllObjectiveScores) {
  Fixture f;
  EvaluateInputs in;
  in.html = f.html;
  in.geometry = f.geometry;
  in.screenshot = f.screenshot;
  in.embeddings = std::make_pair(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6});
  auto r = evaluate(in);
  EXPECT_DOUBLE_EQ(r.validity.score, 1.0);
  EXPECT_TRUE(r.readability.has_value());
  EXPECT_GT(*r.readability, 0.0);
  ASSERT_TRUE(r.similarity.has_value());
  EXPECT_NEAR(*r.similarity, 0.974631, 1e-6);
  EXPECT_TRUE(r.flags.empty());
  EXPECT_EQ(r.inputs_digest.size(), 64u);
}

TEST(Evaluate, NoScreenshotSkipsReadability) {
  Fixture f;
  EvaluateInputs in;
  in.geometry = f.geometry;
  auto r = evaluate(in);
  EXPECT_FALSE(r.readability.has_value());
  EXPECT_NE(std::find(r.flags.begin(), r.flags.end(), "readability-skipped"), r.flags.end());
  EXPECT_NE(std::find(r.flags.begin(), r.flags.end(), "similarity-skipped"), r.flags.end());
}

TEST(Evaluate, ResolveMatchesDumpOnSimpleFixture) {
  Fixture f;
  EvaluateInputs dump;
  dump.geometry = f.geometry;
  EvaluateInputs resolved;
  resolved.html = f.html;
  auto a = evaluate(dump);
  auto b = evaluate(resolved);
  EXPECT_DOUBLE_EQ(a.validity.score, b.validity.score);
  EXPECT_NEAR(a.alignment, b.alignment, 1e-12);
  EXPECT_NE(std::find(b.flags.begin(), b.flags.end(), "geometry-resolved"), b.flags.end());
}

TEST(Evaluate, DeterministicReports) {
  Fixture f;
  EvaluateInputs in;
  in.html = f.html;
  in.geometry = f.geometry;
  in.screenshot = f.screenshot;
  EXPECT_EQ(json(evaluate(in)).dump(), json(evaluate(in)).dump());
  auto other = in;
  other.screenshot.reset();
  EXPECT_NE(evaluate(in).inputs_digest, evaluate(other).inputs_digest);
}

TEST(Evaluate, ErrorsCarrySourceLabels) {
  Fixture f;
  EvaluateInputs in;
  in.geometry = f.geometry;
  in.screenshot = f.dir / "missing.png";
  try {
    evaluate(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
    EXPECT_EQ(e.message().rfind("screenshot: ", 0), 0u) << e.message();
  }
  write_file(f.dir / "small.png", "");
  save_png(f.dir / "small.png", GrayImage(10, 10, std::uint8_t{0}));
  in.screenshot = f.dir / "small.png";
  try {
    evaluate(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  EvaluateInputs nothing;
  EXPECT_THROW(evaluate(nothing), Error);
}
