#include "posterkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "posterkit/digest.hpp"
#include "posterkit/error.hpp"

namespace posterkit {

namespace {

ElementValidity classify(const ElementGeometry& e, const CanvasSpec& canvas,
                         const ThresholdProfile& profile) {
  const auto& b = e.bbox;
  if (!b.finite()) return {false, "non-finite-geometry"};
  if (!(b.w > 0.0 && b.h > 0.0)) return {false, "zero-size"};
  if (!(b.area() / canvas.area() > profile.area_ratio_threshold)) {
    return {false, "below-area-threshold"};
  }
  if (profile.require_canvas_intersection && !(intersection_area(b, canvas.bounds()) > 0.0)) {
    return {false, "off-canvas"};
  }
  return {true, "ok"};
}

bool counted(const ElementGeometry& e, const ThresholdProfile& profile) {
  if (e.kind == ElementKind::Container) return false;
  if (!profile.count_zero_opacity && e.opacity == 0.0) return false;
  return true;
}

// Smallest |a_i - b_j| over two ascending sequences.
template <std::size_t N>
double min_gap(const std::array<double, N>& a, const std::array<double, N>& b) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t i = 0, j = 0;
  while (i < N && j < N) {
    if (a[i] <= b[j]) {
      best = std::min(best, b[j] - a[i]);
      ++i;
    } else {
      best = std::min(best, a[i] - b[j]);
      ++j;
    }
  }
  return best;
}

struct SortedCoords {
  std::array<double, 6> all;
  std::array<double, 3> xs;
  std::array<double, 3> ys;
};

SortedCoords sorted_coords(const Rect& bbox) {
  auto c = alignment_coordinates(bbox);
  SortedCoords s{c, {c[0], c[1], c[2]}, {c[3], c[4], c[5]}};
  std::sort(s.all.begin(), s.all.end());
  std::sort(s.xs.begin(), s.xs.end());
  std::sort(s.ys.begin(), s.ys.end());
  return s;
}

}  // namespace

ValidityResult validity(const GeometrySet& g, const ThresholdProfile& profile) {
  ValidityResult r;
  for (const auto& e : g.elements) {
    if (e.kind == ElementKind::Container) {
      r.per_element[e.id] = {false, "excluded-container"};
      continue;
    }
    if (!counted(e, profile)) {
      r.per_element[e.id] = {false, "excluded-zero-opacity"};
      continue;
    }
    auto v = classify(e, g.canvas, profile);
    ++r.n_total;
    if (v.valid) ++r.n_valid;
    r.per_element[e.id] = std::move(v);
  }
  if (r.n_total == 0) {
    r.score = 1.0;
    r.flags.push_back("no-elements");
  } else {
    r.score = static_cast<double>(r.n_valid) / static_cast<double>(r.n_total);
  }
  return r;
}

std::string_view to_string(AlignmentMode m) {
  return m == AlignmentMode::SameAxis ? "same_axis" : "literal";
}

AlignmentMode alignment_mode_from_string(std::string_view s) {
  if (s == "literal") return AlignmentMode::Literal;
  if (s == "same_axis") return AlignmentMode::SameAxis;
  throw Error(ErrorCode::InvalidArgument, "unknown alignment mode \"" + std::string(s) + "\"");
}

AlignmentResult alignment_detail(const GeometrySet& g, const ThresholdProfile& profile,
                                 AlignmentMode mode) {
  std::vector<SortedCoords> valid;
  for (const auto& e : g.elements) {
    if (counted(e, profile) && classify(e, g.canvas, profile).valid) {
      valid.push_back(sorted_coords(e.bbox));
    }
  }
  AlignmentResult result;
  result.element_count = valid.size();
  if (valid.size() <= 1) return result;

  double total = 0.0;
  for (std::size_t i = 0; i < valid.size(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < valid.size(); ++j) {
      if (i == j) continue;
      double d = mode == AlignmentMode::Literal
                     ? min_gap(valid[i].all, valid[j].all)
                     : std::min(min_gap(valid[i].xs, valid[j].xs), min_gap(valid[i].ys, valid[j].ys));
      nearest = std::min(nearest, d);
    }
    total += nearest;
  }
  result.unclamped = total / (static_cast<double>(valid.size()) * g.canvas.diagonal());
  result.score = std::clamp(result.unclamped, 0.0, 1.0);
  return result;
}

ReadabilityResult readability_detail(const GrayImage& screenshot, const GeometrySet& g) {
  if (std::abs(screenshot.width - g.canvas.width) >= 0.5 ||
      std::abs(screenshot.height - g.canvas.height) >= 0.5) {
    throw Error(ErrorCode::DimensionMismatch,
                "screenshot is " + std::to_string(screenshot.width) + "x" +
                    std::to_string(screenshot.height) + " but the canvas is " +
                    std::to_string(g.canvas.width) + "x" + std::to_string(g.canvas.height));
  }
  ReadabilityResult r;
  if (g.text_regions.empty()) {
    r.flags.push_back("no-text");
    return r;
  }
  double total = 0.0;
  for (const auto& region : g.text_regions) {
    // Multi-rect nodes: per-pixel mean over all of the node's rects.
    GradientSum acc;
    for (const auto& rect : region.rects) {
      try {
        auto s = sobel_gradient_sum(screenshot, rect);
        acc.sum += s.sum;
        acc.pixels += s.pixels;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyRegion) throw;
      }
    }
    double mean = acc.pixels == 0 ? 0.0 : acc.sum / static_cast<double>(acc.pixels);
    r.per_region.push_back(mean);
    total += mean / kMaxSobelMagnitude;
  }
  r.score = total / static_cast<double>(g.text_regions.size());
  return r;
}

double embedding_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "embedding dimensions " + std::to_string(a.size()) +
                                                  " and " + std::to_string(b.size()) + " differ");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "embedding has zero norm");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<double> load_embedding(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw Error(ErrorCode::SchemaMismatch, path.string() + ": expected an array");
  std::vector<double> v;
  for (const auto& x : j) {
    if (!x.is_number()) throw Error(ErrorCode::SchemaMismatch, path.string() + ": non-numeric entry");
    v.push_back(x.get<double>());
  }
  return v;
}

namespace {

template <typename F>
auto labelled(std::string_view source, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(source) + ": " + e.message(), e.details());
  }
}

}  // namespace

MetricReport evaluate(const EvaluateInputs& in) {
  MetricReport report;
  report.profile = in.profile.name;
  report.alignment_mode = std::string(to_string(in.mode));
  Sha256 digest;

  std::string html;
  if (in.html) {
    html = labelled("html", [&] { return read_file(*in.html); });
    digest.update("html\n");
    digest.update(html);
  }

  GeometrySet g;
  if (in.geometry) {
    g = labelled("geometry", [&] { return load_geometry_dump(read_file(*in.geometry)); });
  } else {
    if (!in.html) {
      throw Error(ErrorCode::InvalidArgument, "evaluate needs a geometry dump or an HTML file");
    }
    g = labelled("html", [&] { return resolve_geometry(parse_design(html), in.resolve); });
    report.flags.push_back("geometry-resolved");
  }
  digest.update("geometry\n");
  digest.update(nlohmann::json(g).dump());

  report.validity = validity(g, in.profile);
  for (const auto& f : report.validity.flags) report.flags.push_back(f);
  auto ali = alignment_detail(g, in.profile, in.mode);
  report.alignment = ali.score;
  if (ali.unclamped > 1.0) report.flags.push_back("alignment-clamped");

  if (in.screenshot) {
    auto result = labelled("screenshot", [&] {
      auto bytes = read_file(*in.screenshot);
      digest.update("screenshot\n");
      digest.update(bytes);
      return readability_detail(to_grayscale(load_raster(*in.screenshot)), g);
    });
    report.readability = result.score;
    for (const auto& f : result.flags) report.flags.push_back(f);
  } else {
    report.flags.push_back("readability-skipped");
  }

  if (in.embeddings) {
    const auto& [a, b] = *in.embeddings;
    report.similarity = labelled("embedding", [&] { return embedding_similarity(a, b); });
    digest.update("embeddings\n");
    digest.update(nlohmann::json({a, b}).dump());
  } else {
    report.flags.push_back("similarity-skipped");
  }
  report.inputs_digest = digest.hex_digest();
  return report;
}

}  // namespace posterkit
