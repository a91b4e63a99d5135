#include "posterkit/geometry.hpp"

#include <algorithm>
#include <set>

#include "posterkit/detail/json_util.hpp"
#include "posterkit/error.hpp"

namespace posterkit {

using nlohmann::json;

double intersection_area(const Rect& a, const Rect& b) {
  double w = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  double h = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

std::string_view to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::Text: return "text";
    case ElementKind::Image: return "image";
    case ElementKind::Shape: return "shape";
    case ElementKind::Container: return "container";
  }
  return "shape";
}

std::optional<ElementKind> element_kind_from_string(std::string_view s) {
  if (s == "text") return ElementKind::Text;
  if (s == "image") return ElementKind::Image;
  if (s == "shape") return ElementKind::Shape;
  if (s == "container") return ElementKind::Container;
  return std::nullopt;
}

AlignmentCoordinates alignment_coordinates(const Rect& b) {
  return {b.x, b.x + b.w / 2.0, b.x + b.w, b.y, b.y + b.h / 2.0, b.y + b.h};
}

bool is_whitespace_only(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  });
}

std::vector<Violation> validate_geometry_set(const GeometrySet& g) {
  std::vector<Violation> out;
  const auto& c = g.canvas;
  if (!(std::isfinite(c.width) && std::isfinite(c.height) && c.width > 0 && c.height > 0)) {
    out.push_back({"canvas", "canvas-size", "canvas width and height must be finite and > 0"});
  }

  std::set<std::string> seen;
  for (const auto& e : g.elements) {
    if (!seen.insert(e.id).second) {
      out.push_back({e.id, "duplicate-id", "element id \"" + e.id + "\" is not unique"});
    }
    if (!e.bbox.finite()) {
      out.push_back({e.id, "non-finite-bbox", "bbox coordinates must be finite"});
    } else if (e.bbox.w < 0 || e.bbox.h < 0) {
      out.push_back({e.id, "negative-size", "bbox width and height must be >= 0"});
    }
    if (!(e.opacity >= 0.0 && e.opacity <= 1.0)) {
      out.push_back({e.id, "opacity-range", "opacity must lie in [0,1]"});
    }
    if (!std::isfinite(e.angle)) {
      out.push_back({e.id, "non-finite-angle", "angle must be finite"});
    }
    if (e.text.has_value() && e.kind != ElementKind::Text) {
      out.push_back({e.id, "text-on-non-text", "only text elements may carry text"});
    }
  }

  for (std::size_t i = 0; i < g.text_regions.size(); ++i) {
    const auto& t = g.text_regions[i];
    std::string subject = "text_regions[" + std::to_string(i) + "]";
    if (is_whitespace_only(t.text)) {
      out.push_back({subject, "whitespace-text", "text region text must not be whitespace-only"});
    }
    if (t.rects.empty()) {
      out.push_back({subject, "no-rects", "text region must carry at least one rect"});
    }
    for (const auto& r : t.rects) {
      if (!r.finite() || r.w < 0 || r.h < 0) {
        out.push_back({subject, "bad-rect", "text rects must be finite with w,h >= 0"});
        break;
      }
    }
  }
  return out;
}

void to_json(json& j, const Rect& r) { j = json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}}; }

void from_json(const json& j, Rect& r) {
  detail::expect_object(j, {"x", "y", "w", "h"}, {}, "rect");
  r.x = detail::number_field(j, "x", "rect");
  r.y = detail::number_field(j, "y", "rect");
  r.w = detail::number_field(j, "w", "rect");
  r.h = detail::number_field(j, "h", "rect");
}

void to_json(json& j, const CanvasSpec& c) { j = json{{"width", c.width}, {"height", c.height}}; }

void from_json(const json& j, CanvasSpec& c) {
  detail::expect_object(j, {"width", "height"}, {}, "canvas");
  c.width = detail::number_field(j, "width", "canvas");
  c.height = detail::number_field(j, "height", "canvas");
}

void to_json(json& j, const ElementGeometry& e) {
  j = json{{"id", e.id},   {"kind", to_string(e.kind)}, {"bbox", e.bbox},
           {"z", e.z},     {"opacity", e.opacity},       {"angle", e.angle},
           {"text", nullptr}};
  if (e.text) j["text"] = *e.text;
}

void from_json(const json& j, ElementGeometry& e) {
  constexpr std::string_view ctx = "element";
  detail::expect_object(j, {"id", "kind", "bbox", "z", "opacity", "angle", "text"}, {}, ctx);
  e.id = detail::string_field(j, "id", ctx);
  auto kind = element_kind_from_string(detail::string_field(j, "kind", ctx));
  if (!kind) throw Error(ErrorCode::SchemaMismatch, "element \"" + e.id + "\": unknown kind");
  e.kind = *kind;
  e.bbox = j.at("bbox").get<Rect>();
  e.z = static_cast<int>(detail::integer_field(j, "z", ctx));
  e.opacity = detail::number_field(j, "opacity", ctx);
  e.angle = detail::number_field(j, "angle", ctx);
  const auto& text = j.at("text");
  if (text.is_null()) {
    e.text.reset();
  } else if (text.is_string()) {
    e.text = text.get<std::string>();
  } else {
    throw Error(ErrorCode::SchemaMismatch, "element \"" + e.id + "\": text must be string or null");
  }
}

void to_json(json& j, const TextRegion& t) { j = json{{"text", t.text}, {"rects", t.rects}}; }

void from_json(const json& j, TextRegion& t) {
  detail::expect_object(j, {"text", "rects"}, {}, "text_node");
  t.text = detail::string_field(j, "text", "text_node");
  t.rects.clear();
  for (const auto& r : detail::array_field(j, "rects", "text_node")) t.rects.push_back(r.get<Rect>());
}

void to_json(json& j, const Violation& v) {
  j = json{{"subject", v.subject}, {"invariant", v.invariant}, {"message", v.message}};
}

void to_json(json& j, const GeometrySet& g) {
  j = json{{"canvas", g.canvas}, {"elements", g.elements}, {"text_nodes", g.text_regions}};
}

void from_json(const json& j, GeometrySet& g) {
  detail::expect_object(j, {"canvas", "elements", "text_nodes"}, {}, "geometry");
  g.canvas = j.at("canvas").get<CanvasSpec>();
  g.elements.clear();
  for (const auto& e : detail::array_field(j, "elements", "geometry")) {
    g.elements.push_back(e.get<ElementGeometry>());
  }
  g.text_regions.clear();
  for (const auto& t : detail::array_field(j, "text_nodes", "geometry")) {
    g.text_regions.push_back(t.get<TextRegion>());
  }
}

}  // namespace posterkit
