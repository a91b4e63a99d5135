#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace posterkit {

// Canvas-origin top-left, y grows downward, CSS pixels throughout.

struct Rect {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double area() const { return w * h; }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h);
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Area of the intersection of two rectangles (0 when disjoint).
double intersection_area(const Rect& a, const Rect& b);

struct CanvasSpec {
  double width = 0.0;
  double height = 0.0;

  double diagonal() const { return std::hypot(width, height); }
  double area() const { return width * height; }
  Rect bounds() const { return {0.0, 0.0, width, height}; }

  friend bool operator==(const CanvasSpec&, const CanvasSpec&) = default;
};

enum class ElementKind { Text, Image, Shape, Container };

std::string_view to_string(ElementKind kind);
std::optional<ElementKind> element_kind_from_string(std::string_view s);

struct ElementGeometry {
  std::string id;
  ElementKind kind = ElementKind::Shape;
  Rect bbox;  // axis-aligned box after rotation
  int z = 0;
  double opacity = 1.0;
  double angle = 0.0;  // degrees
  std::optional<std::string> text;

  friend bool operator==(const ElementGeometry&, const ElementGeometry&) = default;
};

/// {x_left, x_center, x_right, y_top, y_center, y_bottom}
using AlignmentCoordinates = std::array<double, 6>;
AlignmentCoordinates alignment_coordinates(const Rect& bbox);
inline AlignmentCoordinates alignment_coordinates(const ElementGeometry& e) {
  return alignment_coordinates(e.bbox);
}

struct TextRegion {
  std::string text;
  std::vector<Rect> rects;

  friend bool operator==(const TextRegion&, const TextRegion&) = default;
};

struct GeometrySet {
  CanvasSpec canvas;
  std::vector<ElementGeometry> elements;
  std::vector<TextRegion> text_regions;

  friend bool operator==(const GeometrySet&, const GeometrySet&) = default;
};

struct Violation {
  std::string subject;    // element id, "canvas", or "text_regions[i]"
  std::string invariant;  // short code of the broken rule
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Empty iff every GeometrySet / ElementGeometry / CanvasSpec invariant holds.
std::vector<Violation> validate_geometry_set(const GeometrySet& g);

bool is_whitespace_only(std::string_view s);

void to_json(nlohmann::json& j, const Rect& r);
void from_json(const nlohmann::json& j, Rect& r);
void to_json(nlohmann::json& j, const CanvasSpec& c);
void from_json(const nlohmann::json& j, CanvasSpec& c);
void to_json(nlohmann::json& j, const ElementGeometry& e);
void from_json(const nlohmann::json& j, ElementGeometry& e);
void to_json(nlohmann::json& j, const TextRegion& t);
void from_json(const nlohmann::json& j, TextRegion& t);
void to_json(nlohmann::json& j, const Violation& v);

/// Canonical encoding; text regions are written under "text_nodes" so the
/// output is itself a valid geometry dump.
void to_json(nlohmann::json& j, const GeometrySet& g);
void from_json(const nlohmann::json& j, GeometrySet& g);

}  // namespace posterkit
