#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>

#include "posterkit/geometry.hpp"

namespace posterkit::detail {

/// 2D affine map: x' = a x + c y + e, y' = b x + d y + f.
struct Affine {
  double a = 1, b = 0, c = 0, d = 1, e = 0, f = 0;

  /// Composition: (*this * o)(p) == (*this)(o(p)).
  Affine operator*(const Affine& o) const;
  std::pair<double, double> apply(double x, double y) const;
  /// Axis-aligned bounds of the mapped rectangle (0,0)-(w,h).
  Rect bounds(double w, double h) const;

  static Affine translate(double tx, double ty);
  static Affine rotate(double degrees);
};

std::string collapse_whitespace(std::string_view s);
std::size_t codepoint_count(std::string_view s);
/// Maps to (-180, 180].
double normalize_angle(double degrees);

}  // namespace posterkit::detail

namespace posterkit {
struct DesignNode;
}

namespace posterkit::detail {

/// Elements that receive a box (and thus a geometry id) during resolution.
bool is_layout_element(const DesignNode& node);

}  // namespace posterkit::detail
