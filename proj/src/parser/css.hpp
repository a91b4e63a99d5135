#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "posterkit/design.hpp"

namespace posterkit::css {

/// Parses a declaration list ("a: b; c: d !important").
std::vector<StyleDeclaration> parse_declarations(std::string_view block);

struct SimpleSelector {
  std::string type;  // empty for class-only selectors
  std::vector<std::string> classes;
};

struct StyleRule {
  std::vector<SimpleSelector> selectors;
  std::vector<StyleDeclaration> declarations;
};

struct StyleSheet {
  std::vector<StyleRule> rules;
  std::vector<StyleSheetNote> notes;
};

/// Only type, class and compound type.class selectors are kept; anything
/// else is dropped and noted.
StyleSheet parse_stylesheet(std::string_view text);

bool matches(const SimpleSelector& sel, const DesignNode& node);

/// Lengths resolve against this context.
struct LengthContext {
  std::optional<double> percent_basis;  // absent: percentages unresolvable
  double viewport_width = 0.0;
  double viewport_height = 0.0;
  double font_size = 16.0;
  double root_font_size = 16.0;
};

/// nullopt for "auto" / empty; throws UnresolvableLength for anything
/// outside px, pt, %, vw, vh, em, rem or a bare 0.
std::optional<double> resolve_length(std::string_view value, const LengthContext& ctx);

/// Angle in degrees from deg / rad / grad / turn / bare 0.
std::optional<double> parse_angle(std::string_view value);

struct TransformOp {
  enum class Kind { Translate, Rotate } kind;
  std::string x, y;        // raw lengths for Translate
  double degrees = 0.0;    // Rotate
};

struct TransformList {
  std::vector<TransformOp> ops;
  std::vector<std::string> unsupported;  // function names skipped
};

TransformList parse_transform(std::string_view value);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

}  // namespace posterkit::css
