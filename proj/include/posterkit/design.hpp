#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "posterkit/geometry.hpp"

namespace posterkit {

struct StyleDeclaration {
  std::string property;  // lower-case
  std::string value;
  bool important = false;

  friend bool operator==(const StyleDeclaration&, const StyleDeclaration&) = default;
};

/// Element or text node of a parsed poster document. Text nodes use the
/// tag "#text" and carry their decoded character data in `text`.
struct DesignNode {
  std::string tag;
  std::vector<std::string> classes;
  std::map<std::string, std::string> attributes;
  std::vector<StyleDeclaration> inline_style;
  /// Cascaded values of whitelisted properties only.
  std::map<std::string, std::string> resolved_style;
  /// Cascaded values of everything outside the whitelist, preserved raw.
  std::map<std::string, std::string> unsupported_style;
  std::vector<DesignNode> children;
  std::string text;

  bool is_text() const { return tag == "#text"; }
  bool has_class(std::string_view cls) const;

  friend bool operator==(const DesignNode&, const DesignNode&) = default;
};

/// Something in a <style> block the cascade skipped (selector or at-rule).
struct StyleSheetNote {
  std::string code;  // "unsupported-selector" | "unsupported-at-rule"
  std::string text;

  friend bool operator==(const StyleSheetNote&, const StyleSheetNote&) = default;
};

struct DesignDocument {
  CanvasSpec canvas;
  DesignNode root;  // synthetic "#document" node
  /// Child indices leading from `root` to the first .poster element.
  std::vector<std::size_t> poster_path;
  std::size_t poster_count = 0;
  std::vector<StyleSheetNote> stylesheet_notes;
  std::string source_digest;

  const DesignNode& poster() const;

  friend bool operator==(const DesignDocument&, const DesignDocument&) = default;
};

/// CSS properties the cascade resolves; everything else is raw-preserved.
bool is_supported_property(std::string_view property);

/// Throws NoPosterContainer, MalformedMarkup or MissingCanvasSize.
DesignDocument parse_design(std::string_view html_text);

struct ResolveOptions {
  /// Text width estimate = chars x font_size x text_width_factor.
  double text_width_factor = 0.6;
};

/// Box geometry for every rendered element under .poster. Element ids are
/// "e<k>", k being the element's preorder index below the poster.
/// Throws UnresolvableLength.
GeometrySet resolve_geometry(const DesignDocument& doc, const ResolveOptions& options = {});

/// Parses the harness geometry dump. Throws SchemaMismatch or
/// InvariantViolation (with the violation list in details()).
GeometrySet load_geometry_dump(std::string_view bytes);

enum class LintSeverity { Error, Warn };

std::string_view to_string(LintSeverity s);

struct LintFinding {
  LintSeverity severity = LintSeverity::Warn;
  std::string code;
  std::string message;
  std::string node_path;
  std::size_t document_order = 0;

  friend bool operator==(const LintFinding&, const LintFinding&) = default;
};

struct LintReport {
  std::vector<LintFinding> findings;

  bool has_error(std::string_view code) const;
  bool has_errors() const;
};

LintReport lint_poster(const DesignDocument& doc, const ResolveOptions& options = {});

void to_json(nlohmann::json& j, const LintFinding& f);
void to_json(nlohmann::json& j, const LintReport& r);
void to_json(nlohmann::json& j, const DesignNode& n);
void to_json(nlohmann::json& j, const DesignDocument& d);

}  // namespace posterkit
