#include <algorithm>
#include <array>
#include <tuple>

#include "css.hpp"
#include "html_tree.hpp"
#include "posterkit/design.hpp"
#include "posterkit/digest.hpp"
#include "posterkit/error.hpp"

namespace posterkit {

namespace {

constexpr std::array<std::string_view, 20> kSupportedProperties = {
    "position",  "left",        "top",         "right",          "bottom",
    "width",     "height",      "transform",   "z-index",        "opacity",
    "font-size", "line-height", "letter-spacing", "font-family", "text-align",
    "color",     "background",  "background-color", "border-radius", "border"};

// (important, inline, class count, type count, source order)
using CascadeKey = std::tuple<bool, bool, std::size_t, std::size_t, std::size_t>;

struct Candidate {
  CascadeKey key;
  std::string value;
};

void apply_cascade(DesignNode& node, const css::StyleSheet& sheet) {
  if (node.is_text()) return;
  std::map<std::string, Candidate> winners;
  std::size_t order = 0;
  auto offer = [&](const StyleDeclaration& decl, CascadeKey key) {
    auto it = winners.find(decl.property);
    if (it == winners.end() || !(key < it->second.key)) {
      winners[decl.property] = Candidate{key, decl.value};
    }
  };
  for (const auto& rule : sheet.rules) {
    // A rule applies with the specificity of its most specific matching selector.
    std::optional<std::pair<std::size_t, std::size_t>> best;
    for (const auto& sel : rule.selectors) {
      if (!css::matches(sel, node)) continue;
      std::pair<std::size_t, std::size_t> spec{sel.classes.size(), sel.type.empty() ? 0 : 1};
      if (!best || *best < spec) best = spec;
    }
    for (const auto& decl : rule.declarations) {
      ++order;
      if (best) offer(decl, {decl.important, false, best->first, best->second, order});
    }
  }
  for (const auto& decl : node.inline_style) {
    offer(decl, {decl.important, true, 0, 0, ++order});
  }
  for (auto& [property, candidate] : winners) {
    if (is_supported_property(property)) {
      node.resolved_style[property] = std::move(candidate.value);
    } else {
      node.unsupported_style[property] = std::move(candidate.value);
    }
  }
  for (auto& child : node.children) apply_cascade(child, sheet);
}

void collect_style_text(const DesignNode& node, std::string& out) {
  if (node.tag == "style") {
    for (const auto& c : node.children) {
      if (c.is_text()) out += c.text + "\n";
    }
    return;
  }
  for (const auto& c : node.children) collect_style_text(c, out);
}

void find_posters(const DesignNode& node, std::vector<std::size_t>& path,
                  std::vector<std::vector<std::size_t>>& found) {
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    const auto& child = node.children[i];
    if (child.is_text()) continue;
    path.push_back(i);
    if (child.has_class("poster")) found.push_back(path);
    find_posters(child, path, found);
    path.pop_back();
  }
}

double font_size_along(const DesignNode& root, const std::vector<std::size_t>& path) {
  double font = 16.0;
  const DesignNode* node = &root;
  for (auto index : path) {
    node = &node->children[index];
    if (auto it = node->resolved_style.find("font-size"); it != node->resolved_style.end()) {
      css::LengthContext ctx{font, 0.0, 0.0, font, 16.0};
      try {
        if (auto v = css::resolve_length(it->second, ctx)) font = *v;
      } catch (const Error&) {
        // keep inherited size
      }
    }
  }
  return font;
}

}  // namespace

bool is_supported_property(std::string_view property) {
  return std::find(kSupportedProperties.begin(), kSupportedProperties.end(), property) !=
         kSupportedProperties.end();
}

bool DesignNode::has_class(std::string_view cls) const {
  return std::find(classes.begin(), classes.end(), cls) != classes.end();
}

const DesignNode& DesignDocument::poster() const {
  const DesignNode* node = &root;
  for (auto index : poster_path) node = &node->children.at(index);
  return *node;
}

DesignDocument parse_design(std::string_view html_text) {
  DesignDocument doc;
  doc.source_digest = sha256_hex(html_text);
  doc.root = html::build_tree(html_text);

  std::string style_text;
  collect_style_text(doc.root, style_text);
  auto sheet = css::parse_stylesheet(style_text);
  doc.stylesheet_notes = sheet.notes;
  apply_cascade(doc.root, sheet);

  std::vector<std::size_t> path;
  std::vector<std::vector<std::size_t>> posters;
  find_posters(doc.root, path, posters);
  if (posters.empty()) {
    throw Error(ErrorCode::NoPosterContainer, "no element carries class \"poster\"");
  }
  doc.poster_path = posters.front();
  doc.poster_count = posters.size();

  const auto& poster = doc.poster();
  double font = font_size_along(doc.root, doc.poster_path);
  // The poster defines the canvas, so relative units have nothing to refer to.
  css::LengthContext ctx{std::nullopt, 0.0, 0.0, font, 16.0};
  auto dimension = [&](const char* property) -> double {
    auto it = poster.resolved_style.find(property);
    if (it == poster.resolved_style.end()) {
      throw Error(ErrorCode::MissingCanvasSize, std::string(".poster has no ") + property);
    }
    std::optional<double> v;
    try {
      v = css::resolve_length(it->second, ctx);
    } catch (const Error&) {
      v.reset();
    }
    if (!v || !(*v > 0.0) || !std::isfinite(*v)) {
      throw Error(ErrorCode::MissingCanvasSize,
                  std::string(".poster ") + property + " \"" + it->second + "\" is not an absolute length");
    }
    return *v;
  };
  doc.canvas.width = dimension("width");
  doc.canvas.height = dimension("height");
  return doc;
}

void to_json(nlohmann::json& j, const DesignNode& n) {
  if (n.is_text()) {
    j = nlohmann::json{{"tag", n.tag}, {"text", n.text}};
    return;
  }
  nlohmann::json inline_style = nlohmann::json::array();
  for (const auto& d : n.inline_style) {
    inline_style.push_back({{"property", d.property}, {"value", d.value}, {"important", d.important}});
  }
  j = nlohmann::json{{"tag", n.tag},
                     {"classes", n.classes},
                     {"attributes", n.attributes},
                     {"inline_style", inline_style},
                     {"resolved_style", n.resolved_style},
                     {"unsupported_style", n.unsupported_style},
                     {"children", n.children}};
}

void to_json(nlohmann::json& j, const DesignDocument& d) {
  j = nlohmann::json{{"canvas", d.canvas},
                     {"poster_path", d.poster_path},
                     {"source_digest", d.source_digest},
                     {"root", d.root}};
}

}  // namespace posterkit
