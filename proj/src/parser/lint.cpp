#include <algorithm>
#include <map>

#include "css.hpp"
#include "html_tree.hpp"
#include "posterkit/design.hpp"
#include "posterkit/error.hpp"
#include "resolve_internal.hpp"

namespace posterkit {

std::string_view to_string(LintSeverity s) { return s == LintSeverity::Error ? "error" : "warn"; }

bool LintReport::has_error(std::string_view code) const {
  return std::any_of(findings.begin(), findings.end(), [&](const LintFinding& f) {
    return f.severity == LintSeverity::Error && f.code == code;
  });
}

bool LintReport::has_errors() const {
  return std::any_of(findings.begin(), findings.end(),
                     [](const LintFinding& f) { return f.severity == LintSeverity::Error; });
}

void to_json(nlohmann::json& j, const LintFinding& f) {
  j = nlohmann::json{{"severity", to_string(f.severity)},
                     {"code", f.code},
                     {"message", f.message},
                     {"node_path", f.node_path}};
}

void to_json(nlohmann::json& j, const LintReport& r) {
  j = nlohmann::json{{"findings", r.findings}};
}

namespace {

std::string path_segment(const DesignNode& node, std::size_t element_index) {
  std::string seg = node.is_text() ? "#text" : node.tag;
  for (const auto& c : node.classes) seg += "." + c;
  seg += ":nth-child(" + std::to_string(element_index + 1) + ")";
  return seg;
}

class Linter {
 public:
  Linter(const DesignDocument& doc, const ResolveOptions& options) : doc_(doc), options_(options) {}

  LintReport run() {
    walk(doc_.root, "", 0, false);
    check_geometry();
    std::stable_sort(report_.findings.begin(), report_.findings.end(),
                     [](const LintFinding& a, const LintFinding& b) {
                       return std::tie(a.document_order, a.code) < std::tie(b.document_order, b.code);
                     });
    return std::move(report_);
  }

 private:
  void add(LintSeverity severity, std::string code, std::string message, const std::string& path,
           std::size_t order) {
    report_.findings.push_back({severity, std::move(code), std::move(message), path, order});
  }

  // on_path_depth: number of poster_path steps matched so far; larger than
  // the path length once the walk has left the path.
  void walk(const DesignNode& node, const std::string& path, std::size_t on_path_depth,
            bool inside_poster, bool laid_out = true) {
    std::size_t my_order = order_++;
    bool on_path = !inside_poster && on_path_depth <= doc_.poster_path.size();
    bool is_poster = on_path && on_path_depth == doc_.poster_path.size();

    if (!node.is_text()) {
      check_styles(node, path, my_order);
      if (node.tag == "style" && !saw_style_) {
        saw_style_ = true;
        first_style_order_ = my_order;
        first_style_path_ = path;
      }
      if (node.has_class("poster") && !is_poster) {
        add(LintSeverity::Error, "multiple-poster-containers",
            "only one element may carry class \"poster\"", path, my_order);
      }
    }
    if (is_poster) {
      poster_order_ = my_order;
      poster_path_str_ = path;
    }
    // Same preorder as the geometry resolver, so index k is element "e<k>".
    bool boxed = (is_poster || inside_poster) && laid_out && detail::is_layout_element(node);
    if (boxed) layout_nodes_.push_back({path, my_order});

    std::size_t element_index = 0;
    for (std::size_t i = 0; i < node.children.size(); ++i) {
      const auto& child = node.children[i];
      std::string child_path =
          (path.empty() ? "" : path + " > ") + path_segment(child, element_index);
      if (!child.is_text()) ++element_index;

      bool child_on_path = on_path && !is_poster && doc_.poster_path[on_path_depth] == i;
      if (on_path && !is_poster && !child_on_path && renders_content(child)) {
        add(LintSeverity::Error, "content-outside-poster",
            "rendered content must be placed inside .poster", child_path, order_);
        skip_subtree(child);
        continue;
      }
      if (child_on_path) {
        walk(child, child_path, on_path_depth + 1, false);
      } else {
        walk(child, child_path, doc_.poster_path.size() + 1, inside_poster || is_poster, boxed);
      }
    }
  }

  void skip_subtree(const DesignNode& node) {
    ++order_;
    for (const auto& c : node.children) skip_subtree(c);
  }

  static bool renders_content(const DesignNode& node) {
    if (node.is_text()) return !is_whitespace_only(node.text);
    if (node.tag == "html") {
      return std::any_of(node.children.begin(), node.children.end(), renders_content);
    }
    return !html::is_non_rendered_element(node.tag);
  }

  void check_styles(const DesignNode& node, const std::string& path, std::size_t order) {
    for (const auto& [property, value] : node.unsupported_style) {
      add(LintSeverity::Warn, "unsupported-property",
          "CSS property \"" + property + "\" is outside the supported subset", path, order);
    }
    if (auto it = node.resolved_style.find("transform"); it != node.resolved_style.end()) {
      for (const auto& fn : css::parse_transform(it->second).unsupported) {
        add(LintSeverity::Warn, "unsupported-transform",
            "transform function \"" + fn + "\" is ignored", path, order);
      }
    }
  }

  void check_geometry() {
    for (const auto& note : doc_.stylesheet_notes) {
      add(LintSeverity::Warn, note.code, "style rule skipped: " + note.text, first_style_path_,
          first_style_order_);
    }
    GeometrySet g;
    try {
      g = resolve_geometry(doc_, options_);
    } catch (const Error& e) {
      add(LintSeverity::Error, "unresolvable-length", e.message(), poster_path_str_, poster_order_);
      return;
    }
    const auto& canvas = doc_.canvas;
    for (const auto& e : g.elements) {
      const auto& b = e.bbox;
      bool off = b.right() <= 0.0 || b.x >= canvas.width || b.bottom() <= 0.0 || b.y >= canvas.height;
      if (!off) continue;
      std::size_t index = std::stoul(e.id.substr(1));
      const auto& [path, order] = layout_nodes_.at(index);
      add(LintSeverity::Warn, "off-canvas", "element " + e.id + " lies entirely outside the canvas",
          path, order);
    }
  }

  const DesignDocument& doc_;
  ResolveOptions options_;
  LintReport report_;
  std::size_t order_ = 0;
  std::size_t poster_order_ = 0;
  std::string poster_path_str_;
  std::size_t first_style_order_ = 0;
  std::string first_style_path_;
  bool saw_style_ = false;
  std::vector<std::pair<std::string, std::size_t>> layout_nodes_;
};

}  // namespace

LintReport lint_poster(const DesignDocument& doc, const ResolveOptions& options) {
  return Linter(doc, options).run();
}

}  // namespace posterkit
