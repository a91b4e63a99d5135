#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "css.hpp"
#include "html_tree.hpp"
#include "posterkit/design.hpp"
#include "posterkit/error.hpp"
#include "resolve_internal.hpp"

namespace posterkit {

namespace detail {

Affine Affine::operator*(const Affine& o) const {
  return {a * o.a + c * o.b,     b * o.a + d * o.b,     a * o.c + c * o.d,
          b * o.c + d * o.d,     a * o.e + c * o.f + e, b * o.e + d * o.f + f};
}

std::pair<double, double> Affine::apply(double x, double y) const {
  return {a * x + c * y + e, b * x + d * y + f};
}

Affine Affine::translate(double tx, double ty) { return {1, 0, 0, 1, tx, ty}; }

Affine Affine::rotate(double degrees) {
  double s = 0.0;
  double c = 1.0;
  double quarter = degrees / 90.0;
  if (quarter == std::round(quarter)) {
    // Exact quarter turns keep axis-aligned boxes exact.
    long q = static_cast<long>(std::round(quarter)) % 4;
    if (q < 0) q += 4;
    constexpr double kSin[] = {0, 1, 0, -1};
    constexpr double kCos[] = {1, 0, -1, 0};
    s = kSin[q];
    c = kCos[q];
  } else {
    double r = degrees * std::numbers::pi / 180.0;
    s = std::sin(r);
    c = std::cos(r);
  }
  return {c, s, -s, c, 0, 0};
}

Rect Affine::bounds(double w, double h) const {
  std::pair<double, double> pts[] = {apply(0, 0), apply(w, 0), apply(0, h), apply(w, h)};
  double x0 = pts[0].first, x1 = pts[0].first, y0 = pts[0].second, y1 = pts[0].second;
  for (const auto& [px, py] : pts) {
    x0 = std::min(x0, px);
    x1 = std::max(x1, px);
    y0 = std::min(y0, py);
    y1 = std::max(y1, py);
  }
  return {x0, y0, x1 - x0, y1 - y0};
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char ch : s) {
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(ch);
  }
  return out;
}

std::size_t codepoint_count(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(
      s.begin(), s.end(), [](char ch) { return (static_cast<unsigned char>(ch) & 0xC0) != 0x80; }));
}

double normalize_angle(double degrees) {
  double a = std::fmod(degrees, 360.0);
  if (a <= -180.0) a += 360.0;
  if (a > 180.0) a -= 360.0;
  return a == 0.0 ? 0.0 : a;
}

bool is_layout_element(const DesignNode& node) {
  return !node.is_text() && node.tag != "br" && !html::is_non_rendered_element(node.tag);
}

}  // namespace detail

namespace {

using detail::Affine;

struct ParentContext {
  std::optional<double> width;
  std::optional<double> height;
  double font_size = 16.0;
  double line_height = 1.2;
  int z = 0;
  double opacity = 1.0;
  double flow_cursor = 0.0;
};

struct Box {
  std::size_t preorder = 0;
  ElementKind kind = ElementKind::Container;
  double w = 0.0;
  double h = 0.0;
  Affine local;
  double rotation = 0.0;
  int z = 0;
  double opacity = 1.0;
  bool in_flow = true;
  std::optional<std::string> text;
  std::vector<std::string> direct_texts;
  std::vector<Box> children;
};

const std::string* style_of(const DesignNode& node, const char* property) {
  auto it = node.resolved_style.find(property);
  return it == node.resolved_style.end() ? nullptr : &it->second;
}

std::optional<double> length_of(const DesignNode& node, const char* property,
                                const css::LengthContext& ctx) {
  const auto* v = style_of(node, property);
  if (!v) return std::nullopt;
  return css::resolve_length(*v, ctx);
}

bool is_visible_paint(std::string_view raw) {
  std::string v = css::to_lower(css::trim(raw));
  v.erase(std::remove(v.begin(), v.end(), ' '), v.end());
  return !(v.empty() || v == "none" || v == "transparent" || v == "initial" || v == "unset" ||
           v == "inherit" || v == "rgba(0,0,0,0)");
}

bool is_visible_border(std::string_view raw) {
  std::string v = css::to_lower(css::trim(raw));
  if (v.empty() || v.find("none") != std::string::npos || v.find("hidden") != std::string::npos) {
    return false;
  }
  auto first = v.substr(0, v.find(' '));
  return !(first == "0" || first == "0px");
}

bool has_url(const std::map<std::string, std::string>& style, const char* property) {
  auto it = style.find(property);
  return it != style.end() && css::to_lower(it->second).find("url(") != std::string::npos;
}

std::optional<double> attribute_px(const DesignNode& node, const char* name) {
  auto it = node.attributes.find(name);
  if (it == node.attributes.end()) return std::nullopt;
  double v = 0.0;
  const auto& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc()) return std::nullopt;
  return v;
}

class Resolver {
 public:
  Resolver(const CanvasSpec& canvas, const ResolveOptions& options)
      : canvas_(canvas), options_(options) {}

  Box measure(const DesignNode& node, const ParentContext& parent) {
    Box box;
    box.preorder = counter_++;
    const double basis_w = parent.width.value_or(canvas_.width);
    const double basis_h = parent.height.value_or(canvas_.height);

    double font = parent.font_size;
    if (const auto* fs = style_of(node, "font-size")) {
      css::LengthContext ctx{parent.font_size, canvas_.width, canvas_.height, parent.font_size, 16.0};
      if (auto v = css::resolve_length(*fs, ctx)) font = *v;
    }
    double line_height = parent.line_height;
    if (const auto* lh = style_of(node, "line-height")) {
      std::string v = css::to_lower(css::trim(*lh));
      double number = 0.0;
      auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), number);
      if (v == "normal") {
        line_height = 1.2;
      } else if (ec == std::errc() && ptr == v.data() + v.size()) {
        line_height = number;
      } else {
        css::LengthContext ctx{font, canvas_.width, canvas_.height, font, 16.0};
        if (auto px = css::resolve_length(v, ctx); px && font > 0) line_height = *px / font;
      }
    }

    css::LengthContext ctx_w{basis_w, canvas_.width, canvas_.height, font, 16.0};
    css::LengthContext ctx_h{basis_h, canvas_.width, canvas_.height, font, 16.0};

    std::string position;
    if (const auto* p = style_of(node, "position")) position = css::to_lower(css::trim(*p));
    const bool absolute = position == "absolute" || position == "fixed";
    box.in_flow = !absolute;

    auto left = length_of(node, "left", ctx_w);
    auto right = length_of(node, "right", ctx_w);
    auto top = length_of(node, "top", ctx_h);
    auto bottom = length_of(node, "bottom", ctx_h);
    auto width = length_of(node, "width", ctx_w);
    auto height = length_of(node, "height", ctx_h);

    const bool is_img = node.tag == "img";
    if (is_img) {
      if (!width) width = attribute_px(node, "width");
      if (!height) height = attribute_px(node, "height");
    }

    // Content analysis: text lines split at <br>, rendered element children.
    std::vector<std::string> lines(1);
    bool has_element_children = false;
    for (const auto& child : node.children) {
      if (child.is_text()) {
        lines.back() += child.text;
        std::string t = detail::collapse_whitespace(child.text);
        if (!t.empty()) box.direct_texts.push_back(std::move(t));
      } else if (child.tag == "br") {
        lines.emplace_back();
      } else if (!html::is_non_rendered_element(child.tag)) {
        has_element_children = true;
      }
    }
    const bool text_only = !has_element_children && !box.direct_texts.empty();

    if (!width && absolute && left && right) width = basis_w - *left - *right;
    if (!height && absolute && top && bottom) height = basis_h - *top - *bottom;
    if (!width && !absolute && !is_img && !text_only && parent.width) width = parent.width;

    if (text_only) {
      std::vector<double> estimates;
      std::string joined;
      for (const auto& line : lines) {
        std::string collapsed = detail::collapse_whitespace(line);
        estimates.push_back(static_cast<double>(detail::codepoint_count(collapsed)) * font *
                            options_.text_width_factor);
        if (!joined.empty() && !collapsed.empty()) joined += ' ';
        joined += collapsed;
      }
      box.text = joined;
      double line_count = 0.0;
      if (!width) {
        width = *std::max_element(estimates.begin(), estimates.end());
        line_count = static_cast<double>(estimates.size());
      } else {
        for (double est : estimates) {
          line_count += *width > 0 ? std::max(1.0, std::ceil(est / *width)) : 1.0;
        }
      }
      if (!height) height = line_count * font * line_height;
    }

    int z = parent.z;
    if (const auto* zi = style_of(node, "z-index")) {
      std::string v = css::trim(*zi);
      int parsed = 0;
      auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), parsed);
      if (ec == std::errc() && ptr == v.data() + v.size()) z = parsed;
    }
    double opacity = 1.0;
    if (const auto* op = style_of(node, "opacity")) {
      std::string v = css::trim(*op);
      bool percent = !v.empty() && v.back() == '%';
      if (percent) v.pop_back();
      double parsed = 1.0;
      auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), parsed);
      if (ec == std::errc()) opacity = std::clamp(percent ? parsed / 100.0 : parsed, 0.0, 1.0);
    }
    box.z = z;
    box.opacity = parent.opacity * opacity;

    ParentContext child_ctx{width, height, font, line_height, z, box.opacity, 0.0};
    double content_right = 0.0;
    double content_bottom = 0.0;
    for (const auto& child : node.children) {
      if (!detail::is_layout_element(child)) continue;
      Box cb = measure(child, child_ctx);
      Rect extent = cb.local.bounds(cb.w, cb.h);
      content_right = std::max(content_right, extent.right());
      content_bottom = std::max(content_bottom, extent.bottom());
      if (cb.in_flow) child_ctx.flow_cursor += cb.h;
      box.children.push_back(std::move(cb));
    }
    content_bottom = std::max(content_bottom, child_ctx.flow_cursor);
    box.w = std::max(0.0, width.value_or(content_right));
    box.h = std::max(0.0, height.value_or(content_bottom));

    double x = 0.0;
    double y = 0.0;
    if (absolute) {
      x = left ? *left : right ? basis_w - *right - box.w : 0.0;
      y = top ? *top : bottom ? basis_h - *bottom - box.h : parent.flow_cursor;
    } else {
      y = parent.flow_cursor;
      if (position == "relative") {
        x += left ? *left : right ? -*right : 0.0;
        y += top ? *top : bottom ? -*bottom : 0.0;
      }
    }

    Affine own;
    if (const auto* tf = style_of(node, "transform")) {
      css::LengthContext tx_ctx{box.w, canvas_.width, canvas_.height, font, 16.0};
      css::LengthContext ty_ctx{box.h, canvas_.width, canvas_.height, font, 16.0};
      for (const auto& op : css::parse_transform(*tf).ops) {
        if (op.kind == css::TransformOp::Kind::Translate) {
          own = own * Affine::translate(css::resolve_length(op.x, tx_ctx).value_or(0.0),
                                        css::resolve_length(op.y, ty_ctx).value_or(0.0));
        } else {
          own = own * Affine::rotate(op.degrees);
          box.rotation += op.degrees;
        }
      }
    }
    box.local = Affine::translate(x, y) * Affine::translate(box.w / 2, box.h / 2) * own *
                Affine::translate(-box.w / 2, -box.h / 2);

    if (is_img || has_url(node.resolved_style, "background") ||
        has_url(node.unsupported_style, "background-image")) {
      box.kind = ElementKind::Image;
    } else if (text_only) {
      box.kind = ElementKind::Text;
    } else if ((style_of(node, "background") && is_visible_paint(*style_of(node, "background"))) ||
               (style_of(node, "background-color") &&
                is_visible_paint(*style_of(node, "background-color"))) ||
               (style_of(node, "border") && is_visible_border(*style_of(node, "border")))) {
      box.kind = ElementKind::Shape;
    } else {
      box.kind = ElementKind::Container;
    }
    if (box.kind != ElementKind::Text) box.text.reset();
    return box;
  }

  void place(const Box& box, const Affine& parent_to_canvas, double parent_angle, GeometrySet& out) {
    Affine to_canvas = parent_to_canvas * box.local;
    double angle = parent_angle + box.rotation;
    Rect bbox = to_canvas.bounds(box.w, box.h);
    ElementGeometry e;
    e.id = "e" + std::to_string(box.preorder);
    e.kind = box.kind;
    e.bbox = bbox;
    e.z = box.z;
    e.opacity = box.opacity;
    e.angle = detail::normalize_angle(angle);
    e.text = box.text;
    out.elements.push_back(std::move(e));
    for (const auto& t : box.direct_texts) out.text_regions.push_back({t, {bbox}});
    for (const auto& child : box.children) place(child, to_canvas, angle, out);
  }

 private:
  CanvasSpec canvas_;
  ResolveOptions options_;
  std::size_t counter_ = 0;
};

}  // namespace

GeometrySet resolve_geometry(const DesignDocument& doc, const ResolveOptions& options) {
  GeometrySet g;
  g.canvas = doc.canvas;
  const auto& poster = doc.poster();

  // The poster's inherited text settings seed its children.
  ParentContext root_ctx{doc.canvas.width, doc.canvas.height, 16.0, 1.2, 0, 1.0, 0.0};
  Resolver resolver(doc.canvas, options);
  Box poster_box = resolver.measure(poster, root_ctx);
  // The poster defines the canvas: children are laid out in canvas space.
  Affine identity;
  for (const auto& child : poster_box.children) {
    resolver.place(child, identity, 0.0, g);
  }
  for (const auto& t : poster_box.direct_texts) {
    g.text_regions.push_back({t, {doc.canvas.bounds()}});
  }
  return g;
}

}  // namespace posterkit
