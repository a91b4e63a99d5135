#include "css.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

#include "posterkit/error.hpp"

namespace posterkit::css {

std::string trim(std::string_view s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  auto b = std::find_if(s.begin(), s.end(), not_space);
  auto e = std::find_if(s.rbegin(), s.rend(), not_space).base();
  return b < e ? std::string(b, e) : std::string();
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

namespace {

std::string strip_comments(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '/' && i + 1 < text.size() && text[i + 1] == '*') {
      auto end = text.find("*/", i + 2);
      if (end == std::string_view::npos) break;
      i = end + 1;
      continue;
    }
    out.push_back(text[i]);
  }
  return out;
}

// Splits on `sep` at nesting depth 0, outside quotes.
std::vector<std::string> split_top_level(std::string_view text, char sep) {
  std::vector<std::string> parts;
  int depth = 0;
  char quote = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quote) {
      if (c == '\\') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '(') {
      ++depth;
    } else if (c == ')') {
      depth = std::max(0, depth - 1);
    } else if (c == sep && depth == 0) {
      parts.emplace_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  parts.emplace_back(text.substr(start));
  return parts;
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ||
         static_cast<unsigned char>(c) >= 0x80;
}

std::optional<SimpleSelector> parse_selector(std::string_view text) {
  SimpleSelector sel;
  std::size_t i = 0;
  while (i < text.size() && is_ident_char(text[i])) ++i;
  sel.type = to_lower(text.substr(0, i));
  while (i < text.size()) {
    if (text[i] != '.') return std::nullopt;
    std::size_t start = ++i;
    while (i < text.size() && is_ident_char(text[i])) ++i;
    if (i == start) return std::nullopt;
    sel.classes.emplace_back(text.substr(start, i - start));
  }
  if (sel.type.empty() && sel.classes.empty()) return std::nullopt;
  return sel;
}

std::size_t find_block_end(std::string_view text, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < text.size(); ++i) {
    if (text[i] == '{') ++depth;
    if (text[i] == '}' && --depth == 0) return i;
  }
  return text.size();
}

bool parse_number(std::string_view s, double& out, std::size_t& consumed) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E') && i + 1 < s.size() &&
      (std::isdigit(static_cast<unsigned char>(s[i + 1])) || s[i + 1] == '-' || s[i + 1] == '+')) {
    i += 2;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  }
  std::string_view num = s.substr(0, i);
  if (!num.empty() && num[0] == '+') num.remove_prefix(1);
  if (num.empty()) return false;
  auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), out);
  if (ec != std::errc() || ptr != num.data() + num.size()) return false;
  consumed = i;
  return true;
}

}  // namespace

std::vector<StyleDeclaration> parse_declarations(std::string_view block) {
  std::vector<StyleDeclaration> out;
  for (const auto& part : split_top_level(strip_comments(block), ';')) {
    auto colon = part.find(':');
    if (colon == std::string::npos) continue;
    StyleDeclaration decl;
    decl.property = to_lower(trim(std::string_view(part).substr(0, colon)));
    std::string value = trim(std::string_view(part).substr(colon + 1));
    auto bang = value.rfind('!');
    if (bang != std::string::npos && to_lower(trim(std::string_view(value).substr(bang + 1))) == "important") {
      decl.important = true;
      value = trim(std::string_view(value).substr(0, bang));
    }
    decl.value = std::move(value);
    if (!decl.property.empty()) out.push_back(std::move(decl));
  }
  return out;
}

StyleSheet parse_stylesheet(std::string_view raw) {
  StyleSheet sheet;
  std::string text = strip_comments(raw);
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos >= text.size()) break;

    if (text[pos] == '@') {
      std::size_t name_end = pos + 1;
      while (name_end < text.size() && is_ident_char(text[name_end])) ++name_end;
      std::string name = to_lower(std::string_view(text).substr(pos, name_end - pos));
      auto semi = text.find(';', pos);
      auto brace = text.find('{', pos);
      std::size_t end;
      if (brace != std::string::npos && (semi == std::string::npos || brace < semi)) {
        end = find_block_end(text, brace);
      } else {
        end = semi == std::string::npos ? text.size() : semi;
      }
      // Font loading and charset rules do not affect geometry.
      if (name != "@font-face" && name != "@import" && name != "@charset") {
        sheet.notes.push_back({"unsupported-at-rule", name});
      }
      pos = end + 1;
      continue;
    }

    auto brace = text.find('{', pos);
    if (brace == std::string::npos) break;
    auto close = find_block_end(text, brace);
    std::string_view prelude = std::string_view(text).substr(pos, brace - pos);
    std::string_view body =
        std::string_view(text).substr(brace + 1, std::min(close, text.size()) - brace - 1);

    StyleRule rule;
    for (const auto& sel_text : split_top_level(prelude, ',')) {
      std::string sel = trim(sel_text);
      if (sel.empty()) continue;
      if (auto parsed = parse_selector(sel)) {
        rule.selectors.push_back(std::move(*parsed));
      } else {
        sheet.notes.push_back({"unsupported-selector", sel});
      }
    }
    if (!rule.selectors.empty()) {
      rule.declarations = parse_declarations(body);
      sheet.rules.push_back(std::move(rule));
    }
    pos = close + 1;
  }
  return sheet;
}

bool matches(const SimpleSelector& sel, const DesignNode& node) {
  if (node.is_text()) return false;
  if (!sel.type.empty() && sel.type != node.tag) return false;
  return std::all_of(sel.classes.begin(), sel.classes.end(),
                     [&](const std::string& c) { return node.has_class(c); });
}

std::optional<double> resolve_length(std::string_view raw, const LengthContext& ctx) {
  std::string value = to_lower(trim(raw));
  if (value.empty() || value == "auto" || value == "initial" || value == "inherit" ||
      value == "unset" || value == "none") {
    return std::nullopt;
  }
  double number = 0.0;
  std::size_t consumed = 0;
  if (!parse_number(value, number, consumed)) {
    throw Error(ErrorCode::UnresolvableLength, "cannot resolve length \"" + std::string(raw) + "\"");
  }
  std::string unit = value.substr(consumed);
  if (unit.empty()) {
    if (number == 0.0) return 0.0;
    throw Error(ErrorCode::UnresolvableLength, "unitless length \"" + std::string(raw) + "\"");
  }
  if (unit == "px") return number;
  if (unit == "pt") return number * 4.0 / 3.0;
  if (unit == "vw") return number * ctx.viewport_width / 100.0;
  if (unit == "vh") return number * ctx.viewport_height / 100.0;
  if (unit == "em") return number * ctx.font_size;
  if (unit == "rem") return number * ctx.root_font_size;
  if (unit == "%") {
    if (!ctx.percent_basis) {
      throw Error(ErrorCode::UnresolvableLength,
                  "percentage \"" + std::string(raw) + "\" has no reference size");
    }
    return number * *ctx.percent_basis / 100.0;
  }
  throw Error(ErrorCode::UnresolvableLength, "unsupported unit in \"" + std::string(raw) + "\"");
}

std::optional<double> parse_angle(std::string_view raw) {
  std::string value = to_lower(trim(raw));
  double number = 0.0;
  std::size_t consumed = 0;
  if (!parse_number(value, number, consumed)) return std::nullopt;
  std::string unit = value.substr(consumed);
  if (unit == "deg") return number;
  if (unit == "rad") return number * 180.0 / std::numbers::pi;
  if (unit == "grad") return number * 0.9;
  if (unit == "turn") return number * 360.0;
  if (unit.empty() && number == 0.0) return 0.0;
  return std::nullopt;
}

TransformList parse_transform(std::string_view raw) {
  TransformList list;
  std::string value = trim(raw);
  if (value.empty() || to_lower(value) == "none") return list;
  std::size_t pos = 0;
  while (pos < value.size()) {
    while (pos < value.size() && std::isspace(static_cast<unsigned char>(value[pos]))) ++pos;
    if (pos >= value.size()) break;
    auto open = value.find('(', pos);
    if (open == std::string::npos) {
      list.unsupported.push_back(trim(std::string_view(value).substr(pos)));
      break;
    }
    auto close = value.find(')', open);
    if (close == std::string::npos) close = value.size();
    std::string name = to_lower(trim(std::string_view(value).substr(pos, open - pos)));
    auto args = split_top_level(std::string_view(value).substr(open + 1, close - open - 1), ',');
    for (auto& a : args) a = trim(a);
    pos = close + 1;

    if (name == "translate" && (args.size() == 1 || args.size() == 2)) {
      list.ops.push_back({TransformOp::Kind::Translate, args[0], args.size() == 2 ? args[1] : "0", 0.0});
    } else if (name == "translatex" && args.size() == 1) {
      list.ops.push_back({TransformOp::Kind::Translate, args[0], "0", 0.0});
    } else if (name == "translatey" && args.size() == 1) {
      list.ops.push_back({TransformOp::Kind::Translate, "0", args[0], 0.0});
    } else if (name == "rotate" && args.size() == 1 && parse_angle(args[0])) {
      list.ops.push_back({TransformOp::Kind::Rotate, {}, {}, *parse_angle(args[0])});
    } else {
      list.unsupported.push_back(name);
    }
  }
  return list;
}

}  // namespace posterkit::css
