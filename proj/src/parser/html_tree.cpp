#include "html_tree.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>

#include "css.hpp"
#include "posterkit/error.hpp"

namespace posterkit::html {

namespace {

constexpr std::array<std::string_view, 14> kVoidElements = {
    "area", "base", "br", "col", "embed", "hr", "img",
    "input", "link", "meta", "param", "source", "track", "wbr"};

// Elements whose end tag may be omitted; closing their parent closes them.
constexpr std::array<std::string_view, 19> kOptionalEnd = {
    "p",     "li",    "dt",    "dd",       "option", "optgroup", "tr",
    "td",    "th",    "thead", "tbody",    "tfoot",  "colgroup", "rb",
    "rt",    "rp",    "html",  "head",     "body"};

constexpr std::array<std::string_view, 4> kRawText = {"script", "style", "textarea", "title"};

constexpr std::array<std::string_view, 11> kNonRendered = {
    "#document", "html", "head", "style", "script", "meta",
    "link",      "title", "base", "noscript", "template"};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& set, std::string_view v) {
  return std::find(set.begin(), set.end(), v) != set.end();
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':';
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f';
}

void append_utf8(std::string& out, unsigned long cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

struct NamedEntity {
  std::string_view name;
  unsigned long codepoint;
};

constexpr NamedEntity kNamedEntities[] = {
    {"amp", '&'},      {"lt", '<'},        {"gt", '>'},       {"quot", '"'},
    {"apos", '\''},    {"nbsp", 0xA0},     {"copy", 0xA9},    {"reg", 0xAE},
    {"trade", 0x2122}, {"mdash", 0x2014},  {"ndash", 0x2013}, {"hellip", 0x2026},
    {"middot", 0xB7},  {"bull", 0x2022},   {"laquo", 0xAB},   {"raquo", 0xBB},
    {"lsquo", 0x2018}, {"rsquo", 0x2019},  {"ldquo", 0x201C}, {"rdquo", 0x201D},
    {"deg", 0xB0},     {"times", 0xD7},    {"euro", 0x20AC},  {"pound", 0xA3},
    {"yen", 0xA5},     {"cent", 0xA2},     {"sect", 0xA7},    {"para", 0xB6}};

class TreeBuilder {
 public:
  explicit TreeBuilder(std::string_view src) : src_(src) {
    root_.tag = "#document";
    stack_.push_back(&root_);
  }

  DesignNode build() {
    while (pos_ < src_.size()) {
      if (src_[pos_] == '<' && pos_ + 1 < src_.size()) {
        char next = src_[pos_ + 1];
        if (src_.compare(pos_, 4, "<!--") == 0) {
          skip_comment();
          continue;
        }
        if (next == '!' || next == '?') {
          skip_declaration();
          continue;
        }
        if (next == '/') {
          end_tag();
          continue;
        }
        if (std::isalpha(static_cast<unsigned char>(next))) {
          start_tag();
          continue;
        }
      }
      text();
    }
    for (std::size_t i = stack_.size(); i-- > 1;) {
      if (!contains(kOptionalEnd, stack_[i]->tag)) {
        fail("unclosed <" + stack_[i]->tag + "> at end of document");
      }
    }
    return std::move(root_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    std::size_t line = 1 + static_cast<std::size_t>(
                               std::count(src_.begin(), src_.begin() + static_cast<long>(
                                                                           std::min(pos_, src_.size())),
                                          '\n'));
    throw Error(ErrorCode::MalformedMarkup, what + " (line " + std::to_string(line) + ")");
  }

  DesignNode& top() { return *stack_.back(); }

  void skip_comment() {
    auto end = src_.find("-->", pos_ + 4);
    pos_ = end == std::string_view::npos ? src_.size() : end + 3;
  }

  void skip_declaration() {
    if (src_.compare(pos_, 9, "<![CDATA[") == 0) {
      auto end = src_.find("]]>", pos_);
      pos_ = end == std::string_view::npos ? src_.size() : end + 3;
      return;
    }
    auto end = src_.find('>', pos_);
    pos_ = end == std::string_view::npos ? src_.size() : end + 1;
  }

  void text() {
    std::size_t start = pos_;
    ++pos_;
    while (pos_ < src_.size() && src_[pos_] != '<') ++pos_;
    add_text(decode_entities(src_.substr(start, pos_ - start)));
  }

  void add_text(std::string s) {
    if (s.empty()) return;
    auto& parent = top();
    if (!parent.children.empty() && parent.children.back().is_text()) {
      parent.children.back().text += s;
      return;
    }
    DesignNode node;
    node.tag = "#text";
    node.text = std::move(s);
    parent.children.push_back(std::move(node));
  }

  std::string read_name() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && is_name_char(src_[pos_])) ++pos_;
    return css::to_lower(src_.substr(start, pos_ - start));
  }

  void skip_spaces() {
    while (pos_ < src_.size() && is_space(src_[pos_])) ++pos_;
  }

  void end_tag() {
    pos_ += 2;
    std::string name = read_name();
    auto close = src_.find('>', pos_);
    if (close == std::string_view::npos) fail("unterminated end tag </" + name + ">");
    pos_ = close + 1;
    if (is_void_element(name)) return;

    auto it = std::find_if(stack_.rbegin(), stack_.rend() - 1,
                           [&](const DesignNode* n) { return n->tag == name; });
    if (it == stack_.rend() - 1) {
      if (contains(kOptionalEnd, name)) return;
      fail("stray end tag </" + name + ">");
    }
    std::size_t depth = static_cast<std::size_t>(std::distance(it, stack_.rend())) - 1;
    for (std::size_t i = stack_.size() - 1; i > depth; --i) {
      if (!contains(kOptionalEnd, stack_[i]->tag)) {
        fail("misnested tags: </" + name + "> closes while <" + stack_[i]->tag + "> is open");
      }
    }
    stack_.resize(depth);
  }

  void start_tag() {
    ++pos_;
    DesignNode node;
    node.tag = read_name();
    bool self_closing = false;
    while (true) {
      skip_spaces();
      if (pos_ >= src_.size()) fail("unterminated start tag <" + node.tag + ">");
      char c = src_[pos_];
      if (c == '>') {
        ++pos_;
        break;
      }
      if (c == '/') {
        ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '>') {
          self_closing = true;
          ++pos_;
          break;
        }
        continue;
      }
      std::size_t name_start = pos_;
      while (pos_ < src_.size() && !is_space(src_[pos_]) && src_[pos_] != '=' && src_[pos_] != '>' &&
             !(src_[pos_] == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>')) {
        ++pos_;
      }
      std::string attr = css::to_lower(src_.substr(name_start, pos_ - name_start));
      std::string value;
      skip_spaces();
      if (pos_ < src_.size() && src_[pos_] == '=') {
        ++pos_;
        skip_spaces();
        if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'')) {
          char quote = src_[pos_++];
          auto end = src_.find(quote, pos_);
          if (end == std::string_view::npos) fail("unterminated attribute value in <" + node.tag + ">");
          value = decode_entities(src_.substr(pos_, end - pos_));
          pos_ = end + 1;
        } else {
          std::size_t vstart = pos_;
          while (pos_ < src_.size() && !is_space(src_[pos_]) && src_[pos_] != '>') ++pos_;
          value = decode_entities(src_.substr(vstart, pos_ - vstart));
        }
      }
      if (!attr.empty()) node.attributes.emplace(std::move(attr), std::move(value));
    }

    if (auto it = node.attributes.find("class"); it != node.attributes.end()) {
      std::istringstream ss(it->second);
      std::string cls;
      while (ss >> cls) node.classes.push_back(cls);
    }
    if (auto it = node.attributes.find("style"); it != node.attributes.end()) {
      node.inline_style = css::parse_declarations(it->second);
    }

    // <p> and <li> implicitly close an open sibling of the same kind.
    if ((node.tag == "p" || node.tag == "li") && top().tag == node.tag) stack_.pop_back();

    std::string tag = node.tag;
    top().children.push_back(std::move(node));
    if (is_void_element(tag) || self_closing) return;

    if (contains(kRawText, tag)) {
      std::string closing = "</" + tag;
      std::size_t end = pos_;
      while (true) {
        end = src_.find("</", end);
        if (end == std::string_view::npos) fail("unclosed <" + tag + ">");
        if (css::to_lower(src_.substr(end, closing.size())) == closing) break;
        end += 2;
      }
      auto& element = top().children.back();
      if (end > pos_) {
        DesignNode raw;
        raw.tag = "#text";
        raw.text = std::string(src_.substr(pos_, end - pos_));
        element.children.push_back(std::move(raw));
      }
      auto close = src_.find('>', end);
      pos_ = close == std::string_view::npos ? src_.size() : close + 1;
      return;
    }
    stack_.push_back(&top().children.back());
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  DesignNode root_;
  // Pointers stay valid: only the innermost open element's child list grows.
  std::vector<DesignNode*> stack_;
};

}  // namespace

bool is_void_element(std::string_view tag) { return contains(kVoidElements, tag); }

bool is_non_rendered_element(std::string_view tag) { return contains(kNonRendered, tag); }

std::string decode_entities(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '&') {
      out.push_back(text[i]);
      continue;
    }
    auto semi = text.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out.push_back('&');
      continue;
    }
    std::string_view name = text.substr(i + 1, semi - i - 1);
    bool decoded = false;
    if (!name.empty() && name[0] == '#') {
      bool hex = name.size() > 1 && (name[1] == 'x' || name[1] == 'X');
      std::string digits(name.substr(hex ? 2 : 1));
      if (!digits.empty() &&
          std::all_of(digits.begin(), digits.end(), [&](unsigned char c) {
            return hex ? std::isxdigit(c) != 0 : std::isdigit(c) != 0;
          })) {
        append_utf8(out, std::stoul(digits, nullptr, hex ? 16 : 10));
        decoded = true;
      }
    } else {
      for (const auto& e : kNamedEntities) {
        if (e.name == name) {
          append_utf8(out, e.codepoint);
          decoded = true;
          break;
        }
      }
    }
    if (decoded) {
      i = semi;
    } else {
      out.push_back('&');
    }
  }
  return out;
}

DesignNode build_tree(std::string_view html_text) { return TreeBuilder(html_text).build(); }

}  // namespace posterkit::html
