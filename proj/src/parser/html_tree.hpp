#pragma once

#include <string>
#include <string_view>

#include "posterkit/design.hpp"

namespace posterkit::html {

/// Builds a node tree (root tag "#document") from an HTML string. Void
/// elements and optional end tags are recovered; interleaved misnesting,
/// stray end tags and unclosed elements throw MalformedMarkup.
DesignNode build_tree(std::string_view html_text);

/// Decodes character references (&amp;, &#233;, &#x41;, ...).
std::string decode_entities(std::string_view text);

bool is_void_element(std::string_view tag);

/// Elements never painted (head content, scripts, styles).
bool is_non_rendered_element(std::string_view tag);

}  // namespace posterkit::html
