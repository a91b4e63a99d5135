#include <algorithm>
#include <cstdio>
#include <set>

#include "posterkit/error.hpp"
#include "posterkit/pipeline.hpp"

namespace posterkit {

using nlohmann::json;

namespace {

constexpr std::string_view kSections[] = {"layout_thought", "grouping", "image_generator", "generate_text"};

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string extract(std::string_view text, std::string_view name) {
  std::string open = "<" + std::string(name) + ">";
  std::string close = "</" + std::string(name) + ">";
  auto opens = count_occurrences(text, open);
  if (opens == 0) {
    throw Error(ErrorCode::MissingSection, "section <" + std::string(name) + "> is missing",
                json{{"section", name}});
  }
  if (opens > 1 || count_occurrences(text, close) > 1) {
    throw Error(ErrorCode::DuplicateSection, "section <" + std::string(name) + "> appears more than once",
                json{{"section", name}});
  }
  auto begin = text.find(open) + open.size();
  auto end = text.find(close, begin);
  if (end == std::string_view::npos) {
    throw Error(ErrorCode::MissingSection, "section <" + std::string(name) + "> is not closed",
                json{{"section", name}});
  }
  return trim(text.substr(begin, end - begin));
}

[[noreturn]] void malformed(std::string_view section, const std::string& detail) {
  throw Error(ErrorCode::MalformedJson, "section <" + std::string(section) + ">: " + detail,
              json{{"section", section}, {"detail", detail}});
}

// Planner replies sometimes carry raw line breaks inside JSON strings; escape
// control characters within strings before handing the text to the parser.
json parse_lenient(std::string_view section, std::string_view text) {
  std::string fixed;
  fixed.reserve(text.size());
  bool in_string = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (c == '\\' && i + 1 < text.size()) {
        fixed.push_back(c);
        fixed.push_back(text[++i]);
        continue;
      }
      if (c == '"') {
        in_string = false;
      } else if (static_cast<unsigned char>(c) < 0x20) {
        switch (c) {
          case '\n': fixed += "\\n"; break;
          case '\r': fixed += "\\r"; break;
          case '\t': fixed += "\\t"; break;
          default: {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(c));
            fixed += buf;
          }
        }
        continue;
      }
    } else if (c == '"') {
      in_string = true;
    }
    fixed.push_back(c);
  }
  json j;
  try {
    j = json::parse(fixed);
  } catch (const json::exception& e) {
    malformed(section, e.what());
  }
  if (!j.is_array()) malformed(section, "expected a JSON array");
  return j;
}

template <typename T>
std::vector<T> decode_items(std::string_view section, const json& array) {
  std::vector<T> out;
  for (std::size_t i = 0; i < array.size(); ++i) {
    try {
      out.push_back(array[i].get<T>());
    } catch (const Error& e) {
      malformed(section, "item " + std::to_string(i) + ": " + e.message());
    } catch (const json::exception& e) {
      malformed(section, "item " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

SemanticPlan parse_planner_output(std::string_view text) {
  std::string bodies[4];
  for (std::size_t i = 0; i < 4; ++i) bodies[i] = extract(text, kSections[i]);

  SemanticPlan plan;
  plan.layout_thought = bodies[0];
  plan.groups = decode_items<Group>("grouping", parse_lenient("grouping", bodies[1]));
  plan.image_prompts = decode_items<ImagePrompt>("image_generator", parse_lenient("image_generator", bodies[2]));
  plan.text_specs = decode_items<TextSpec>("generate_text", parse_lenient("generate_text", bodies[3]));

  std::set<int> layers;
  for (const auto& p : plan.image_prompts) {
    if (!layers.insert(p.layer_id).second) {
      malformed("image_generator", "duplicate layer_id " + std::to_string(p.layer_id));
    }
  }
  for (const auto& t : plan.text_specs) {
    if (!layers.insert(t.layer_id).second) {
      malformed("generate_text", "duplicate layer_id " + std::to_string(t.layer_id));
    }
  }
  std::set<std::string> group_ids;
  for (const auto& g : plan.groups) {
    if (!group_ids.insert(g.group_id).second) malformed("grouping", "duplicate group_id \"" + g.group_id + "\"");
    if (g.children.empty()) malformed("grouping", "group \"" + g.group_id + "\" has no children");
    if (trim(g.theme).empty()) malformed("grouping", "group \"" + g.group_id + "\" has an empty theme");
    for (int child : g.children) {
      if (!layers.count(child)) {
        throw Error(ErrorCode::DanglingLayerRef,
                    "group \"" + g.group_id + "\" references undeclared layer " + std::to_string(child),
                    json{{"group_id", g.group_id}, {"layer_id", child}});
      }
    }
  }
  return plan;
}

namespace {

bool is_parse_error(ErrorCode c) {
  return c == ErrorCode::MissingSection || c == ErrorCode::DuplicateSection || c == ErrorCode::MalformedJson ||
         c == ErrorCode::DanglingLayerRef;
}

}  // namespace

PlanResult plan(std::string_view instruction, ModelBackend& planner, const std::string& system_prompt,
                int retries) {
  if (trim(instruction).empty()) throw Error(ErrorCode::InvalidArgument, "instruction must not be empty");
  ProviderRequest request;
  request.role = "planner";
  request.messages.push_back({"system", {MessagePart::text_part(system_prompt)}});
  request.messages.push_back({"user", {MessagePart::text_part(std::string(instruction), "instruction")}});

  PlanResult result;
  for (int attempt = 0;; ++attempt) {
    ProviderResponse reply;
    try {
      reply = planner.complete(request);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::BackendError, std::string("planner: ") + e.what());
    }
    try {
      result.plan = parse_planner_output(reply.text);
      result.raw_reply = reply.text;
      result.retry_count = attempt;
      return result;
    } catch (const Error& e) {
      if (!is_parse_error(e.code()) || attempt >= retries) {
        auto details = e.details().is_object() ? e.details() : json::object();
        details["attempts"] = attempt + 1;
        throw Error(e.code(), e.message(), details);
      }
      request.messages.push_back({"assistant", {MessagePart::text_part(reply.text)}});
      request.messages.push_back(
          {"user",
           {MessagePart::text_part("Your previous reply could not be parsed (" + std::string(e.what()) +
                                       "). Reply again in the required format, with each of <layout_thought>, "
                                       "<grouping>, <image_generator> and <generate_text> exactly once.",
                                   "parse_error")}});
    }
  }
}

}  // namespace posterkit
