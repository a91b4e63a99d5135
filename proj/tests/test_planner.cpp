#include <gtest/gtest.h>

#include "posterkit/backends.hpp"
#include "posterkit/digest.hpp"
#include "posterkit/error.hpp"
#include "posterkit/pipeline.hpp"
#include "posterkit/prompts.hpp"
#include "support.hpp"

using namespace posterkit;
using nlohmann::json;

namespace {

std::string a6() { return read_file(testsupport::fixture("planner/a6_example.txt")); }

const char* kSmallPlan = R"(<layout_thought>One picture, one title.</layout_thought>
<grouping>[{"group_id": "G1", "children": [0, 1], "theme": "all"}]</grouping>
<image_generator>[{"layer_id": 0, "layer_prompt": "A red square."}]</image_generator>
<generate_text>[{"layer_id": 1, "type": "TextElement", "width": 200.0, "height": 40.0, "opacity": 1.0,
"text": "HELLO", "font": "Montserrat", "font_size": 40.0, "text_align": "center", "angle": 0.0,
"capitalize": false, "line_height": 1.0, "letter_spacing": 0.0}]</generate_text>)";

ErrorCode code_of(const std::string& text) {
  try {
    parse_planner_output(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::InvalidArgument;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  auto p = s.find(from);
  EXPECT_NE(p, std::string::npos) << from;
  if (p != std::string::npos) s.replace(p, from.size(), to);
  return s;
}

}  // namespace

TEST(PlannerParse, WorkedExampleReply) {
  auto plan = parse_planner_output(a6());
  ASSERT_EQ(plan.image_prompts.size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(plan.image_prompts[i].layer_id, i);
  ASSERT_EQ(plan.text_specs.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(plan.text_specs[i].layer_id, 4 + i);
  ASSERT_EQ(plan.groups.size(), 4u);
  EXPECT_EQ(plan.groups[0].group_id, "G1");
  EXPECT_EQ(plan.groups[3].group_id, "G4");
  EXPECT_EQ(plan.groups[1].children, (std::vector<int>{1, 2}));
  EXPECT_EQ(plan.groups[3].children, (std::vector<int>{4, 5, 6, 7, 8}));
  EXPECT_EQ(plan.text_specs[0].text, "FREERIDE");
  EXPECT_EQ(plan.text_specs[0].font, "Knewave");
  EXPECT_DOUBLE_EQ(plan.text_specs[0].font_size, 142.0);
  EXPECT_EQ(plan.text_specs[4].text, "www.bmx.com");
  EXPECT_EQ(plan.text_specs[4].text_align, TextAlign::Left);
  EXPECT_FALSE(plan.layout_thought.empty());
  EXPECT_EQ(plan.layout_thought.front(), 'T');
}

TEST(PlannerParse, MultilinePromptSurvives) {
  auto plan = parse_planner_output(a6());
  EXPECT_NE(plan.image_prompts[3].layer_prompt.find('\n'), std::string::npos);
  EXPECT_NE(plan.image_prompts[3].layer_prompt.find("1101"), std::string::npos);
}

TEST(PlannerParse, SurroundingProseIgnored) {
  auto plan = parse_planner_output(std::string("Sure, here is the plan.\n") + kSmallPlan + "\nDone.");
  EXPECT_EQ(plan.text_specs.at(0).text_align, TextAlign::Center);
  EXPECT_EQ(plan.layout_thought, "One picture, one title.");
}

TEST(PlannerParse, EachMissingSection) {
  for (const char* name : {"layout_thought", "grouping", "image_generator", "generate_text"}) {
    std::string text = kSmallPlan;
    std::string open = std::string("<") + name + ">", close = std::string("</") + name + ">";
    auto b = text.find(open);
    auto e = text.find(close) + close.size();
    text.erase(b, e - b);
    try {
      parse_planner_output(text);
      FAIL() << name;
    } catch (const Error& err) {
      EXPECT_EQ(err.code(), ErrorCode::MissingSection);
      EXPECT_EQ(err.details()["section"], name);
    }
  }
}

TEST(PlannerParse, UnclosedSectionIsMissing) {
  EXPECT_EQ(code_of(replace(kSmallPlan, "</grouping>", "")), ErrorCode::MissingSection);
}

TEST(PlannerParse, DuplicateSection) {
  std::string text = std::string(kSmallPlan) + "\n<grouping>[]</grouping>";
  try {
    parse_planner_output(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateSection);
    EXPECT_EQ(e.details()["section"], "grouping");
  }
}

TEST(PlannerParse, DanglingLayerReference) {
  auto text = replace(a6(), R"("children": [0])", R"("children": [0, 99])");
  try {
    parse_planner_output(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DanglingLayerRef);
    EXPECT_EQ(e.details()["group_id"], "G1");
    EXPECT_EQ(e.details()["layer_id"], 99);
  }
}

TEST(PlannerParse, MalformedJson) {
  EXPECT_EQ(code_of(replace(kSmallPlan, R"("layer_prompt": "A red square."})", R"("layer_prompt": "A red square.")")),
            ErrorCode::MalformedJson);
  EXPECT_EQ(code_of(replace(kSmallPlan, R"("font_size": 40.0)", R"("font_size": "big")")), ErrorCode::MalformedJson);
  EXPECT_EQ(code_of(replace(kSmallPlan, R"("type": "TextElement")", R"("type": "ImageElement")")),
            ErrorCode::MalformedJson);
  EXPECT_EQ(code_of(replace(kSmallPlan, R"("layer_id": 1,)", R"("layer_id": 0,)")), ErrorCode::MalformedJson);
  EXPECT_EQ(code_of(replace(kSmallPlan, R"([0, 1])", R"([])")), ErrorCode::MalformedJson);
}

TEST(PlannerParse, RoundTripThroughJson) {
  auto plan = parse_planner_output(a6());
  EXPECT_EQ(json::parse(json(plan).dump()).get<SemanticPlan>(), plan);
}

TEST(PlannerCall, RetriesWithParseErrorThenSucceeds) {
  auto log = std::make_shared<testsupport::CallLog>();
  int calls = 0;
  testsupport::RecordingBackend backend(log, "planner", [&](const ProviderRequest&) {
    ++calls;
    return ProviderResponse{calls <= 2 ? "<layout_thought>oops" : kSmallPlan, {}};
  });
  auto result = plan("A red poster.", backend, "SYSTEM", 2);
  EXPECT_EQ(result.retry_count, 2);
  EXPECT_EQ(calls, 3);
  EXPECT_EQ(result.raw_reply, kSmallPlan);
  auto requests = backend.requests();
  EXPECT_EQ(requests[0].role, "planner");
  EXPECT_EQ(requests[0].messages.at(0).role, "system");
  EXPECT_EQ(requests[0].messages.at(0).parts.at(0).text, "SYSTEM");
  EXPECT_EQ(testsupport::find_part(requests[0], "instruction")->text, "A red poster.");
  // Later attempts carry the failed reply and the parse error.
  EXPECT_GT(requests[2].messages.size(), requests[0].messages.size());
  EXPECT_NE(requests[1].messages.back().parts.at(0).text.find("MissingSection"), std::string::npos);
}

TEST(PlannerCall, GivesUpAfterRetries) {
  auto log = std::make_shared<testsupport::CallLog>();
  testsupport::RecordingBackend backend(log, "planner",
                                        [](const ProviderRequest&) { return ProviderResponse{"nothing", {}}; });
  try {
    plan("x", backend, "S", 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingSection);
    EXPECT_EQ(e.details()["attempts"], 3);
  }
  EXPECT_EQ(log->count("planner"), 3u);
}

TEST(PlannerCall, EmptyInstructionRejected) {
  FixedBackend backend({kSmallPlan, {}});
  try {
    plan("  \n", backend, "S");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(PlannerCall, BackendFailureIsBackendError) {
  auto log = std::make_shared<testsupport::CallLog>();
  testsupport::RecordingBackend backend(log, "planner", [](const ProviderRequest&) -> ProviderResponse {
    throw std::runtime_error("connection reset");
  });
  try {
    plan("x", backend, "S");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BackendError);
  }
}

TEST(Prompts, BuiltinTemplatesPresent) {
  auto p = PromptTemplates::builtin();
  for (const auto* s : {&p.planner, &p.composer, &p.refiner, &p.editor, &p.layer_judge, &p.judge_system}) {
    EXPECT_FALSE(s->empty());
  }
  for (auto r : {Rubric::Standard, Rubric::Broad}) {
    for (auto d : kJudgeDimensions) EXPECT_FALSE(rubric_criterion(r, d).empty());
  }
  EXPECT_FALSE(builtin_prompt("no_such_prompt").has_value());
}

TEST(Prompts, BuiltinsAreByteCopiesOfPromptFiles) {
  for (auto name : builtin_prompt_names()) {
    auto file = testsupport::source_path("prompts/" + std::string(name) + ".txt");
    EXPECT_EQ(*builtin_prompt(name), read_file(file)) << name;
  }
}
