#include <cctype>

#include "posterkit/error.hpp"
#include "posterkit/pipeline.hpp"
#include "posterkit/prompts.hpp"

namespace posterkit {

using nlohmann::json;

namespace {

[[noreturn]] void bad_reply(std::string_view text, const std::string& why) {
  throw Error(ErrorCode::ParseError, "judge reply " + why, json{{"reply", std::string(text.substr(0, 200))}});
}

bool space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::pair<int, std::string> parse_judge_reply(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && space(text[i])) ++i;
  std::size_t digits = i;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
  if (i == digits) bad_reply(text, "does not start with a score");
  if (i - digits > 3) bad_reply(text, "score is out of range");
  int score = std::stoi(std::string(text.substr(digits, i - digits)));
  while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
  if (i >= text.size() || text[i] != '.') bad_reply(text, "has no '.' after the score");
  ++i;
  if (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    bad_reply(text, "score is not an integer");
  }
  if (score < 0 || score > 5) bad_reply(text, "score " + std::to_string(score) + " is outside 0..5");
  auto rest = text.substr(i);
  auto b = rest.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {score, {}};
  auto e = rest.find_last_not_of(" \t\r\n");
  return {score, std::string(rest.substr(b, e - b + 1))};
}

SubjectiveScores judge(const std::filesystem::path& image, ModelBackend& judge_backend, const JudgeOptions& options) {
  if (!(options.scale_factor > 0)) throw Error(ErrorCode::InvalidArgument, "scale factor must be > 0");
  if (!std::filesystem::exists(image)) throw Error(ErrorCode::IoError, "no such image " + image.string());
  std::string system = options.system_prompt;
  if (system.empty()) system = std::string(builtin_prompt("judge_system").value_or(""));

  SubjectiveScores scores;
  scores.rubric = options.rubric;
  scores.scale_factor = options.scale_factor;
  for (auto dim : kJudgeDimensions) {
    ProviderRequest request;
    request.role = "judge";
    request.messages.push_back({"system", {MessagePart::text_part(system)}});
    request.messages.push_back({"user",
                                {MessagePart::text_part(std::string(rubric_criterion(options.rubric, dim)), "criterion"),
                                 MessagePart::image_part(image, "design")}});
    ProviderResponse reply;
    try {
      reply = judge_backend.complete(request);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::BackendError, std::string("judge: ") + e.what());
    }
    DimensionScore score;
    try {
      auto [raw, why] = parse_judge_reply(reply.text);
      score.raw = raw;
      score.justification = std::move(why);
      score.scaled = raw * options.scale_factor;
    } catch (const Error& e) {
      score.error = e.message();
    }
    scores.dimensions[dim] = std::move(score);
  }
  return scores;
}

}  // namespace posterkit
