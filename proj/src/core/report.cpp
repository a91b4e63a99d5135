#include "posterkit/report.hpp"

#include "posterkit/detail/json_util.hpp"
#include "posterkit/error.hpp"

namespace posterkit {

using nlohmann::json;

std::string_view to_string(ProfileName p) {
  switch (p) {
    case ProfileName::Standard: return "standard";
    case ProfileName::Broad: return "broad";
    case ProfileName::Custom: return "custom";
  }
  return "custom";
}

ThresholdProfile ThresholdProfile::standard() { return {ProfileName::Standard, 0.001, true, true}; }

ThresholdProfile ThresholdProfile::broad() { return {ProfileName::Broad, 0.0001, true, true}; }

ThresholdProfile ThresholdProfile::custom(double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "area_ratio_threshold must lie in (0,1)");
  }
  return {ProfileName::Custom, threshold, true, true};
}

ThresholdProfile ThresholdProfile::from_name(std::string_view name) {
  if (name == "standard") return standard();
  if (name == "broad") return broad();
  throw Error(ErrorCode::InvalidArgument, "unknown profile \"" + std::string(name) + "\"");
}

std::string_view to_string(Rubric r) { return r == Rubric::Broad ? "broad" : "standard"; }

Rubric rubric_from_string(std::string_view s) {
  if (s == "standard") return Rubric::Standard;
  if (s == "broad") return Rubric::Broad;
  throw Error(ErrorCode::InvalidArgument, "unknown rubric \"" + std::string(s) + "\"");
}

std::string_view to_string(JudgeDimension d) {
  switch (d) {
    case JudgeDimension::Text: return "text";
    case JudgeDimension::Image: return "image";
    case JudgeDimension::Layout: return "layout";
    case JudgeDimension::Color: return "color";
  }
  return "text";
}

namespace {

JudgeDimension dimension_from_string(std::string_view s) {
  for (auto d : kJudgeDimensions) {
    if (to_string(d) == s) return d;
  }
  throw Error(ErrorCode::SchemaMismatch, "unknown judge dimension \"" + std::string(s) + "\"");
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

void to_json(json& j, const ValidityResult& v) {
  json per = json::object();
  for (const auto& [id, ev] : v.per_element) per[id] = {{"valid", ev.valid}, {"reason", ev.reason}};
  j = json{{"n_valid", v.n_valid},
           {"n_total", v.n_total},
           {"score", v.score},
           {"per_element", per},
           {"flags", v.flags}};
}

void from_json(const json& j, ValidityResult& v) {
  v.n_valid = static_cast<int>(detail::integer_field(j, "n_valid", "validity"));
  v.n_total = static_cast<int>(detail::integer_field(j, "n_total", "validity"));
  v.score = detail::number_field(j, "score", "validity");
  v.per_element.clear();
  for (const auto& [id, ev] : j.at("per_element").items()) {
    v.per_element[id] = {ev.at("valid").get<bool>(), ev.at("reason").get<std::string>()};
  }
  v.flags = j.value("flags", std::vector<std::string>{});
}

void to_json(json& j, const SubjectiveScores& s) {
  json dims = json::object();
  for (const auto& [d, score] : s.dimensions) {
    json entry{{"raw", optional_json(score.raw)},
               {"justification", score.justification},
               {"scaled", optional_json(score.scaled)}};
    if (!score.error.empty()) entry["error"] = score.error;
    dims[std::string(to_string(d))] = std::move(entry);
  }
  j = json{{"rubric", to_string(s.rubric)}, {"scale_factor", s.scale_factor}, {"dimensions", dims}};
}

void from_json(const json& j, SubjectiveScores& s) {
  s.rubric = rubric_from_string(detail::string_field(j, "rubric", "subjective"));
  s.scale_factor = detail::number_field(j, "scale_factor", "subjective");
  s.dimensions.clear();
  for (const auto& [name, entry] : j.at("dimensions").items()) {
    DimensionScore score;
    if (!entry.at("raw").is_null()) score.raw = entry.at("raw").get<int>();
    score.justification = entry.at("justification").get<std::string>();
    if (!entry.at("scaled").is_null()) score.scaled = entry.at("scaled").get<double>();
    score.error = entry.value("error", std::string{});
    s.dimensions[dimension_from_string(name)] = std::move(score);
  }
}

void to_json(json& j, const MetricReport& r) {
  j = json{{"validity", r.validity},
           {"alignment", r.alignment},
           {"alignment_mode", r.alignment_mode},
           {"readability", optional_json(r.readability)},
           {"similarity", optional_json(r.similarity)},
           {"subjective", r.subjective ? json(*r.subjective) : json(nullptr)},
           {"profile", to_string(r.profile)},
           {"inputs_digest", r.inputs_digest},
           {"flags", r.flags}};
}

void from_json(const json& j, MetricReport& r) {
  r.validity = j.at("validity").get<ValidityResult>();
  r.alignment = detail::number_field(j, "alignment", "report");
  r.alignment_mode = j.value("alignment_mode", std::string("literal"));
  const auto& rea = j.at("readability");
  r.readability = rea.is_null() ? std::nullopt : std::optional<double>(rea.get<double>());
  const auto& sim = j.at("similarity");
  r.similarity = sim.is_null() ? std::nullopt : std::optional<double>(sim.get<double>());
  const auto& subj = j.at("subjective");
  r.subjective =
      subj.is_null() ? std::nullopt : std::optional<SubjectiveScores>(subj.get<SubjectiveScores>());
  auto profile = detail::string_field(j, "profile", "report");
  r.profile = profile == "broad"      ? ProfileName::Broad
              : profile == "standard" ? ProfileName::Standard
                                      : ProfileName::Custom;
  r.inputs_digest = detail::string_field(j, "inputs_digest", "report");
  r.flags = j.value("flags", std::vector<std::string>{});
}

}  // namespace posterkit
