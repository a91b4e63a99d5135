#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace posterkit {

enum class ProfileName { Standard, Broad, Custom };

std::string_view to_string(ProfileName p);

/// Validity thresholds; Standard and Broad mirror the two benchmark settings.
struct ThresholdProfile {
  ProfileName name = ProfileName::Standard;
  double area_ratio_threshold = 0.001;
  bool count_zero_opacity = true;
  bool require_canvas_intersection = true;

  static ThresholdProfile standard();
  static ThresholdProfile broad();
  /// Throws InvalidArgument unless 0 < threshold < 1.
  static ThresholdProfile custom(double area_ratio_threshold);
  /// "standard" | "broad"; throws InvalidArgument otherwise.
  static ThresholdProfile from_name(std::string_view name);
};

struct ElementValidity {
  bool valid = false;
  std::string reason;

  friend bool operator==(const ElementValidity&, const ElementValidity&) = default;
};

struct ValidityResult {
  int n_valid = 0;
  int n_total = 0;
  double score = 1.0;
  std::map<std::string, ElementValidity> per_element;
  std::vector<std::string> flags;
};

enum class Rubric { Standard, Broad };

std::string_view to_string(Rubric r);
Rubric rubric_from_string(std::string_view s);

enum class JudgeDimension { Text, Image, Layout, Color };

inline constexpr JudgeDimension kJudgeDimensions[] = {
    JudgeDimension::Text, JudgeDimension::Image, JudgeDimension::Layout, JudgeDimension::Color};

std::string_view to_string(JudgeDimension d);

struct DimensionScore {
  std::optional<int> raw;  // empty when the reply could not be parsed
  std::string justification;
  std::optional<double> scaled;
  std::string error;
};

struct SubjectiveScores {
  Rubric rubric = Rubric::Standard;
  double scale_factor = 20.0;
  std::map<JudgeDimension, DimensionScore> dimensions;
};

struct MetricReport {
  ValidityResult validity;
  double alignment = 0.0;
  std::optional<double> readability;
  std::optional<double> similarity;
  std::optional<SubjectiveScores> subjective;
  ProfileName profile = ProfileName::Standard;
  std::string alignment_mode = "literal";
  std::string inputs_digest;
  std::vector<std::string> flags;
};

void to_json(nlohmann::json& j, const ValidityResult& v);
void from_json(const nlohmann::json& j, ValidityResult& v);
void to_json(nlohmann::json& j, const SubjectiveScores& s);
void from_json(const nlohmann::json& j, SubjectiveScores& s);
void to_json(nlohmann::json& j, const MetricReport& r);
void from_json(const nlohmann::json& j, MetricReport& r);

}  // namespace posterkit
