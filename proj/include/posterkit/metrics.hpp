#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "posterkit/design.hpp"
#include "posterkit/geometry.hpp"
#include "posterkit/raster.hpp"
#include "posterkit/report.hpp"

namespace posterkit {

/// Fraction of non-container elements whose box covers strictly more than
/// the profile's share of the canvas (and meets the other validity rules).
ValidityResult validity(const GeometrySet& g, const ThresholdProfile& profile);

enum class AlignmentMode {
  Literal,   // all 6x6 coordinate pairs, as the formula is written
  SameAxis,  // x coordinates against x, y against y
};

std::string_view to_string(AlignmentMode m);
AlignmentMode alignment_mode_from_string(std::string_view s);

struct AlignmentResult {
  double score = 0.0;      // clamped to [0,1]
  double unclamped = 0.0;
  std::size_t element_count = 0;
};

AlignmentResult alignment_detail(const GeometrySet& g, const ThresholdProfile& profile,
                                 AlignmentMode mode = AlignmentMode::Literal);

/// Mean over valid elements of the nearest coordinate distance to any other
/// valid element, divided by the canvas diagonal. 0 when fewer than two
/// elements are valid.
inline double alignment(const GeometrySet& g, const ThresholdProfile& profile,
                        AlignmentMode mode = AlignmentMode::Literal) {
  return alignment_detail(g, profile, mode).score;
}

struct ReadabilityResult {
  double score = 0.0;
  std::vector<double> per_region;  // G(t_k), un-normalized
  std::vector<std::string> flags;
};

/// Throws DimensionMismatch when the screenshot size differs from the canvas.
ReadabilityResult readability_detail(const GrayImage& screenshot, const GeometrySet& g);

inline double readability(const GrayImage& screenshot, const GeometrySet& g) {
  return readability_detail(screenshot, g).score;
}

/// Cosine similarity clamped to [-1,1]. Throws DimensionMismatch or ZeroVector.
double embedding_similarity(std::span<const double> a, std::span<const double> b);

/// Reads a JSON array of numbers.
std::vector<double> load_embedding(const std::filesystem::path& path);

struct EvaluateInputs {
  std::optional<std::filesystem::path> html;
  /// Geometry dump path; when absent the HTML is parsed and resolved.
  std::optional<std::filesystem::path> geometry;
  std::optional<std::filesystem::path> screenshot;
  ThresholdProfile profile = ThresholdProfile::standard();
  AlignmentMode mode = AlignmentMode::Literal;
  std::optional<std::pair<std::vector<double>, std::vector<double>>> embeddings;
  ResolveOptions resolve;
};

/// Errors are rethrown with their source ("html:", "geometry:", ...) prefixed.
MetricReport evaluate(const EvaluateInputs& inputs);

}  // namespace posterkit
