#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "posterkit/metrics.hpp"
#include "posterkit/provider.hpp"
#include "posterkit/report.hpp"

namespace posterkit {

/// One benchmark table row; the column order is fixed.
struct BenchRow {
  std::string id;
  std::optional<double> val, ali, rea, clip, text, image, layout, color;

  friend bool operator==(const BenchRow&, const BenchRow&) = default;
};

inline constexpr const char* kBenchColumns[] = {"id", "val", "ali", "rea", "clip", "text", "image", "layout",
                                                 "color"};

BenchRow bench_row(std::string id, const MetricReport& report);

/// Column means over the rows, ignoring nulls. The id is "mean".
BenchRow mean_row(const std::vector<BenchRow>& rows);

/// Header line plus one line per row, '.' decimal separator regardless of
/// locale, empty cells for nulls.
std::string to_csv(const std::vector<BenchRow>& rows);

struct BenchOptions {
  ThresholdProfile profile = ThresholdProfile::standard();
  AlignmentMode mode = AlignmentMode::Literal;
  Rubric rubric = Rubric::Standard;
  double scale_factor = 20.0;
  unsigned jobs = 1;
  /// Scores designs without a <id>.judge.json; requires a screenshot.
  ModelBackend* judge = nullptr;
  std::string judge_system_prompt;
};

/// A design in `dir` is any <id>.html or <id>.geometry.json. Optional
/// siblings: <id>.png (screenshot), <id>.embeddings.json
/// ({"generated": [...], "reference": [...]}) and <id>.judge.json
/// (subjective scores). Rows come back sorted by id.
std::vector<std::string> bench_ids(const std::filesystem::path& dir);
std::vector<BenchRow> run_bench(const std::filesystem::path& dir, const BenchOptions& options);

}  // namespace posterkit
