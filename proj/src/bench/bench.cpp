#include "posterkit/bench.hpp"

#include <atomic>
#include <charconv>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "posterkit/digest.hpp"
#include "posterkit/error.hpp"
#include "posterkit/pipeline.hpp"

namespace posterkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::optional<double>* column(BenchRow& r, std::size_t i) {
  std::optional<double>* cols[] = {&r.val, &r.ali, &r.rea, &r.clip, &r.text, &r.image, &r.layout, &r.color};
  return cols[i];
}

constexpr std::size_t kNumeric = 8;

std::string format(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

BenchRow bench_row(std::string id, const MetricReport& report) {
  BenchRow row;
  row.id = std::move(id);
  row.val = report.validity.score;
  row.ali = report.alignment;
  row.rea = report.readability;
  row.clip = report.similarity;
  if (report.subjective) {
    auto get = [&](JudgeDimension d) -> std::optional<double> {
      auto it = report.subjective->dimensions.find(d);
      return it == report.subjective->dimensions.end() ? std::nullopt : it->second.scaled;
    };
    row.text = get(JudgeDimension::Text);
    row.image = get(JudgeDimension::Image);
    row.layout = get(JudgeDimension::Layout);
    row.color = get(JudgeDimension::Color);
  }
  return row;
}

BenchRow mean_row(const std::vector<BenchRow>& rows) {
  BenchRow mean;
  mean.id = "mean";
  for (std::size_t c = 0; c < kNumeric; ++c) {
    double sum = 0;
    std::size_t n = 0;
    for (auto row : rows) {
      if (auto v = *column(row, c)) {
        sum += *v;
        ++n;
      }
    }
    if (n > 0) *column(mean, c) = sum / static_cast<double>(n);
  }
  return mean;
}

std::string to_csv(const std::vector<BenchRow>& rows) {
  std::string out;
  for (std::size_t i = 0; i < std::size(kBenchColumns); ++i) {
    if (i) out += ',';
    out += kBenchColumns[i];
  }
  out += '\n';
  for (auto row : rows) {
    out += row.id;
    for (std::size_t c = 0; c < kNumeric; ++c) {
      out += ',';
      if (auto v = *column(row, c)) out += format(*v);
    }
    out += '\n';
  }
  return out;
}

std::vector<std::string> bench_ids(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, "not a directory: " + dir.string());
  std::set<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto name = entry.path().filename().string();
    if (ends_with(name, ".geometry.json")) {
      ids.insert(name.substr(0, name.size() - std::string_view(".geometry.json").size()));
    } else if (ends_with(name, ".html")) {
      ids.insert(name.substr(0, name.size() - 5));
    }
  }
  return {ids.begin(), ids.end()};
}

namespace {

BenchRow bench_one(const fs::path& dir, const std::string& id, const BenchOptions& options) {
  auto sibling = [&](std::string_view suffix) -> std::optional<fs::path> {
    auto p = dir / (id + std::string(suffix));
    return fs::exists(p) ? std::optional(p) : std::nullopt;
  };
  EvaluateInputs in;
  in.html = sibling(".html");
  in.geometry = sibling(".geometry.json");
  in.screenshot = sibling(".png");
  in.profile = options.profile;
  in.mode = options.mode;
  if (auto emb = sibling(".embeddings.json")) {
    try {
      auto j = json::parse(read_file(*emb));
      in.embeddings.emplace(j.at("generated").get<std::vector<double>>(),
                            j.at("reference").get<std::vector<double>>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaMismatch, emb->string() + ": " + e.what());
    }
  }
  auto report = evaluate(in);
  if (auto judged = sibling(".judge.json")) {
    try {
      report.subjective = json::parse(read_file(*judged)).get<SubjectiveScores>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaMismatch, judged->string() + ": " + e.what());
    }
  } else if (options.judge && in.screenshot) {
    JudgeOptions jo;
    jo.rubric = options.rubric;
    jo.scale_factor = options.scale_factor;
    jo.system_prompt = options.judge_system_prompt;
    report.subjective = judge(*in.screenshot, *options.judge, jo);
  }
  return bench_row(id, report);
}

}  // namespace

std::vector<BenchRow> run_bench(const fs::path& dir, const BenchOptions& options) {
  auto ids = bench_ids(dir);
  std::vector<BenchRow> rows(ids.size());
  std::vector<std::exception_ptr> errors(ids.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < ids.size();) {
      try {
        rows[i] = bench_one(dir, ids[i], options);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(ids.size())));
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      auto details = e.details().is_object() ? e.details() : json::object();
      details["design"] = ids[i];
      throw Error(e.code(), ids[i] + ": " + e.message(), details);
    }
  }
  return rows;
}

}  // namespace posterkit
