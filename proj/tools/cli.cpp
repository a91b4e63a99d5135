#include "cli.hpp"

#include <CLI11.hpp>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "posterkit/asset_index.hpp"
#include "posterkit/backends.hpp"
#include "posterkit/bench.hpp"
#include "posterkit/design.hpp"
#include "posterkit/digest.hpp"
#include "posterkit/error.hpp"
#include "posterkit/metrics.hpp"
#include "posterkit/pipeline.hpp"
#include "posterkit/renderer.hpp"

namespace posterkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kProfiles = {"standard", "broad"};
const std::vector<std::string> kModes = {"literal", "same_axis"};

struct RawConfig {
  json doc = json::object();
  fs::path base_dir;
};

RawConfig read_config(const fs::path& path) {
  RawConfig c;
  try {
    c.doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.message());
  }
  if (!c.doc.is_object()) throw Error(ErrorCode::ConfigError, path.string() + ": expected a JSON object");
  c.base_dir = fs::absolute(path).parent_path();
  return c;
}

std::shared_ptr<ModelBackend> role_backend(const RawConfig& c, const std::string& role) {
  auto backends = c.doc.value("backends", json::object());
  if (!backends.contains(role)) throw Error(ErrorCode::ConfigError, "no backend bound for role \"" + role + "\"");
  return make_backend(backends.at(role), c.base_dir);
}

double judge_scale(const RawConfig& c, std::optional<double> override_value) {
  if (override_value) return *override_value;
  return c.doc.value("judge", json::object()).value("scale_factor", 20.0);
}

std::string judge_system_prompt(const RawConfig& c) {
  auto prompts = c.doc.value("prompts", json::object());
  if (!prompts.contains("judge_system")) return {};
  fs::path p = prompts.at("judge_system").get<std::string>();
  return read_file(p.is_relative() ? c.base_dir / p : p);
}

Rubric rubric_for(const std::string& profile) { return profile == "broad" ? Rubric::Broad : Rubric::Standard; }

std::string fmt(std::optional<double> v) {
  if (!v) return "-";
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::setprecision(6) << *v;
  return s.str();
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

std::pair<std::vector<double>, std::vector<double>> read_embedding_pair(const fs::path& path) {
  try {
    auto j = json::parse(read_file(path));
    return {j.at("generated").get<std::vector<double>>(), j.at("reference").get<std::vector<double>>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, path.string() + ": " + e.what());
  }
}

// --------------------------------------------------------------------------

struct EvalArgs {
  std::string html, geometry, screenshot, embeddings, judge_scores, out, csv, id = "design";
  std::string profile = "standard", mode = "literal";
  std::optional<double> area_threshold;
};

int run_eval(const EvalArgs& a, std::ostream& out) {
  EvaluateInputs in;
  if (!a.html.empty()) in.html = a.html;
  if (!a.geometry.empty()) in.geometry = a.geometry;
  if (!a.screenshot.empty()) in.screenshot = a.screenshot;
  in.profile = a.area_threshold ? ThresholdProfile::custom(*a.area_threshold) : ThresholdProfile::from_name(a.profile);
  in.mode = alignment_mode_from_string(a.mode);
  if (!a.embeddings.empty()) in.embeddings = read_embedding_pair(a.embeddings);
  auto report = evaluate(in);
  if (!a.judge_scores.empty()) {
    try {
      report.subjective = json::parse(read_file(a.judge_scores)).get<SubjectiveScores>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaMismatch, a.judge_scores + ": " + e.what());
    }
  }
  if (!a.out.empty()) write_json(a.out, report);
  if (!a.csv.empty()) write_file(a.csv, to_csv({bench_row(a.id, report)}));
  out << "val " << fmt(report.validity.score) << " (" << report.validity.n_valid << "/" << report.validity.n_total
      << ")  ali " << fmt(report.alignment) << "  rea " << fmt(report.readability) << "  clip "
      << fmt(report.similarity) << "\n";
  if (!report.flags.empty()) {
    out << "flags:";
    for (const auto& f : report.flags) out << " " << f;
    out << "\n";
  }
  if (a.out.empty()) out << json(report).dump(2) << "\n";
  return 0;
}

struct BenchArgs {
  std::string dir, out, config, profile = "standard", mode = "literal";
  unsigned jobs = 1;
  std::optional<double> scale;
};

int run_bench_cmd(const BenchArgs& a, std::ostream& out) {
  BenchOptions o;
  o.profile = ThresholdProfile::from_name(a.profile);
  o.mode = alignment_mode_from_string(a.mode);
  o.rubric = rubric_for(a.profile);
  o.jobs = a.jobs;
  std::shared_ptr<ModelBackend> judge_backend;
  if (!a.config.empty()) {
    auto cfg = read_config(a.config);
    judge_backend = role_backend(cfg, "judge");
    o.judge = judge_backend.get();
    o.scale_factor = judge_scale(cfg, a.scale);
    o.judge_system_prompt = judge_system_prompt(cfg);
  } else if (a.scale) {
    o.scale_factor = *a.scale;
  }
  auto rows = run_bench(a.dir, o);
  rows.push_back(mean_row(rows));
  auto csv = to_csv(rows);
  if (!a.out.empty()) {
    write_file(a.out, csv);
    out << rows.size() - 1 << " design(s) scored, table written to " << a.out << "\n";
  } else {
    out << csv;
  }
  return 0;
}

struct RunArgs {
  std::string prompt, config, job_root = "job", job_id;
  std::optional<int> iterations;
  bool overwrite = false, early_stop = false;
};

void summarize(const PipelineState& s, const fs::path& job_dir, std::ostream& out) {
  out << "job " << s.job_id << " " << s.status << " in " << job_dir.string() << "\n"
      << "iterations " << s.iterations.size() << "/" << s.max_iterations << (s.early_stopped ? " (early stop)" : "")
      << ", plan retries " << s.plan_retries << ", assets " << s.bindings.size() << "\n";
  if (!s.final_html.empty()) out << "final html " << (job_dir / s.final_html).string() << "\n";
}

int run_pipeline_cmd(const RunArgs& a, std::ostream& out) {
  auto config = load_pipeline_config(a.config);
  if (a.iterations) config.max_iterations = *a.iterations;
  if (a.early_stop) config.early_stop = true;
  auto runtime = make_runtime(config);
  JobOptions jo;
  jo.job_root = a.job_root;
  jo.job_id = a.job_id;
  jo.overwrite = a.overwrite;
  auto state = run_pipeline(a.prompt, config, runtime, jo);
  summarize(state, fs::absolute(jo.job_root) / state.job_id, out);
  return 0;
}

int run_resume_cmd(const std::string& job, const std::string& config_path, std::ostream& out) {
  auto config = load_pipeline_config(config_path);
  auto runtime = make_runtime(config);
  auto state = resume_pipeline(job, config, runtime);
  summarize(state, fs::absolute(job), out);
  return 0;
}

struct IndexBuildArgs {
  std::string manifest, prompts, config, out;
};

int run_index_build(const IndexBuildArgs& a, std::ostream& out) {
  if (a.prompts.empty()) {
    auto index = build_index(a.manifest);
    json summary{{"manifest", a.manifest}, {"size", index.size()}, {"dimension", index.dimension()}};
    if (!a.out.empty()) write_json(a.out, summary);
    out << "index of " << index.size() << " asset(s), dimension " << index.dimension() << "\n";
    return 0;
  }
  if (a.config.empty() || a.out.empty()) {
    throw Error(ErrorCode::InvalidArgument, "--prompts needs --config (for the embedder) and --out");
  }
  auto cfg = read_config(a.config);
  auto embedder = make_embedder(cfg.doc.value("embedder", json(nullptr)), cfg.base_dir);
  if (!embedder) throw Error(ErrorCode::ConfigError, "config has no embedder");
  std::istringstream lines(read_file(a.prompts));
  std::string line, manifest;
  std::size_t n = 0;
  for (std::size_t lineno = 1; std::getline(lines, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    AssetRecord r;
    try {
      auto j = json::parse(line);
      r.asset_id = j.at("asset_id").get<std::string>();
      r.prompt = j.at("prompt").get<std::string>();
      r.uri = j.at("uri").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaMismatch, a.prompts + ":" + std::to_string(lineno) + ": " + e.what());
    }
    r.embedding = embedder->embed(r.prompt);
    manifest += json(r).dump() + "\n";
    ++n;
  }
  write_file(a.out, manifest);
  auto index = build_index(a.out);
  out << "wrote " << n << " record(s) to " << a.out << ", dimension " << index.dimension() << "\n";
  return 0;
}

struct IndexQueryArgs {
  std::string manifest, embedding_file, text, config, out;
  std::size_t k = 5;
};

int run_index_query(const IndexQueryArgs& a, std::ostream& out) {
  auto index = build_index(a.manifest);
  std::vector<double> query;
  if (!a.embedding_file.empty()) {
    query = load_embedding(a.embedding_file);
  } else {
    if (a.config.empty()) throw Error(ErrorCode::InvalidArgument, "--text needs --config (for the embedder)");
    auto cfg = read_config(a.config);
    auto embedder = make_embedder(cfg.doc.value("embedder", json(nullptr)), cfg.base_dir);
    if (!embedder) throw Error(ErrorCode::ConfigError, "config has no embedder");
    query = embedder->embed(a.text);
  }
  auto hits = index.query(query, a.k);
  json result = json::array();
  for (std::size_t rank = 0; rank < hits.size(); ++rank) {
    const auto& h = hits[rank];
    result.push_back({{"rank", rank + 1},
                      {"asset_id", h.asset_id},
                      {"similarity", h.similarity},
                      {"uri", index.records()[h.record].uri}});
    out << rank + 1 << ". " << h.asset_id << "  " << fmt(h.similarity) << "\n";
  }
  if (!a.out.empty()) write_json(a.out, result);
  return 0;
}

struct JudgeArgs {
  std::string image, config, out, profile = "standard";
  std::optional<double> scale;
};

int run_judge_cmd(const JudgeArgs& a, std::ostream& out) {
  auto cfg = read_config(a.config);
  auto backend = role_backend(cfg, "judge");
  JudgeOptions o;
  o.rubric = rubric_for(a.profile);
  o.scale_factor = judge_scale(cfg, a.scale);
  o.system_prompt = judge_system_prompt(cfg);
  auto scores = judge(a.image, *backend, o);
  for (const auto& [dim, s] : scores.dimensions) {
    out << to_string(dim) << " " << (s.raw ? std::to_string(*s.raw) : "-") << " -> " << fmt(s.scaled);
    if (!s.error.empty()) out << "  (" << s.error << ")";
    out << "\n";
  }
  if (!a.out.empty()) write_json(a.out, scores);
  return 0;
}

int run_lint_cmd(const std::string& html, const std::string& out_path, std::ostream& out) {
  auto doc = parse_design(read_file(html));
  auto report = lint_poster(doc);
  for (const auto& f : report.findings) {
    out << to_string(f.severity) << " " << f.code << " " << f.node_path << ": " << f.message << "\n";
  }
  if (report.findings.empty()) out << "no findings\n";
  if (!out_path.empty()) write_json(out_path, report);
  return report.has_errors() ? 1 : 0;
}

int run_render_cmd(const std::string& html, const std::string& png, const std::string& geometry,
                   const std::string& config_path, std::ostream& out) {
  json renderer_cfg = nullptr;
  fs::path base = fs::current_path();
  if (!config_path.empty()) {
    auto cfg = read_config(config_path);
    renderer_cfg = cfg.doc.value("renderer", json(nullptr));
    base = cfg.base_dir;
  }
  auto renderer = make_renderer(renderer_cfg, base);
  renderer->render(html, png, geometry);
  out << "rendered " << png << " and " << geometry << "\n";
  return 0;
}

void report_error(const Error& e, std::ostream& err) {
  err << "error: " << e.what() << "\n";
  const auto& d = e.details();
  if (!d.is_null() && !(d.is_object() && d.empty())) err << d.dump(2) << "\n";
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Poster generation pipeline and layout metrics", "posterkit"};
  app.require_subcommand(1);

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Score one design");
  eval->add_option("--html", ev.html, "Poster HTML");
  eval->add_option("--geometry", ev.geometry, "Geometry dump from the renderer");
  eval->add_option("--screenshot", ev.screenshot, "Rendered screenshot (PNG)");
  eval->add_option("--profile", ev.profile, "standard | broad")->check(CLI::IsMember(kProfiles));
  eval->add_option("--area-threshold", ev.area_threshold, "Custom validity area ratio");
  eval->add_option("--mode", ev.mode, "Alignment mode: literal | same_axis")->check(CLI::IsMember(kModes));
  eval->add_option("--embeddings", ev.embeddings, "JSON {\"generated\": [...], \"reference\": [...]}");
  eval->add_option("--judge-scores", ev.judge_scores, "Subjective scores from `judge --out`");
  eval->add_option("--out", ev.out, "MetricReport JSON output");
  eval->add_option("--csv", ev.csv, "Also write a one-row CSV table");
  eval->add_option("--id", ev.id, "Row id for --csv");

  BenchArgs bn;
  auto* bench = app.add_subcommand("bench", "Score every design in a directory");
  bench->add_option("--dir", bn.dir, "Directory of <id>.html / <id>.geometry.json designs")->required();
  bench->add_option("--profile", bn.profile, "standard | broad")->check(CLI::IsMember(kProfiles));
  bench->add_option("--mode", bn.mode, "Alignment mode")->check(CLI::IsMember(kModes));
  bench->add_option("--jobs", bn.jobs, "Designs scored in parallel")->check(CLI::PositiveNumber);
  bench->add_option("--config", bn.config, "Config with a judge backend, for designs without <id>.judge.json");
  bench->add_option("--scale", bn.scale, "Judge scale factor");
  bench->add_option("--out", bn.out, "CSV output (default: stdout)");

  auto* pipeline = app.add_subcommand("pipeline", "Run or resume a generation job");
  pipeline->require_subcommand(1);
  RunArgs ra;
  auto* run = pipeline->add_subcommand("run", "Plan, compose and refine a poster");
  run->add_option("--prompt", ra.prompt, "User instruction")->required();
  run->add_option("--config", ra.config, "Pipeline config (JSON)")->required();
  run->add_option("--iterations", ra.iterations, "Reflection iterations T")->check(CLI::NonNegativeNumber);
  run->add_option("--job-root", ra.job_root, "Directory holding job directories");
  run->add_option("--job-id", ra.job_id, "Job id (default: derived from the prompt)");
  run->add_flag("--overwrite", ra.overwrite, "Replace an existing job directory");
  run->add_flag("--early-stop", ra.early_stop, "Stop once the refiner returns unchanged HTML");
  std::string resume_job, resume_config;
  auto* resume = pipeline->add_subcommand("resume", "Continue a persisted job, replaying recorded exchanges");
  resume->add_option("--job", resume_job, "Job directory")->required();
  resume->add_option("--config", resume_config, "Pipeline config (JSON)")->required();

  auto* index = app.add_subcommand("index", "Asset repository index");
  index->require_subcommand(1);
  IndexBuildArgs ib;
  auto* build = index->add_subcommand("build", "Validate a manifest, or embed prompts into one");
  auto* manifest_opt = build->add_option("--manifest", ib.manifest, "JSON-lines manifest to validate");
  auto* prompts_opt = build->add_option("--prompts", ib.prompts, "JSON-lines {asset_id, prompt, uri} to embed");
  manifest_opt->excludes(prompts_opt);
  build->add_option("--config", ib.config, "Config with an embedder");
  build->add_option("--out", ib.out, "Manifest (with --prompts) or summary JSON output");
  IndexQueryArgs iq;
  auto* query = index->add_subcommand("query", "Nearest assets for an embedding");
  query->add_option("--manifest", iq.manifest, "JSON-lines manifest")->required();
  auto* emb_opt = query->add_option("--embedding-file", iq.embedding_file, "JSON array query embedding");
  auto* text_opt = query->add_option("--text", iq.text, "Query prompt, embedded with the config's embedder");
  emb_opt->excludes(text_opt);
  query->add_option("--config", iq.config, "Config with an embedder");
  query->add_option("-k", iq.k, "Number of hits")->check(CLI::PositiveNumber);
  query->add_option("--out", iq.out, "Hits JSON output");

  JudgeArgs jd;
  auto* judge_cmd = app.add_subcommand("judge", "Score a screenshot with the judge backend");
  judge_cmd->add_option("--image", jd.image, "Screenshot")->required();
  judge_cmd->add_option("--config", jd.config, "Config binding the judge role")->required();
  judge_cmd->add_option("--profile", jd.profile, "Rubric: standard | broad")->check(CLI::IsMember(kProfiles));
  judge_cmd->add_option("--scale", jd.scale, "Scale factor applied to raw scores");
  judge_cmd->add_option("--out", jd.out, "Scores JSON output");

  std::string lint_html, lint_out;
  auto* lint = app.add_subcommand("lint", "Check poster HTML against the container rules");
  lint->add_option("--html", lint_html, "Poster HTML")->required();
  lint->add_option("--out", lint_out, "Lint report JSON output");

  std::string r_html, r_png, r_geometry, r_config;
  auto* render = app.add_subcommand("render", "Render HTML with the configured renderer");
  render->add_option("--html", r_html, "Poster HTML")->required();
  render->add_option("--png", r_png, "Screenshot output")->required();
  render->add_option("--geometry", r_geometry, "Geometry dump output")->required();
  render->add_option("--config", r_config, "Config with a renderer entry (default: built-in box renderer)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (*eval) {
      if (ev.html.empty() && ev.geometry.empty()) {
        err << "eval: give --html or --geometry\n" << eval->help();
        return 2;
      }
      return run_eval(ev, out);
    }
    if (*bench) return run_bench_cmd(bn, out);
    if (*run) return run_pipeline_cmd(ra, out);
    if (*resume) return run_resume_cmd(resume_job, resume_config, out);
    if (*build) {
      if (ib.manifest.empty() && ib.prompts.empty()) {
        err << "index build: give --manifest or --prompts\n" << build->help();
        return 2;
      }
      return run_index_build(ib, out);
    }
    if (*query) {
      if (iq.embedding_file.empty() && iq.text.empty()) {
        err << "index query: give --embedding-file or --text\n" << query->help();
        return 2;
      }
      return run_index_query(iq, out);
    }
    if (*judge_cmd) return run_judge_cmd(jd, out);
    if (*lint) return run_lint_cmd(lint_html, lint_out, out);
    if (*render) return run_render_cmd(r_html, r_png, r_geometry, r_config, out);
  } catch (const Error& e) {
    report_error(e, err);
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace posterkit::cli
