#include "posterkit/pipeline.hpp"

#include <algorithm>
#include <set>

#include "posterkit/backends.hpp"
#include "posterkit/design.hpp"
#include "posterkit/detail/json_util.hpp"
#include "posterkit/digest.hpp"
#include "posterkit/error.hpp"
#include "posterkit/prompts.hpp"

namespace posterkit {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string prompt_asset(std::string_view name) {
  auto text = builtin_prompt(name);
  if (!text) throw Error(ErrorCode::ConfigError, "missing prompt asset " + std::string(name));
  return std::string(*text);
}

std::string relative_to(const fs::path& p, const fs::path& root) {
  auto rel = p.lexically_relative(root);
  if (rel.empty() || *rel.begin() == "..") return p.generic_string();
  return rel.generic_string();
}

template <typename F>
auto backend_call(std::string_view role, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::BackendError, std::string(role) + ": " + e.what());
  }
}

// Rejects HTML without a poster container or with content outside it.
// Markup the built-in parser cannot resolve is left to the renderer.
void check_poster(const std::string& html, ErrorCode code, std::string_view who) {
  DesignDocument doc;
  try {
    doc = parse_design(html);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoPosterContainer) {
      throw Error(code, std::string(who) + " output has no .poster container",
                  json{{"cause", to_string(e.code())}, {"message", e.message()}});
    }
    return;
  }
  auto report = lint_poster(doc);
  if (report.has_error("content-outside-poster")) {
    throw Error(code, std::string(who) + " output places content outside .poster", json{{"lint", report}});
  }
}

}  // namespace

PromptTemplates PromptTemplates::builtin() {
  PromptTemplates p;
  p.planner = prompt_asset("planner");
  p.composer = prompt_asset("composer");
  p.refiner = prompt_asset("refiner");
  p.editor = prompt_asset("editor");
  p.layer_judge = prompt_asset("layer_judge");
  p.judge_system = prompt_asset("judge_system");
  return p;
}

std::string strip_code_fence(std::string_view text) {
  auto b = text.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return std::string(text);
  auto e = text.find_last_not_of(" \t\r\n");
  auto body = text.substr(b, e - b + 1);
  if (body.size() < 6 || body.substr(0, 3) != "```" || body.substr(body.size() - 3) != "```") {
    return std::string(text);
  }
  auto first_newline = body.find('\n');
  if (first_newline == std::string_view::npos) return std::string(text);
  auto inner = body.substr(first_newline + 1, body.size() - 3 - (first_newline + 1));
  if (!inner.empty() && inner.back() == '\n') inner.remove_suffix(1);
  return std::string(inner);
}

std::string compose(std::string_view instruction, const SemanticPlan& plan,
                    const std::vector<AssetBinding>& bindings, ModelBackend& composer,
                    const std::string& system_prompt) {
  json layers = json::array();
  for (const auto& prompt : plan.image_prompts) {
    auto it = std::find_if(bindings.begin(), bindings.end(),
                           [&](const AssetBinding& b) { return b.layer_id == prompt.layer_id; });
    if (it == bindings.end()) {
      throw Error(ErrorCode::MissingBinding, "image layer " + std::to_string(prompt.layer_id) + " has no asset",
                  json{{"layer_id", prompt.layer_id}});
    }
    layers.push_back({{"layer_id", prompt.layer_id}, {"url", it->uri}, {"prompt", prompt.layer_prompt}});
  }

  ProviderRequest request;
  request.role = "composer";
  request.messages.push_back({"system", {MessagePart::text_part(system_prompt)}});
  request.messages.push_back(
      {"user",
       {MessagePart::text_part("User input:\n" + std::string(instruction), "user_input"),
        MessagePart::text_part("<layout_thought>\n" + plan.layout_thought + "\n</layout_thought>", "layout_thought"),
        MessagePart::text_part("<grouping>\n" + json(plan.groups).dump(2) + "\n</grouping>", "grouping"),
        MessagePart::text_part("<generate_text>\n" + json(plan.text_specs).dump(2) + "\n</generate_text>",
                               "generate_text"),
        MessagePart::text_part("<image_layers>\n" + layers.dump(2) + "\n</image_layers>", "image_layers")}});

  auto reply = backend_call("composer", [&] { return composer.complete(request); });
  auto html = strip_code_fence(reply.text);
  check_poster(html, ErrorCode::ComposeRejected, "composer");
  return html;
}

ReflectPaths::ReflectPaths(const fs::path& iter_dir)
    : before_html(iter_dir / "before.html"),
      render_png(iter_dir / "render.png"),
      render_geometry(iter_dir / "render.geometry.json"),
      optimized_png(iter_dir / "optimized.png"),
      after_html(iter_dir / "after.html") {}

std::string reflect_once(const std::string& html, Renderer& renderer, ModelBackend& editor,
                         ModelBackend& refiner, const PromptTemplates& prompts, const fs::path& iter_dir) {
  ReflectPaths paths(iter_dir);
  write_file(paths.before_html, html);

  renderer.render(paths.before_html, paths.render_png, paths.render_geometry);
  if (!fs::exists(paths.render_png) || !fs::exists(paths.render_geometry)) {
    throw Error(ErrorCode::RenderFailed, "renderer did not produce its outputs");
  }

  ProviderRequest edit;
  edit.role = "editor";
  edit.messages.push_back({"system", {MessagePart::text_part(prompts.editor)}});
  edit.messages.push_back({"user", {MessagePart::image_part(paths.render_png, "render")}});
  auto edited = backend_call("editor", [&] { return editor.complete(edit); });
  if (edited.images.empty()) throw Error(ErrorCode::BackendError, "editor returned no image");
  write_file(paths.optimized_png, read_file(edited.images.front()));

  ProviderRequest refine;
  refine.role = "refiner";
  refine.messages.push_back({"system", {MessagePart::text_part(prompts.refiner)}});
  refine.messages.push_back({"user",
                             {MessagePart::text_part(html, "html"), MessagePart::image_part(paths.render_png, "render"),
                              MessagePart::image_part(paths.optimized_png, "optimized")}});
  auto refined = backend_call("refiner", [&] { return refiner.complete(refine); });
  auto next = strip_code_fence(refined.text);
  check_poster(next, ErrorCode::RefinerRejected, "refiner");
  write_file(paths.after_html, next);
  return next;
}

// ---------------------------------------------------------------------------

void to_json(json& j, const IterationRecord& r) {
  j = json{{"t", r.t},
           {"html_before", r.html_before},
           {"render_path", r.render_path},
           {"geometry_path", r.geometry_path},
           {"optimized_path", r.optimized_path},
           {"html_after", r.html_after},
           {"html_before_sha256", r.html_before_sha256},
           {"html_after_sha256", r.html_after_sha256}};
}

void from_json(const json& j, IterationRecord& r) {
  constexpr std::string_view ctx = "iteration record";
  detail::expect_object(j,
                        {"t", "html_before", "render_path", "geometry_path", "optimized_path", "html_after",
                         "html_before_sha256", "html_after_sha256"},
                        {}, ctx);
  r.t = static_cast<int>(detail::integer_field(j, "t", ctx));
  r.html_before = detail::string_field(j, "html_before", ctx);
  r.render_path = detail::string_field(j, "render_path", ctx);
  r.geometry_path = detail::string_field(j, "geometry_path", ctx);
  r.optimized_path = detail::string_field(j, "optimized_path", ctx);
  r.html_after = detail::string_field(j, "html_after", ctx);
  r.html_before_sha256 = detail::string_field(j, "html_before_sha256", ctx);
  r.html_after_sha256 = detail::string_field(j, "html_after_sha256", ctx);
}

void to_json(json& j, const StageError& e) {
  j = json{{"stage", e.stage},
           {"iteration", e.iteration ? json(*e.iteration) : json(nullptr)},
           {"code", e.code},
           {"message", e.message}};
}

void from_json(const json& j, StageError& e) {
  constexpr std::string_view ctx = "stage error";
  detail::expect_object(j, {"stage", "iteration", "code", "message"}, {}, ctx);
  e.stage = detail::string_field(j, "stage", ctx);
  e.iteration = j.at("iteration").is_null() ? std::nullopt
                                             : std::optional<int>(detail::integer_field(j, "iteration", ctx));
  e.code = detail::string_field(j, "code", ctx);
  e.message = detail::string_field(j, "message", ctx);
}

void to_json(json& j, const PipelineState& s) {
  j = json{{"job_id", s.job_id},
           {"instruction", s.instruction},
           {"max_iterations", s.max_iterations},
           {"status", s.status},
           {"plan_retries", s.plan_retries},
           {"bindings", s.bindings},
           {"iterations", s.iterations},
           {"final_html", s.final_html},
           {"final_html_sha256", s.final_html_sha256},
           {"early_stopped", s.early_stopped},
           {"error", s.error ? json(*s.error) : json(nullptr)}};
}

void from_json(const json& j, PipelineState& s) {
  constexpr std::string_view ctx = "pipeline state";
  detail::expect_object(j,
                        {"job_id", "instruction", "max_iterations", "status", "plan_retries", "bindings",
                         "iterations", "final_html", "final_html_sha256", "early_stopped", "error"},
                        {}, ctx);
  s.job_id = detail::string_field(j, "job_id", ctx);
  s.instruction = detail::string_field(j, "instruction", ctx);
  s.max_iterations = static_cast<int>(detail::integer_field(j, "max_iterations", ctx));
  s.status = detail::string_field(j, "status", ctx);
  s.plan_retries = static_cast<int>(detail::integer_field(j, "plan_retries", ctx));
  s.bindings = j.at("bindings").get<std::vector<AssetBinding>>();
  s.iterations = j.at("iterations").get<std::vector<IterationRecord>>();
  s.final_html = detail::string_field(j, "final_html", ctx);
  s.final_html_sha256 = detail::string_field(j, "final_html_sha256", ctx);
  s.early_stopped = detail::bool_field(j, "early_stopped", ctx);
  s.error = j.at("error").is_null() ? std::nullopt : std::optional<StageError>(j.at("error").get<StageError>());
}

// ---------------------------------------------------------------------------

PipelineConfig parse_pipeline_config(const json& j, const fs::path& base_dir) {
  constexpr std::string_view ctx = "pipeline config";
  const auto code = ErrorCode::ConfigError;
  detail::expect_object(j, {"backends"},
                        {"max_iterations", "retries", "early_stop", "embedder", "renderer", "prompts", "assets",
                         "judge"},
                        ctx, code);
  PipelineConfig c;
  c.base_dir = base_dir;
  if (j.contains("max_iterations")) c.max_iterations = static_cast<int>(detail::integer_field(j, "max_iterations", ctx, code));
  if (j.contains("retries")) c.retries = static_cast<int>(detail::integer_field(j, "retries", ctx, code));
  if (j.contains("early_stop")) c.early_stop = detail::bool_field(j, "early_stop", ctx, code);
  if (c.max_iterations < 0) throw Error(code, "max_iterations must be >= 0");
  if (c.retries < 0) throw Error(code, "retries must be >= 0");

  const auto& backends = j.at("backends");
  if (!backends.is_object()) throw Error(code, "backends must be an object keyed by role");
  static const std::set<std::string, std::less<>> known = {"planner", "composer", "refiner", "editor",
                                                          "judge",   "generator", "layer_judge"};
  for (const auto& [role, cfg] : backends.items()) {
    if (!known.count(role)) throw Error(code, "unknown backend role \"" + role + "\"");
    if (!cfg.is_object()) throw Error(code, "backend for role \"" + role + "\" must be an object");
    c.backends[role] = cfg;
  }
  for (auto role : kRequiredRoles) {
    if (!c.backends.count(std::string(role))) throw Error(code, "role \"" + std::string(role) + "\" is not bound");
  }
  c.embedder = j.value("embedder", json(nullptr));
  c.renderer = j.value("renderer", json(nullptr));

  if (j.contains("prompts")) {
    const auto& prompts = j.at("prompts");
    detail::expect_object(prompts, {}, {"planner", "composer", "refiner", "editor", "layer_judge", "judge_system"},
                          "prompts", code);
    auto load = [&](const char* key, std::string& target) {
      if (!prompts.contains(key)) return;
      fs::path p = detail::string_field(prompts, key, "prompts", code);
      if (p.is_relative()) p = base_dir / p;
      try {
        target = read_file(p);
      } catch (const Error& e) {
        throw Error(code, "prompt " + std::string(key) + ": " + e.message());
      }
    };
    load("planner", c.prompts.planner);
    load("composer", c.prompts.composer);
    load("refiner", c.prompts.refiner);
    load("editor", c.prompts.editor);
    load("layer_judge", c.prompts.layer_judge);
    load("judge_system", c.prompts.judge_system);
  }

  if (j.contains("assets")) {
    const auto& a = j.at("assets");
    detail::expect_object(a, {}, {"policy", "top_k", "manifest"}, "assets", code);
    if (a.contains("policy")) c.assets.policy = asset_policy_from_string(detail::string_field(a, "policy", "assets", code));
    if (a.contains("top_k")) {
      auto k = detail::integer_field(a, "top_k", "assets", code);
      if (k < 1) throw Error(code, "assets.top_k must be >= 1");
      c.assets.top_k = static_cast<std::size_t>(k);
    }
    if (a.contains("manifest")) {
      fs::path m = detail::string_field(a, "manifest", "assets", code);
      c.assets.manifest = m.is_relative() ? base_dir / m : m;
    }
  }
  if (j.contains("judge")) {
    const auto& jd = j.at("judge");
    detail::expect_object(jd, {}, {"scale_factor"}, "judge", code);
    if (jd.contains("scale_factor")) c.judge.scale_factor = detail::number_field(jd, "scale_factor", "judge", code);
    if (!(c.judge.scale_factor > 0)) throw Error(code, "judge.scale_factor must be > 0");
  }
  return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.message());
  }
  return parse_pipeline_config(j, fs::absolute(path).parent_path());
}

ModelBackend& PipelineRuntime::backend(std::string_view role) const {
  auto find = [&](std::string_view r) -> ModelBackend* {
    auto it = backends.find(std::string(r));
    return it != backends.end() && it->second ? it->second.get() : nullptr;
  };
  if (auto* b = find(role)) return *b;
  if (role == "generator") {
    if (auto* b = find("editor")) return *b;
  }
  if (role == "layer_judge") {
    if (auto* b = find("judge")) return *b;
  }
  throw Error(ErrorCode::ConfigError, "no backend bound for role \"" + std::string(role) + "\"");
}

PipelineRuntime make_runtime(const PipelineConfig& config) {
  PipelineRuntime rt;
  for (const auto& [role, cfg] : config.backends) rt.backends[role] = make_backend(cfg, config.base_dir);
  rt.embedder = make_embedder(config.embedder, config.base_dir);
  rt.renderer = make_renderer(config.renderer, config.base_dir);
  if (!config.assets.manifest.empty()) rt.index = build_index(config.assets.manifest);
  return rt;
}

std::string default_job_id(std::string_view instruction) { return sha256_hex(instruction).substr(0, 16); }

namespace {

void persist(const fs::path& job_dir, const PipelineState& state) {
  write_file(job_dir / "state.json", json(state).dump(2) + "\n");
}

}  // namespace

PipelineState run_pipeline(std::string_view instruction, const PipelineConfig& config, PipelineRuntime& runtime,
                           const JobOptions& options) {
  PipelineState state;
  state.job_id = options.job_id.empty() ? default_job_id(instruction) : options.job_id;
  state.instruction = std::string(instruction);
  state.max_iterations = config.max_iterations;
  state.status = "running";
  if (config.max_iterations < 0) throw Error(ErrorCode::ConfigError, "max_iterations must be >= 0");
  if (!runtime.renderer && config.max_iterations > 0) throw Error(ErrorCode::ConfigError, "no renderer configured");

  const fs::path job_dir = fs::absolute(options.job_root / state.job_id).lexically_normal();
  if (options.overwrite && !options.resume) fs::remove_all(job_dir);
  if (!options.resume && fs::exists(job_dir / "state.json")) {
    throw Error(ErrorCode::ConfigError, "job directory " + job_dir.string() + " already holds a job; resume it "
                                        "or choose another job id");
  }
  fs::create_directories(job_dir);

  std::string stage = "plan";
  std::optional<int> iteration;
  try {
    ExchangeRecorder recorder(job_dir / "exchanges", job_dir, options.resume);

    auto planner = recorder.wrap(runtime.backend("planner"));
    auto planned = plan(instruction, *planner, config.prompts.planner, config.retries);
    state.plan_retries = planned.retry_count;
    write_file(job_dir / "plan.txt", planned.raw_reply);
    write_file(job_dir / "plan.parsed.json", json(planned.plan).dump(2) + "\n");
    persist(job_dir, state);

    stage = "assets";
    std::vector<AssetBinding> bindings;
    if (!planned.plan.image_prompts.empty()) {
      RetrieveOptions ro;
      ro.policy = config.assets.policy;
      ro.top_k = config.assets.top_k;
      ro.asset_dir = job_dir / "assets";
      ro.layer_judge_prompt = config.prompts.layer_judge;
      std::unique_ptr<ModelBackend> generator, layer_judge;
      RetrieveBackends rb;
      rb.embedder = runtime.embedder.get();
      if (ro.policy != AssetPolicy::RetrievalOnly) {
        generator = recorder.wrap(runtime.backend("generator"));
        rb.generator = generator.get();
      }
      if (ro.policy == AssetPolicy::Hybrid) {
        layer_judge = recorder.wrap(runtime.backend("layer_judge"));
        rb.layer_judge = layer_judge.get();
      }
      if (ro.policy != AssetPolicy::GenerationOnly && !rb.embedder && !runtime.index.empty()) {
        throw Error(ErrorCode::ConfigError, "asset retrieval needs an embedder");
      }
      bindings = retrieve_or_generate(planned.plan.image_prompts, runtime.index, ro, rb);
    }
    for (const auto& b : bindings) {
      auto stored = b;
      stored.uri = relative_to(b.uri, job_dir);
      state.bindings.push_back(std::move(stored));
    }
    write_file(job_dir / "bindings.json", json(state.bindings).dump(2) + "\n");
    persist(job_dir, state);

    stage = "compose";
    auto composer = recorder.wrap(runtime.backend("composer"));
    std::string current = compose(instruction, planned.plan, bindings, *composer, config.prompts.composer);
    write_file(job_dir / "compose.html", current);
    persist(job_dir, state);

    stage = "reflect";
    for (int t = 0; t < config.max_iterations; ++t) {
      iteration = t;
      fs::path iter_dir = job_dir / ("iter-" + std::to_string(t));
      ExchangeRecorder iter_recorder(iter_dir / "exchanges", job_dir, options.resume);
      auto editor = iter_recorder.wrap(runtime.backend("editor"));
      auto refiner = iter_recorder.wrap(runtime.backend("refiner"));
      auto next = reflect_once(current, *runtime.renderer, *editor, *refiner, config.prompts, iter_dir);

      ReflectPaths paths(iter_dir);
      IterationRecord record;
      record.t = t;
      record.html_before = relative_to(paths.before_html, job_dir);
      record.render_path = relative_to(paths.render_png, job_dir);
      record.geometry_path = relative_to(paths.render_geometry, job_dir);
      record.optimized_path = relative_to(paths.optimized_png, job_dir);
      record.html_after = relative_to(paths.after_html, job_dir);
      record.html_before_sha256 = sha256_hex(current);
      record.html_after_sha256 = sha256_hex(next);
      state.iterations.push_back(std::move(record));
      persist(job_dir, state);

      bool unchanged = next == current;
      current = std::move(next);
      if (config.early_stop && unchanged) {
        state.early_stopped = true;
        break;
      }
    }
    iteration.reset();

    stage = "finalize";
    write_file(job_dir / "final.html", current);
    state.final_html = "final.html";
    state.final_html_sha256 = sha256_hex(current);
    state.status = "completed";
    persist(job_dir, state);
    return state;
  } catch (const Error& e) {
    state.status = "failed";
    state.error = StageError{stage, iteration, std::string(to_string(e.code())), e.message()};
    persist(job_dir, state);
    auto details = e.details().is_object() ? e.details() : json::object();
    details["stage"] = stage;
    details["job_dir"] = job_dir.string();
    throw Error(e.code(), "stage " + stage + ": " + e.message(), details);
  }
}

PipelineState resume_pipeline(const fs::path& job_dir, const PipelineConfig& config, PipelineRuntime& runtime) {
  PipelineState previous;
  try {
    previous = json::parse(read_file(job_dir / "state.json")).get<PipelineState>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, (job_dir / "state.json").string() + ": " + e.what());
  }
  auto cfg = config;
  cfg.max_iterations = previous.max_iterations;
  JobOptions options;
  auto dir = fs::absolute(job_dir).lexically_normal();
  if (dir.filename().empty()) dir = dir.parent_path();
  options.job_root = dir.parent_path();
  options.job_id = previous.job_id;
  options.resume = true;
  return run_pipeline(previous.instruction, cfg, runtime, options);
}

}  // namespace posterkit
