#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "posterkit/asset_index.hpp"
#include "posterkit/plan.hpp"
#include "posterkit/provider.hpp"
#include "posterkit/renderer.hpp"
#include "posterkit/report.hpp"

namespace posterkit {

/// Extracts the four tagged sections of a planner reply. Throws
/// MissingSection, DuplicateSection, MalformedJson or DanglingLayerRef;
/// details name the section (and group/layer where relevant).
SemanticPlan parse_planner_output(std::string_view text);

/// Prompt texts by role; defaults are the built-in assets.
struct PromptTemplates {
  std::string planner;
  std::string composer;
  std::string refiner;
  std::string editor;
  std::string layer_judge;
  std::string judge_system;

  static PromptTemplates builtin();
};

struct PlanResult {
  SemanticPlan plan;
  std::string raw_reply;
  int retry_count = 0;
};

/// Asks the planner and parses its reply, retrying up to `retries` times
/// with the parse error appended. The last parse error is rethrown.
PlanResult plan(std::string_view instruction, ModelBackend& planner, const std::string& system_prompt,
                int retries = 2);

/// Asks the composer for the initial HTML. Throws MissingBinding when an
/// image layer is unbound and ComposeRejected when the reply breaks the
/// poster container rules (details carry the lint report).
std::string compose(std::string_view instruction, const SemanticPlan& plan,
                    const std::vector<AssetBinding>& bindings, ModelBackend& composer,
                    const std::string& system_prompt);

/// Removes a single surrounding ``` fence, if the whole reply is fenced.
std::string strip_code_fence(std::string_view text);

/// The paths one reflection step writes, all inside `iter_dir`.
struct ReflectPaths {
  std::filesystem::path before_html, render_png, render_geometry, optimized_png, after_html;
  explicit ReflectPaths(const std::filesystem::path& iter_dir);
};

/// Render, edit, refine (one step of the reflection loop). Returns H_next.
std::string reflect_once(const std::string& html, Renderer& renderer, ModelBackend& editor,
                         ModelBackend& refiner, const PromptTemplates& prompts,
                         const std::filesystem::path& iter_dir);

struct IterationRecord {
  int t = 0;
  std::string html_before;  // paths relative to the job directory
  std::string render_path;
  std::string geometry_path;
  std::string optimized_path;
  std::string html_after;
  std::string html_before_sha256;
  std::string html_after_sha256;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct StageError {
  std::string stage;  // "plan" | "assets" | "compose" | "reflect"
  std::optional<int> iteration;
  std::string code;
  std::string message;

  friend bool operator==(const StageError&, const StageError&) = default;
};

struct PipelineState {
  std::string job_id;
  std::string instruction;
  int max_iterations = 1;
  std::string status;  // "running" | "completed" | "failed"
  int plan_retries = 0;
  std::vector<AssetBinding> bindings;
  std::vector<IterationRecord> iterations;
  std::string final_html;  // relative path, empty until completed
  std::string final_html_sha256;
  bool early_stopped = false;
  std::optional<StageError> error;

  friend bool operator==(const PipelineState&, const PipelineState&) = default;
};

void to_json(nlohmann::json& j, const IterationRecord& r);
void from_json(const nlohmann::json& j, IterationRecord& r);
void to_json(nlohmann::json& j, const StageError& e);
void from_json(const nlohmann::json& j, StageError& e);
void to_json(nlohmann::json& j, const PipelineState& s);
void from_json(const nlohmann::json& j, PipelineState& s);

struct AssetSettings {
  AssetPolicy policy = AssetPolicy::Hybrid;
  std::size_t top_k = 1;
  std::filesystem::path manifest;  // empty: no repository
};

struct JudgeSettings {
  double scale_factor = 20.0;
};

/// Pipeline configuration as read from JSON. Backend, embedder and renderer
/// entries stay as JSON until make_runtime() instantiates them.
struct PipelineConfig {
  int max_iterations = 1;
  int retries = 2;
  bool early_stop = false;
  std::map<std::string, nlohmann::json> backends;  // role -> adapter config
  nlohmann::json embedder;
  nlohmann::json renderer;
  PromptTemplates prompts = PromptTemplates::builtin();
  AssetSettings assets;
  JudgeSettings judge;
  std::filesystem::path base_dir;  // relative paths resolve here
};

inline constexpr std::string_view kRequiredRoles[] = {"planner", "composer", "refiner", "editor", "judge"};

/// Parses and validates a config file. Throws ConfigError.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
PipelineConfig parse_pipeline_config(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Live objects behind a config. Tests may fill this in by hand.
struct PipelineRuntime {
  std::map<std::string, std::shared_ptr<ModelBackend>> backends;
  std::shared_ptr<Embedder> embedder;
  std::shared_ptr<Renderer> renderer;
  AssetIndex index;

  /// The backend for a role; generator falls back to editor and
  /// layer_judge to judge. Throws ConfigError when unbound.
  ModelBackend& backend(std::string_view role) const;
};

PipelineRuntime make_runtime(const PipelineConfig& config);

struct JobOptions {
  std::filesystem::path job_root = "job";
  std::string job_id;  // empty: derived from the instruction
  bool resume = false;
  bool overwrite = false;  // discard an existing job directory first
};

/// Deterministic job id: first 16 hex digits of sha256(instruction).
std::string default_job_id(std::string_view instruction);

/// Plan, bind assets, compose, then T reflection steps. Everything lands in
/// <job_root>/<job_id>/. On failure the partial state (with the failing
/// stage) is written to state.json and the error rethrown.
PipelineState run_pipeline(std::string_view instruction, const PipelineConfig& config,
                           PipelineRuntime& runtime, const JobOptions& options = {});

/// Re-runs a persisted job, replaying recorded exchanges that still match
/// and calling backends only from the first point of divergence.
PipelineState resume_pipeline(const std::filesystem::path& job_dir, const PipelineConfig& config,
                              PipelineRuntime& runtime);

/// Parses "<int>. <justification>" with the integer in 0..5.
/// Throws ParseError otherwise.
std::pair<int, std::string> parse_judge_reply(std::string_view text);

struct JudgeOptions {
  Rubric rubric = Rubric::Standard;
  double scale_factor = 20.0;
  std::string system_prompt;  // empty: built-in judge prompt
};

/// One judge call per dimension. Unparseable replies leave that dimension
/// unscored with the error recorded; backend failures propagate.
SubjectiveScores judge(const std::filesystem::path& image, ModelBackend& judge_backend,
                       const JudgeOptions& options = {});

}  // namespace posterkit
