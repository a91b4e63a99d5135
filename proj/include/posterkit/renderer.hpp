#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "posterkit/design.hpp"

namespace posterkit {

/// Turns an HTML file into a screenshot PNG plus a geometry dump.
/// Throws RenderFailed when either output is missing afterwards.
class Renderer {
 public:
  virtual ~Renderer() = default;
  virtual void render(const std::filesystem::path& html, const std::filesystem::path& png_out,
                      const std::filesystem::path& geometry_out) = 0;
};

/// Runs an external program. Arguments may contain the placeholders
/// {html}, {png_out} and {geometry_out}. Nonzero exit, timeout or missing
/// outputs raise RenderFailed carrying the captured stderr.
class CommandRenderer : public Renderer {
 public:
  CommandRenderer(std::vector<std::string> argv, std::chrono::milliseconds timeout);
  void render(const std::filesystem::path& html, const std::filesystem::path& png_out,
              const std::filesystem::path& geometry_out) override;

  std::vector<std::string> expand(const std::filesystem::path& html, const std::filesystem::path& png_out,
                                  const std::filesystem::path& geometry_out) const;

 private:
  std::vector<std::string> argv_;
  std::chrono::milliseconds timeout_;
};

/// Offline stand-in for the browser harness: geometry comes from the
/// built-in parser and the screenshot paints each element box as a flat
/// gray fill on white. Good enough to drive the pipeline without a browser.
class BoxesRenderer : public Renderer {
 public:
  explicit BoxesRenderer(ResolveOptions options = {}) : options_(options) {}
  void render(const std::filesystem::path& html, const std::filesystem::path& png_out,
              const std::filesystem::path& geometry_out) override;

 private:
  ResolveOptions options_;
};

/// {"type": "command", "argv": [...], "timeout_ms": n} or {"type": "boxes"}.
std::shared_ptr<Renderer> make_renderer(const nlohmann::json& config, const std::filesystem::path& base_dir);

}  // namespace posterkit
