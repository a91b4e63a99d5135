#include "posterkit/renderer.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>

#include "posterkit/detail/json_util.hpp"
#include "posterkit/digest.hpp"
#include "posterkit/error.hpp"
#include "posterkit/raster.hpp"

extern char** environ;

namespace posterkit {

namespace fs = std::filesystem;
using nlohmann::json;

CommandRenderer::CommandRenderer(std::vector<std::string> argv, std::chrono::milliseconds timeout)
    : argv_(std::move(argv)), timeout_(timeout) {
  if (argv_.empty()) throw Error(ErrorCode::ConfigError, "renderer command is empty");
}

std::vector<std::string> CommandRenderer::expand(const fs::path& html, const fs::path& png_out,
                                                 const fs::path& geometry_out) const {
  std::vector<std::string> out;
  for (auto arg : argv_) {
    for (const auto& [key, value] : {std::pair<std::string, std::string>{"{html}", html.string()},
                                     {"{png_out}", png_out.string()},
                                     {"{geometry_out}", geometry_out.string()}}) {
      for (auto pos = arg.find(key); pos != std::string::npos; pos = arg.find(key, pos + value.size())) {
        arg.replace(pos, key.size(), value);
      }
    }
    out.push_back(std::move(arg));
  }
  return out;
}

namespace {

struct Pipe {
  int fd[2] = {-1, -1};
  ~Pipe() {
    for (int f : fd) {
      if (f >= 0) close(f);
    }
  }
};

[[noreturn]] void render_failed(const std::string& message, const std::string& stderr_text, int status = -1) {
  throw Error(ErrorCode::RenderFailed, message, json{{"stderr", stderr_text}, {"exit_status", status}});
}

}  // namespace

void CommandRenderer::render(const fs::path& html, const fs::path& png_out, const fs::path& geometry_out) {
  std::error_code ec;
  fs::remove(png_out, ec);
  fs::remove(geometry_out, ec);
  if (!png_out.parent_path().empty()) fs::create_directories(png_out.parent_path());
  if (!geometry_out.parent_path().empty()) fs::create_directories(geometry_out.parent_path());

  auto args = expand(html, png_out, geometry_out);
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  Pipe err;
  if (pipe(err.fd) != 0) render_failed(std::string("pipe: ") + std::strerror(errno), "");
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 1, "/dev/null", O_WRONLY, 0);
  posix_spawn_file_actions_adddup2(&actions, err.fd[1], 2);
  posix_spawn_file_actions_addclose(&actions, err.fd[0]);
  posix_spawn_file_actions_addclose(&actions, err.fd[1]);
  pid_t pid = 0;
  int rc = posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  close(err.fd[1]);
  err.fd[1] = -1;
  if (rc != 0) render_failed("cannot start renderer " + args[0] + ": " + std::strerror(rc), "");

  std::string stderr_text;
  auto deadline = std::chrono::steady_clock::now() + timeout_;
  bool open = true;
  int status = 0;
  bool exited = false;
  while (!exited) {
    if (open) {
      pollfd p{err.fd[0], POLLIN, 0};
      if (poll(&p, 1, 20) > 0) {
        char buf[4096];
        auto n = read(err.fd[0], buf, sizeof buf);
        if (n > 0) {
          stderr_text.append(buf, static_cast<std::size_t>(n));
        } else {
          open = false;
        }
      }
    } else {
      usleep(5000);
    }
    pid_t w = waitpid(pid, &status, WNOHANG);
    if (w == pid) exited = true;
    if (!exited && std::chrono::steady_clock::now() > deadline) {
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      render_failed("renderer timed out after " + std::to_string(timeout_.count()) + " ms", stderr_text);
    }
  }
  while (open) {
    char buf[4096];
    auto n = read(err.fd[0], buf, sizeof buf);
    if (n <= 0) break;
    stderr_text.append(buf, static_cast<std::size_t>(n));
  }
  int code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
  if (code != 0) render_failed("renderer exited with status " + std::to_string(code), stderr_text, code);
  if (!fs::exists(png_out)) render_failed("renderer did not write " + png_out.string(), stderr_text, code);
  if (!fs::exists(geometry_out)) {
    render_failed("renderer did not write " + geometry_out.string(), stderr_text, code);
  }
}

void BoxesRenderer::render(const fs::path& html, const fs::path& png_out, const fs::path& geometry_out) {
  GeometrySet g;
  try {
    g = resolve_geometry(parse_design(read_file(html)), options_);
  } catch (const Error& e) {
    throw Error(ErrorCode::RenderFailed, e.message(), json{{"cause", to_string(e.code())}});
  }
  int w = std::max(1, static_cast<int>(std::lround(g.canvas.width)));
  int h = std::max(1, static_cast<int>(std::lround(g.canvas.height)));
  std::vector<double> canvas(static_cast<std::size_t>(w) * h, 255.0);

  std::vector<const ElementGeometry*> order;
  for (const auto& e : g.elements) order.push_back(&e);
  std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->z < b->z; });
  for (const auto* e : order) {
    double shade;
    switch (e->kind) {
      case ElementKind::Image: shade = 140.0; break;
      case ElementKind::Shape: shade = 200.0; break;
      case ElementKind::Text: shade = 40.0; break;
      default: continue;
    }
    int x0 = std::clamp(static_cast<int>(std::lround(e->bbox.x)), 0, w);
    int y0 = std::clamp(static_cast<int>(std::lround(e->bbox.y)), 0, h);
    int x1 = std::clamp(static_cast<int>(std::lround(e->bbox.right())), 0, w);
    int y1 = std::clamp(static_cast<int>(std::lround(e->bbox.bottom())), 0, h);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        auto& px = canvas[static_cast<std::size_t>(y) * w + x];
        px = shade * e->opacity + px * (1.0 - e->opacity);
      }
    }
  }
  std::vector<std::uint8_t> pixels(canvas.size());
  std::transform(canvas.begin(), canvas.end(), pixels.begin(),
                 [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0))); });
  save_png(png_out, GrayImage(w, h, std::move(pixels)));
  write_file(geometry_out, json(g).dump(2) + "\n");
}

std::shared_ptr<Renderer> make_renderer(const json& config, const fs::path& base_dir) {
  if (config.is_null()) return std::make_shared<BoxesRenderer>();
  auto type = detail::string_field(config, "type", "renderer", ErrorCode::ConfigError);
  if (type == "boxes") {
    ResolveOptions options;
    options.text_width_factor = config.value("text_width_factor", 0.6);
    return std::make_shared<BoxesRenderer>(options);
  }
  if (type == "command") {
    std::vector<std::string> argv;
    try {
      argv = config.at("argv").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigError, std::string("renderer argv: ") + e.what());
    }
    // A relative program path containing a slash is taken relative to the config.
    if (!argv.empty() && argv[0].find('/') != std::string::npos && fs::path(argv[0]).is_relative()) {
      argv[0] = (base_dir / argv[0]).string();
    }
    return std::make_shared<CommandRenderer>(std::move(argv),
                                             std::chrono::milliseconds(config.value("timeout_ms", 60000)));
  }
  throw Error(ErrorCode::ConfigError, "unknown renderer type \"" + type + "\"");
}

}  // namespace posterkit
