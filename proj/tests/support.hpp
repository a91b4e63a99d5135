#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "posterkit/digest.hpp"
#include "posterkit/geometry.hpp"
#include "posterkit/provider.hpp"
#include "posterkit/renderer.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path fixture(const std::string& rel) { return fs::path(POSTERKIT_FIXTURE_DIR) / rel; }
inline fs::path source_path(const std::string& rel) { return fs::path(POSTERKIT_SOURCE_DIR) / rel; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("posterkit-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

/// Ordered log of everything the mocks saw, shared across roles.
struct CallLog {
  std::mutex mutex;
  std::vector<std::string> events;

  void add(std::string e) {
    std::lock_guard lock(mutex);
    events.push_back(std::move(e));
  }
  std::size_t count(const std::string& e) {
    std::lock_guard lock(mutex);
    return static_cast<std::size_t>(std::count(events.begin(), events.end(), e));
  }
};

/// Logs "<role>" and delegates the reply to a callback.
class RecordingBackend : public posterkit::ModelBackend {
 public:
  using Reply = std::function<posterkit::ProviderResponse(const posterkit::ProviderRequest&)>;
  RecordingBackend(std::shared_ptr<CallLog> log, std::string name, Reply reply)
      : log_(std::move(log)), name_(std::move(name)), reply_(std::move(reply)) {}

  posterkit::ProviderResponse complete(const posterkit::ProviderRequest& request) override {
    log_->add(name_);
    {
      std::lock_guard lock(mutex_);
      requests_.push_back(request);
    }
    return reply_(request);
  }

  std::vector<posterkit::ProviderRequest> requests() {
    std::lock_guard lock(mutex_);
    return requests_;
  }

 private:
  std::shared_ptr<CallLog> log_;
  std::string name_;
  Reply reply_;
  std::mutex mutex_;
  std::vector<posterkit::ProviderRequest> requests_;
};

/// Box renderer that also logs "render".
class RecordingRenderer : public posterkit::Renderer {
 public:
  explicit RecordingRenderer(std::shared_ptr<CallLog> log) : log_(std::move(log)) {}
  void render(const fs::path& html, const fs::path& png, const fs::path& geometry) override {
    log_->add("render");
    inner_.render(html, png, geometry);
  }

 private:
  std::shared_ptr<CallLog> log_;
  posterkit::BoxesRenderer inner_;
};

inline const posterkit::MessagePart* find_part(const posterkit::ProviderRequest& r, const std::string& name) {
  for (const auto& m : r.messages) {
    for (const auto& p : m.parts) {
      if (p.name == name) return &p;
    }
  }
  return nullptr;
}

/// Random on-canvas layout of n boxes, no containers.
inline posterkit::GeometrySet random_geometry(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> dim(200.0, 2000.0);
  posterkit::GeometrySet g;
  g.canvas = {std::round(dim(rng)), std::round(dim(rng))};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> kind(0, 2);
  for (int i = 0; i < n; ++i) {
    posterkit::ElementGeometry e;
    e.id = "el" + std::to_string(i);
    e.kind = static_cast<posterkit::ElementKind>(kind(rng));
    double w = 1.0 + unit(rng) * g.canvas.width * 0.5;
    double h = 1.0 + unit(rng) * g.canvas.height * 0.5;
    e.bbox = {unit(rng) * (g.canvas.width - w), unit(rng) * (g.canvas.height - h), w, h};
    e.z = i;
    g.elements.push_back(e);
  }
  return g;
}

inline const char* kMinimalPoster =
    R"(<div class="poster" style="width:400px;height:400px"><div style="position:absolute;left:10px;top:20px;width:100px;height:50px"></div></div>)";

inline std::string poster_html(const std::string& body) {
  return "<html><body><div class=\"poster\" style=\"width:400px;height:400px\">" + body +
         "</div></body></html>";
}

}  // namespace testsupport
