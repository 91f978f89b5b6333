#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cinema3d/pipeline.hpp"

namespace httplib {
class Server;
}

namespace cinema3d {

struct ServiceOptions {
  /// Mask paths in hint documents and job outputs resolve here.
  std::filesystem::path assets_dir = ".";
  std::chrono::seconds session_ttl{30 * 60};
  std::size_t max_upload_bytes = 32u << 20;
  /// Focal length for session cameras; 0 selects max(width, height).
  double focal = 0.0;
};

/// Transport-independent reply. JSON errors are {"code": status, "message"}.
struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

/// 64-bit FNV-1a as 16 lowercase hex digits. Used as the preview cache key.
std::string content_hash(std::string_view bytes);

/// In-memory authoring sessions over the engine. Every method is safe to
/// call concurrently. Scene construction happens once per session, lazily,
/// behind the session's mutex; motion changes never rebuild it.
class Service {
 public:
  explicit Service(ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  Response create_session(const std::string& image_bytes, const std::string& depth_bytes,
                          double depth_scale = 1.0);
  Response set_motion(const std::string& id, const std::string& hints_json);
  Response preview(const std::string& id, const std::string& request_json);
  Response start_render(const std::string& id, const std::string& request_json);
  Response job_status(const std::string& job_id);
  Response job_frame(const std::string& job_id, int index);
  Response health() const;

  /// Number of scene builds performed for a session (-1 if unknown).
  int scene_builds(const std::string& id);

  /// Registers the HTTP routes and the upload size limit on `server`.
  void bind(httplib::Server& server);

 private:
  struct Session;
  struct Job;

  std::shared_ptr<Session> find_session(const std::string& id);
  std::shared_ptr<const LayeredScene> scene_for(Session& session);
  void purge_expired();
  void run_job(std::stop_token stop, std::shared_ptr<Job> job,
               std::shared_ptr<Session> session);

  ServiceOptions options_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::vector<std::jthread> workers_;
};

}  // namespace cinema3d
