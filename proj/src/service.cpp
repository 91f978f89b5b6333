#include "cinema3d/service.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <iostream>
#include <random>

#include "httplib.h"
#include "json.hpp"

#include "cinema3d/assets.hpp"
#include "cinema3d/errors.hpp"

namespace cinema3d {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Service::Session {
  std::string id;
  ColorImage color;
  DepthMap depth;
  Camera camera;
  double median = 1.0;
  Clock::time_point created;
  Clock::time_point expires;

  std::mutex mutex;
  std::shared_ptr<const LayeredScene> scene;
  int scene_builds = 0;
  std::shared_ptr<const FlowField> flow;
  int motion_revision = 0;
};

struct Service::Job {
  std::string id;
  fs::path dir;
  int frame_count = 0;
  TrajectoryPreset preset = TrajectoryPreset::sway;
  double amplitude = 0.05;
  RenderConfig render;
  std::mutex mutex;
  std::vector<std::string> frames;
  bool done = false;
  std::string error;
};

namespace {

Response json_response(int status, const json& body) {
  Response response;
  response.status = status;
  response.body = body.dump();
  return response;
}

Response error_response(int status, const std::string& message) {
  return json_response(status, {{"code", status}, {"message", message}});
}

std::string random_id() {
  static std::mutex mutex;
  static std::mt19937_64 engine{std::random_device{}()};
  std::lock_guard lock(mutex);
  char buffer[33];
  std::snprintf(buffer, sizeof(buffer), "%016llx%016llx",
                static_cast<unsigned long long>(engine()),
                static_cast<unsigned long long>(engine()));
  return buffer;
}

std::string decode_base64(std::string_view text) {
  std::array<int, 256> table;
  table.fill(-1);
  const std::string_view alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  for (std::size_t i = 0; i < alphabet.size(); ++i) {
    table[static_cast<unsigned char>(alphabet[i])] = static_cast<int>(i);
  }
  std::string out;
  int buffer = 0;
  int bits = 0;
  for (const char ch : text) {
    if (ch == '=') break;
    if (std::isspace(static_cast<unsigned char>(ch))) continue;
    const int value = table[static_cast<unsigned char>(ch)];
    if (value < 0) throw AssetError("invalid base64 in mask data URI");
    buffer = (buffer << 6) | value;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<char>((buffer >> bits) & 0xff));
    }
  }
  return out;
}

ByteView as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

json parse_json_body(const std::string& body) {
  if (body.empty()) return json::object();
  return json::parse(body);
}

// Absent → source camera. {"preset", "amplitude", "k"} → trajectory camera
// (k defaults to t). {"rotation": [9], "translation": [3]} → explicit pose.
Camera parse_camera(const json& desc, int t, int frame_count, const Camera& source,
                    double median) {
  if (desc.is_null()) return source;
  if (!desc.is_object()) throw ConfigError("camera must be an object");
  if (desc.contains("rotation") || desc.contains("translation")) {
    for (const auto& [key, unused] : desc.items()) {
      if (key != "rotation" && key != "translation") {
        throw ConfigError("unknown camera key: " + key);
      }
    }
    Camera camera = source;
    if (desc.contains("rotation")) {
      const auto values = desc.at("rotation").get<std::vector<double>>();
      if (values.size() != 9) throw ConfigError("camera.rotation needs 9 numbers");
      camera.pose.rotation = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(values.data());
    }
    if (desc.contains("translation")) {
      const auto values = desc.at("translation").get<std::vector<double>>();
      if (values.size() != 3) throw ConfigError("camera.translation needs 3 numbers");
      camera.pose.translation = Eigen::Vector3d(values[0], values[1], values[2]);
    }
    camera.validate();
    return camera;
  }
  for (const auto& [key, unused] : desc.items()) {
    if (key != "preset" && key != "amplitude" && key != "k") {
      throw ConfigError("unknown camera key: " + key);
    }
  }
  const TrajectoryPreset preset = parse_preset(desc.value("preset", std::string("still")));
  const double amplitude = desc.value("amplitude", 0.05);
  const int k = desc.value("k", t);
  return trajectory_camera(preset, amplitude, frame_count, k, source.intrinsics, {median});
}

}  // namespace

std::string content_hash(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (const char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ull;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

Service::Service(ServiceOptions options) : options_(std::move(options)) {}

Service::~Service() {
  for (auto& worker : workers_) worker.request_stop();
  workers_.clear();
}

void Service::purge_expired() {
  const auto now = Clock::now();
  std::lock_guard lock(mutex_);
  std::erase_if(sessions_, [&](const auto& entry) { return entry.second->expires < now; });
}

std::shared_ptr<Service::Session> Service::find_session(const std::string& id) {
  purge_expired();
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) return nullptr;
  it->second->expires = Clock::now() + options_.session_ttl;
  return it->second;
}

std::shared_ptr<const LayeredScene> Service::scene_for(Session& session) {
  std::lock_guard lock(session.mutex);
  if (!session.scene) {
    session.scene = std::make_shared<const LayeredScene>(
        build_scene(session.color, session.depth, session.camera));
    ++session.scene_builds;
  }
  return session.scene;
}

int Service::scene_builds(const std::string& id) {
  const auto session = find_session(id);
  if (!session) return -1;
  std::lock_guard lock(session->mutex);
  return session->scene_builds;
}

Response Service::create_session(const std::string& image_bytes,
                                 const std::string& depth_bytes, double depth_scale) {
  if (image_bytes.size() + depth_bytes.size() > options_.max_upload_bytes) {
    return error_response(413, "upload exceeds " + std::to_string(options_.max_upload_bytes) +
                                   " bytes");
  }
  auto session = std::make_shared<Session>();
  try {
    AssetBundle bundle = make_bundle(decode_color(as_bytes(image_bytes)),
                                     decode_depth(as_bytes(depth_bytes), {depth_scale}));
    session->color = std::move(bundle.color);
    session->depth = std::move(bundle.depth);
  } catch (const Error& e) {
    return error_response(400, e.what());
  }
  const int width = session->color.width();
  const int height = session->color.height();
  session->camera = default_camera(
      width, height, options_.focal > 0.0 ? options_.focal : double(std::max(width, height)));
  session->median = median_depth(session->depth);
  session->id = random_id();
  session->created = Clock::now();
  session->expires = session->created + options_.session_ttl;

  purge_expired();
  {
    std::lock_guard lock(mutex_);
    sessions_[session->id] = session;
  }
  return json_response(201, {{"id", session->id}, {"width", width}, {"height", height}});
}

Response Service::set_motion(const std::string& id, const std::string& hints_json) {
  const auto session = find_session(id);
  if (!session) return error_response(404, "unknown session: " + id);
  try {
    const HintsDocument document = parse_hints_document(json::parse(hints_json));
    const int width = session->color.width();
    const int height = session->color.height();
    MaskImage mask;
    if (document.mask && document.mask->starts_with("data:")) {
      const auto comma = document.mask->find(',');
      if (comma == std::string::npos) throw AssetError("malformed mask data URI");
      mask = decode_mask(as_bytes(decode_base64(std::string_view(*document.mask).substr(comma + 1))));
      if (mask.width() != width || mask.height() != height) {
        throw AssetError("dimension mismatch: mask vs image");
      }
    } else {
      mask = resolve_hint_mask(document, options_.assets_dir, width, height);
    }
    const MotionEstimate estimate = estimate_motion_from_hints(mask, document.hints);
    auto flow = std::make_shared<const FlowField>(scale_flow(estimate.flow, document.speed));

    const auto& data = flow->data();
    const Eigen::ArrayXf magnitude = (data.col(0).square() + data.col(1).square()).sqrt();
    int revision = 0;
    {
      std::lock_guard lock(session->mutex);
      session->flow = flow;
      revision = ++session->motion_revision;
    }
    return json_response(200, {{"mean_magnitude", double(magnitude.mean())},
                               {"max_magnitude", double(magnitude.maxCoeff())},
                               {"iterations", estimate.iterations},
                               {"converged", estimate.converged},
                               {"revision", revision}});
  } catch (const json::exception& e) {
    return error_response(400, std::string("malformed hints JSON: ") + e.what());
  } catch (const ConfigError& e) {
    return error_response(422, e.what());
  } catch (const Error& e) {
    return error_response(422, e.what());
  }
}

Response Service::preview(const std::string& id, const std::string& request_json) {
  const auto session = find_session(id);
  if (!session) return error_response(404, "unknown session: " + id);
  std::shared_ptr<const FlowField> flow;
  {
    std::lock_guard lock(session->mutex);
    flow = session->flow;
  }
  if (!flow) return error_response(409, "motion not set");
  try {
    const json request = parse_json_body(request_json);
    if (!request.is_object()) throw ConfigError("preview request must be an object");
    for (const auto& [key, unused] : request.items()) {
      if (key != "t" && key != "N" && key != "camera" && key != "overrides") {
        throw ConfigError("unknown preview key: " + key);
      }
    }
    const int t = request.value("t", 0);
    const int frame_count = request.value("N", 60);
    if (frame_count < 1) throw ConfigError("N must be at least 1");
    if (t < 0 || t > frame_count) {
      throw ConfigError("t = " + std::to_string(t) + " outside [0, N]");
    }
    RenderConfig render;
    if (request.contains("overrides")) parse_render_options(request["overrides"], render);
    const Camera camera = parse_camera(request.value("camera", json()), t, frame_count,
                                       session->camera, session->median);
    const auto scene = scene_for(*session);
    const Frame frame = render_view(*scene, *flow, t, frame_count, camera, render);
    const Bytes png = encode_frame(frame.color);

    Response response;
    response.content_type = "image/png";
    response.body.assign(png.begin(), png.end());
    const std::string hash = content_hash(response.body);
    response.headers.emplace_back("X-Content-Hash", hash);
    response.headers.emplace_back("ETag", "\"" + hash + "\"");
    return response;
  } catch (const json::exception& e) {
    return error_response(400, std::string("malformed preview request: ") + e.what());
  } catch (const ConfigError& e) {
    return error_response(422, e.what());
  } catch (const Error& e) {
    return error_response(500, e.what());
  }
}

Response Service::start_render(const std::string& id, const std::string& request_json) {
  const auto session = find_session(id);
  if (!session) return error_response(404, "unknown session: " + id);
  {
    std::lock_guard lock(session->mutex);
    if (!session->flow) return error_response(409, "motion not set");
  }
  auto job = std::make_shared<Job>();
  try {
    const json request = parse_json_body(request_json);
    if (!request.is_object()) throw ConfigError("render request must be an object");
    for (const auto& [key, unused] : request.items()) {
      if (key != "frames" && key != "trajectory" && key != "amplitude" && key != "overrides") {
        throw ConfigError("unknown render key: " + key);
      }
    }
    job->frame_count = request.value("frames", 60);
    if (job->frame_count < 1) throw ConfigError("frames must be at least 1");
    job->preset = parse_preset(request.value("trajectory", std::string("sway")));
    job->amplitude = request.value("amplitude", 0.05);
    if (!(job->amplitude >= 0.0)) throw ConfigError("amplitude must be non-negative");
    if (request.contains("overrides")) parse_render_options(request["overrides"], job->render);
  } catch (const json::exception& e) {
    return error_response(400, std::string("malformed render request: ") + e.what());
  } catch (const ConfigError& e) {
    return error_response(422, e.what());
  }

  job->id = random_id();
  job->dir = options_.assets_dir / "jobs" / job->id;
  std::error_code ec;
  fs::create_directories(job->dir, ec);
  if (ec) return error_response(500, "cannot create job directory");

  std::lock_guard lock(mutex_);
  jobs_[job->id] = job;
  workers_.emplace_back([this, job, session](std::stop_token stop) {
    run_job(stop, job, session);
  });
  return json_response(202, {{"job", job->id}});
}

void Service::run_job(std::stop_token stop, std::shared_ptr<Job> job,
                      std::shared_ptr<Session> session) {
  try {
    const auto scene = scene_for(*session);
    std::shared_ptr<const FlowField> flow;
    {
      std::lock_guard lock(session->mutex);
      flow = session->flow;
    }
    const Trajectory trajectory = make_trajectory(
        job->preset, job->amplitude, job->frame_count, session->camera.intrinsics,
        {session->median});
    for (int k = 0; k < job->frame_count && !stop.stop_requested(); ++k) {
      const Frame frame = render_view(*scene, *flow, k, job->frame_count,
                                      trajectory.cameras[std::size_t(k)], job->render);
      const std::string name = frame_filename(k);
      save_frame(frame.color, job->dir / name);
      std::lock_guard lock(job->mutex);
      job->frames.push_back(name);
    }
  } catch (const std::exception& e) {
    std::lock_guard lock(job->mutex);
    job->error = e.what();
  }
  std::lock_guard lock(job->mutex);
  job->done = true;
}

Response Service::job_status(const std::string& job_id) {
  std::shared_ptr<Job> job;
  {
    std::lock_guard lock(mutex_);
    const auto it = jobs_.find(job_id);
    if (it == jobs_.end()) return error_response(404, "unknown job: " + job_id);
    job = it->second;
  }
  std::lock_guard lock(job->mutex);
  json body = {{"done", job->done}, {"frames", job->frames}, {"frame_count", job->frame_count}};
  if (!job->error.empty()) body["error"] = job->error;
  return json_response(200, body);
}

Response Service::job_frame(const std::string& job_id, int index) {
  std::shared_ptr<Job> job;
  {
    std::lock_guard lock(mutex_);
    const auto it = jobs_.find(job_id);
    if (it == jobs_.end()) return error_response(404, "unknown job: " + job_id);
    job = it->second;
  }
  std::string name;
  {
    std::lock_guard lock(job->mutex);
    if (index < 0 || index >= int(job->frames.size())) {
      return error_response(404, "frame not available");
    }
    name = job->frames[std::size_t(index)];
  }
  const Bytes png = read_file(job->dir / name);
  Response response;
  response.content_type = "image/png";
  response.body.assign(png.begin(), png.end());
  return response;
}

Response Service::health() const { return json_response(200, {{"status", "ok"}}); }

void Service::bind(httplib::Server& server) {
  auto send = [](httplib::Response& out, const Response& in) {
    out.status = in.status;
    for (const auto& [key, value] : in.headers) out.set_header(key, value);
    out.set_content(in.body, in.content_type);
  };
  server.set_payload_max_length(options_.max_upload_bytes);

  server.Get("/healthz", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, health());
  });
  server.Post("/sessions", [this, send](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_file("image") || !req.has_file("depth")) {
      send(res, error_response(400, "multipart fields image and depth are required"));
      return;
    }
    double depth_scale = 1.0;
    if (req.has_param("depth_scale")) {
      try {
        depth_scale = std::stod(req.get_param_value("depth_scale"));
      } catch (const std::exception&) {
        send(res, error_response(400, "depth_scale must be a number"));
        return;
      }
    }
    send(res, create_session(req.get_file_value("image").content,
                             req.get_file_value("depth").content, depth_scale));
  });
  server.Post("/sessions/:id/motion", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, set_motion(req.path_params.at("id"), req.body));
  });
  server.Post("/sessions/:id/preview", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, preview(req.path_params.at("id"), req.body));
  });
  server.Post("/sessions/:id/render", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, start_render(req.path_params.at("id"), req.body));
  });
  server.Get("/jobs/:job", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, job_status(req.path_params.at("job")));
  });
  server.Get("/jobs/:job/frames/:index", [this, send](const httplib::Request& req, httplib::Response& res) {
    int index = -1;
    try {
      index = std::stoi(req.path_params.at("index"));
    } catch (const std::exception&) {
    }
    send(res, job_frame(req.path_params.at("job"), index));
  });
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    res.set_content(json{{"code", res.status}, {"message", httplib::status_message(res.status)}}.dump(),
                    "application/json");
  });
}

}  // namespace cinema3d
