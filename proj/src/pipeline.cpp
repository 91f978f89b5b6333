#include "cinema3d/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <set>
#include <thread>

#include "cinema3d/assets.hpp"
#include "cinema3d/errors.hpp"

namespace cinema3d {

namespace fs = std::filesystem;
using nlohmann::json;

TrajectoryPreset parse_preset(const std::string& name) {
  if (name == "still") return TrajectoryPreset::still;
  if (name == "zoom") return TrajectoryPreset::zoom;
  if (name == "sway") return TrajectoryPreset::sway;
  if (name == "orbit") return TrajectoryPreset::orbit;
  throw ConfigError("unknown preset: " + name);
}

std::string to_string(TrajectoryPreset preset) {
  switch (preset) {
    case TrajectoryPreset::still:
      return "still";
    case TrajectoryPreset::zoom:
      return "zoom";
    case TrajectoryPreset::sway:
      return "sway";
    case TrajectoryPreset::orbit:
      return "orbit";
  }
  return "still";
}

Camera trajectory_camera(TrajectoryPreset preset, double amplitude, int frame_count,
                         int k, const Intrinsics& intrinsics,
                         const DepthStats& depth_stats) {
  if (frame_count < 1) throw ConfigError("frame count N must be at least 1");
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
    throw ConfigError("amplitude must be a non-negative number");
  }
  Camera camera;
  camera.intrinsics = intrinsics;
  // Phase wraps so that k = N lands exactly on k = 0.
  const double phase = double(((k % frame_count) + frame_count) % frame_count) / frame_count;
  const double median = depth_stats.median;
  switch (preset) {
    case TrajectoryPreset::still:
      break;
    case TrajectoryPreset::zoom: {
      const double s = std::sin(std::numbers::pi * phase);
      camera.pose = Pose::from_center(Eigen::Matrix3d::Identity(),
                                      {0.0, 0.0, amplitude * median * s * s});
      break;
    }
    case TrajectoryPreset::sway:
      camera.pose = Pose::from_center(
          Eigen::Matrix3d::Identity(),
          {amplitude * median * std::sin(2.0 * std::numbers::pi * phase), 0.0, 0.0});
      break;
    case TrajectoryPreset::orbit: {
      const double theta = amplitude * std::sin(2.0 * std::numbers::pi * phase);
      const Eigen::Matrix3d orientation =
          Eigen::AngleAxisd(theta, Eigen::Vector3d::UnitY()).toRotationMatrix();
      const Eigen::Vector3d look_at(0.0, 0.0, median);
      const Eigen::Vector3d center = look_at + orientation * Eigen::Vector3d(0.0, 0.0, -median);
      camera.pose = Pose::from_center(orientation, center);
      break;
    }
  }
  return camera;
}

Trajectory make_trajectory(TrajectoryPreset preset, double amplitude, int frame_count,
                           const Intrinsics& intrinsics, const DepthStats& depth_stats) {
  if (frame_count < 1) throw ConfigError("frame count N must be at least 1");
  Trajectory trajectory;
  trajectory.preset = preset;
  trajectory.amplitude = amplitude;
  trajectory.frame_count = frame_count;
  trajectory.look_at = Eigen::Vector3d(0.0, 0.0, depth_stats.median);
  for (int k = 0; k <= frame_count; ++k) {
    trajectory.cameras.push_back(
        trajectory_camera(preset, amplitude, frame_count, k, intrinsics, depth_stats));
  }
  return trajectory;
}

namespace {

using KeySet = std::set<std::string, std::less<>>;

void reject_unknown(const json& object, const KeySet& allowed, const std::string& where) {
  if (!object.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, unused] : object.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError("unknown key: " + (where.empty() ? key : where + "." + key));
    }
  }
}

double get_number(const json& object, const char* key, const std::string& where) {
  const json& value = object.at(key);
  if (!value.is_number()) throw ConfigError("type mismatch: " + where + key + " must be a number");
  return value.get<double>();
}

int get_int(const json& object, const char* key, const std::string& where) {
  const json& value = object.at(key);
  if (!value.is_number_integer()) {
    throw ConfigError("type mismatch: " + where + key + " must be an integer");
  }
  return value.get<int>();
}

std::string get_string(const json& object, const char* key, const std::string& where) {
  const json& value = object.at(key);
  if (!value.is_string()) throw ConfigError("type mismatch: " + where + key + " must be a string");
  return value.get<std::string>();
}

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path path(value);
  return path.is_relative() ? base / path : path;
}

fs::path existing_input(const json& doc, const char* key, const fs::path& base) {
  const fs::path path = resolve(base, get_string(doc, key, ""));
  if (!fs::is_regular_file(path)) {
    throw ConfigError(std::string("missing ") + key + " file: " + path.string());
  }
  return path;
}

}  // namespace

void parse_render_options(const json& document, RenderConfig& render) {
  if (document.contains("splat")) {
    const json& splat = document["splat"];
    reject_unknown(splat, {"mode", "radius_px", "z_window"}, "splat");
    if (splat.contains("mode")) {
      const std::string mode = get_string(splat, "mode", "splat.");
      if (mode == "nearest") {
        render.splat.mode = SplatMode::nearest;
      } else if (mode == "soft") {
        render.splat.mode = SplatMode::soft;
      } else {
        throw ConfigError("splat.mode must be nearest or soft");
      }
    }
    if (splat.contains("radius_px")) {
      render.splat.radius_px = get_number(splat, "radius_px", "splat.");
    }
    if (splat.contains("z_window")) {
      render.splat.z_window = get_number(splat, "z_window", "splat.");
    }
  }
  if (!(render.splat.radius_px > 0.0)) throw ConfigError("splat.radius_px must be positive");
  if (!(render.splat.z_window >= 0.0)) throw ConfigError("splat.z_window must be non-negative");
  if (document.contains("blend")) {
    const json& blend = document["blend"];
    reject_unknown(blend, {"sharpness"}, "blend");
    if (blend.contains("sharpness")) {
      render.sharpness = get_number(blend, "sharpness", "blend.");
    }
  }
  if (!(render.sharpness >= 0.0)) throw ConfigError("blend.sharpness must be non-negative");
  if (document.contains("cull")) {
    const json& cull = document["cull"];
    reject_unknown(cull, {"near"}, "cull");
    if (cull.contains("near")) render.splat.near = get_number(cull, "near", "cull.");
  }
  if (!(render.splat.near > 0.0)) throw ConfigError("cull.near must be positive");
}

JobConfig validate_config(const json& document, const fs::path& base_dir, bool require_out) {
  reject_unknown(document,
                 {"image", "depth", "flow", "hints", "out", "trajectory", "amplitude",
                  "frames", "speed", "depth_scale", "focal", "workers", "dump_layers",
                  "splat", "blend", "cull", "layers"},
                 "");
  JobConfig config;
  for (const char* key : {"image", "depth"}) {
    if (!document.contains(key)) throw ConfigError(std::string("missing required key: ") + key);
  }
  const bool has_flow = document.contains("flow");
  const bool has_hints = document.contains("hints");
  if (has_flow && has_hints) throw ConfigError("ambiguous motion source: give flow or hints, not both");
  if (!has_flow && !has_hints) throw ConfigError("no motion source: give flow or hints");

  config.image = existing_input(document, "image", base_dir);
  config.depth = existing_input(document, "depth", base_dir);
  if (has_flow) config.flow = existing_input(document, "flow", base_dir);
  if (has_hints) config.hints = existing_input(document, "hints", base_dir);

  if (document.contains("out")) {
    config.out = resolve(base_dir, get_string(document, "out", ""));
  } else if (require_out) {
    throw ConfigError("missing required key: out");
  }
  if (document.contains("trajectory")) {
    config.trajectory = parse_preset(get_string(document, "trajectory", ""));
  }
  if (document.contains("amplitude")) config.amplitude = get_number(document, "amplitude", "");
  if (!(config.amplitude >= 0.0)) throw ConfigError("amplitude must be non-negative");
  if (document.contains("frames")) config.frames = get_int(document, "frames", "");
  if (config.frames < 1) throw ConfigError("frames must be at least 1");
  if (document.contains("speed")) config.speed = get_number(document, "speed", "");
  if (!(config.speed > 0.0) || !std::isfinite(config.speed)) {
    throw ConfigError("speed must be a positive finite number");
  }
  if (document.contains("depth_scale")) {
    config.depth_scale = get_number(document, "depth_scale", "");
  }
  if (!(config.depth_scale > 0.0)) throw ConfigError("depth_scale must be positive");
  if (document.contains("focal")) {
    config.focal = get_number(document, "focal", "");
    if (!(*config.focal > 0.0)) throw ConfigError("focal must be positive");
  }
  if (document.contains("workers")) config.workers = get_int(document, "workers", "");
  if (config.workers < 0) throw ConfigError("workers must be non-negative (0 = all cores)");
  if (document.contains("dump_layers")) {
    if (!document["dump_layers"].is_boolean()) {
      throw ConfigError("type mismatch: dump_layers must be a boolean");
    }
    config.dump_layers = document["dump_layers"].get<bool>();
  }

  parse_render_options(document, config.render);
  if (document.contains("layers")) {
    const json& layers = document["layers"];
    reject_unknown(layers, {"gap_threshold", "max_layers", "inpaint_band_px"}, "layers");
    if (layers.contains("gap_threshold")) {
      config.scene.gap_threshold = get_number(layers, "gap_threshold", "layers.");
    }
    if (layers.contains("max_layers")) {
      config.scene.max_layers = get_int(layers, "max_layers", "layers.");
    }
    if (layers.contains("inpaint_band_px")) {
      config.scene.inpaint_band_px = get_int(layers, "inpaint_band_px", "layers.");
    }
  }
  if (!(config.scene.gap_threshold > 0.0 && config.scene.gap_threshold < 1.0)) {
    throw ConfigError("layers.gap_threshold must lie in (0, 1)");
  }
  if (config.scene.max_layers < 1) throw ConfigError("layers.max_layers must be at least 1");
  if (config.scene.inpaint_band_px < 0) {
    throw ConfigError("layers.inpaint_band_px must be non-negative");
  }
  return config;
}

PreparedJob prepare_job(const JobConfig& config) {
  ColorImage color = load_color(config.image);
  DepthMap depth = load_depth(config.depth, {config.depth_scale});

  std::optional<FlowField> flow;
  std::optional<MaskImage> mask;
  double speed = config.speed;
  std::vector<FlowHint> hints;
  if (config.flow) {
    flow = load_flow(*config.flow);
  } else if (config.hints) {
    const HintsDocument document = load_hints_document(*config.hints);
    mask = resolve_hint_mask(document, config.hints->parent_path(), color.width(),
                             color.height());
    hints = document.hints;
    speed *= document.speed;
  }
  AssetBundle assets = make_bundle(std::move(color), std::move(depth), std::move(flow),
                                   std::move(mask));

  FlowField motion = assets.flow ? *assets.flow
                                 : estimate_motion_from_hints(*assets.mask, hints).flow;
  motion = scale_flow(motion, speed);

  const int width = assets.width();
  const int height = assets.height();
  const Camera camera =
      default_camera(width, height, config.focal.value_or(double(std::max(width, height))));
  LayeredScene scene = build_scene(assets.color, assets.depth, camera, config.scene);
  Trajectory trajectory = make_trajectory(config.trajectory, config.amplitude, config.frames,
                                          camera.intrinsics, {median_depth(assets.depth)});
  return PreparedJob{std::move(assets), std::move(scene), std::move(motion),
                     std::move(trajectory)};
}

std::vector<Bytes> render_frames(const PreparedJob& job, const RenderConfig& render,
                                 int workers) {
  const int frame_count = job.trajectory.frame_count;
  if (workers <= 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, frame_count);

  std::vector<Bytes> frames(static_cast<std::size_t>(frame_count));
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  auto work = [&](int worker) {
    try {
      for (int k = next++; k < frame_count; k = next++) {
        const Frame frame = render_view(job.scene, job.flow, k, frame_count,
                                        job.trajectory.cameras[std::size_t(k)], render);
        frames[std::size_t(k)] = encode_frame(frame.color);
      }
    } catch (...) {
      errors[std::size_t(worker)] = std::current_exception();
      next = frame_count;
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  for (const auto& error : errors) {
    if (!error) continue;
    try {
      std::rethrow_exception(error);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw RenderError(std::string("render failed: ") + e.what());
    }
  }
  return frames;
}

std::vector<fs::path> render_cinemagraph(const JobConfig& config) {
  const PreparedJob job = prepare_job(config);
  std::error_code ec;
  fs::create_directories(config.out, ec);
  if (ec) throw AssetError("cannot create output directory " + config.out.string());
  if (config.dump_layers) dump_layers(job.scene, config.out / "layers");

  const std::vector<Bytes> frames = render_frames(job, config.render, config.workers);
  std::vector<fs::path> paths;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    paths.push_back(config.out / frame_filename(int(k)));
    write_file(paths.back(), frames[k]);
  }
  return paths;
}

}  // namespace cinema3d
