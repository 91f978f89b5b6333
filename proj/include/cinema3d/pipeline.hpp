#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cinema3d/assets.hpp"
#include "cinema3d/camera.hpp"
#include "cinema3d/renderer.hpp"
#include "cinema3d/scene.hpp"

namespace cinema3d {

enum class TrajectoryPreset { still, zoom, sway, orbit };

TrajectoryPreset parse_preset(const std::string& name);
std::string to_string(TrajectoryPreset preset);

struct DepthStats {
  double median = 1.0;
};

/// N+1 loop-closed cameras sharing the source intrinsics.
struct Trajectory {
  TrajectoryPreset preset = TrajectoryPreset::still;
  double amplitude = 0.0;
  int frame_count = 1;
  Eigen::Vector3d look_at = Eigen::Vector3d::Zero();
  std::vector<Camera> cameras;
};

/// Camera path phased by k/N; index N reuses phase 0, so pose(N) == pose(0)
/// bit for bit. With m the median depth:
///   still  every pose is the source pose
///   zoom   center moves to (0, 0, a·m·sin²(πk/N))
///   sway   center moves to (a·m·sin(2πk/N), 0, 0)
///   orbit  center swings about look_at = (0, 0, m) by θ = a·sin(2πk/N)
///          radians around the vertical axis, always aimed at look_at
Trajectory make_trajectory(TrajectoryPreset preset, double amplitude, int frame_count,
                           const Intrinsics& intrinsics, const DepthStats& depth_stats);

/// Single camera of a trajectory at frame k without building the others.
Camera trajectory_camera(TrajectoryPreset preset, double amplitude, int frame_count,
                         int k, const Intrinsics& intrinsics,
                         const DepthStats& depth_stats);

struct JobConfig {
  std::filesystem::path image;
  std::filesystem::path depth;
  std::optional<std::filesystem::path> flow;
  std::optional<std::filesystem::path> hints;
  std::filesystem::path out;

  TrajectoryPreset trajectory = TrajectoryPreset::sway;
  double amplitude = 0.05;
  int frames = 60;
  /// Multiplies M. Applied on top of any speed in the hints document.
  double speed = 1.0;
  double depth_scale = 1.0;
  /// Focal length in pixels; defaults to max(width, height).
  std::optional<double> focal;
  int workers = 1;
  bool dump_layers = false;

  SceneOptions scene;
  RenderConfig render;
};

/// Applies the optional "splat", "blend" and "cull" objects of `document`
/// onto `render`, with the same checks as validate_config.
void parse_render_options(const nlohmann::json& document, RenderConfig& render);

/// Validates a job document. Relative paths resolve against `base_dir`.
/// Unknown keys, type mismatches and a second motion source are rejected;
/// referenced input files must exist. `out` may be absent when
/// `require_out` is false.
JobConfig validate_config(const nlohmann::json& document,
                          const std::filesystem::path& base_dir,
                          bool require_out = true);

/// Loaded and validated inputs with the scene built once.
struct PreparedJob {
  AssetBundle assets;
  LayeredScene scene;
  FlowField flow;
  Trajectory trajectory;
};

PreparedJob prepare_job(const JobConfig& config);

/// Renders frames k = 0..N−1 in parallel (config.workers) and writes them in
/// index order as out/frame_%05d.png. Returns the written paths.
std::vector<std::filesystem::path> render_cinemagraph(const JobConfig& config);

/// Same as above from an already prepared job; returns encoded PNGs.
std::vector<Bytes> render_frames(const PreparedJob& job, const RenderConfig& render,
                                 int workers);

}  // namespace cinema3d
