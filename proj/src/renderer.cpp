#include "cinema3d/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "cinema3d/errors.hpp"
#include "cinema3d/harmonic.hpp"

namespace cinema3d {

namespace {

constexpr double kBlendEpsilon = 1e-8;
constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Projected {
  double u;
  double v;
  double z;
};

std::vector<Projected> project_cloud(const PointCloud& cloud, const Camera& camera,
                                     double near) {
  std::vector<Projected> out(std::size_t(cloud.size()));
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d p = camera.to_camera(cloud.positions.col(i));
    if (!(p.z() > near)) {
      out[std::size_t(i)] = {0.0, 0.0, -1.0};
      continue;
    }
    const Eigen::Vector2d uv = project_point(camera.intrinsics, p);
    out[std::size_t(i)] = {uv.x(), uv.y(), p.z()};
  }
  return out;
}

RenderLayers splat_nearest(const PointCloud& cloud, const std::vector<Projected>& points,
                           int width, int height) {
  RenderLayers out{ColorImage(width, height), DepthMap(width, height),
                   AlphaMap(width, height)};
  std::vector<double> zbuffer(std::size_t(width) * height, kInfinity);
  std::vector<Eigen::Index> winner(zbuffer.size(), -1);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Projected& p = points[i];
    if (p.z <= 0.0) continue;
    const double fx = std::floor(p.u + 0.5);
    const double fy = std::floor(p.v + 0.5);
    if (!(fx >= 0.0 && fy >= 0.0 && fx < width && fy < height)) continue;
    const std::size_t pixel = std::size_t(fy) * width + std::size_t(fx);
    if (p.z < zbuffer[pixel]) {
      zbuffer[pixel] = p.z;
      winner[pixel] = Eigen::Index(i);
    }
  }
  for (std::size_t pixel = 0; pixel < zbuffer.size(); ++pixel) {
    if (winner[pixel] < 0) continue;
    const Eigen::Index row = Eigen::Index(pixel);
    out.color.data().row(row) = cloud.colors.col(winner[pixel]).transpose();
    out.depth.data()(row) = static_cast<float>(zbuffer[pixel]);
    out.alpha.data()(row) = 1.0f;
  }
  return out;
}

template <typename Visit>
void for_each_footprint(const Projected& p, double radius, int width, int height,
                        Visit&& visit) {
  const int x_begin = std::max(0, static_cast<int>(std::ceil(p.u - radius)));
  const int x_end = std::min(width - 1, static_cast<int>(std::floor(p.u + radius)));
  const int y_begin = std::max(0, static_cast<int>(std::ceil(p.v - radius)));
  const int y_end = std::min(height - 1, static_cast<int>(std::floor(p.v + radius)));
  for (int y = y_begin; y <= y_end; ++y) {
    const double wy = 1.0 - std::abs(y - p.v) / radius;
    if (wy <= 0.0) continue;
    for (int x = x_begin; x <= x_end; ++x) {
      const double wx = 1.0 - std::abs(x - p.u) / radius;
      if (wx <= 0.0) continue;
      visit(std::size_t(y) * width + std::size_t(x), wx * wy);
    }
  }
}

RenderLayers splat_soft(const PointCloud& cloud, const std::vector<Projected>& points,
                        int width, int height, const SplatConfig& config) {
  const std::size_t n = std::size_t(width) * height;
  std::vector<double> nearest(n, kInfinity);
  auto in_reach = [&](const Projected& p) {
    return p.z > 0.0 && p.u > -config.radius_px && p.v > -config.radius_px &&
           p.u < width - 1 + config.radius_px && p.v < height - 1 + config.radius_px;
  };
  for (const Projected& p : points) {
    if (!in_reach(p)) continue;
    for_each_footprint(p, config.radius_px, width, height, [&](std::size_t pixel, double) {
      nearest[pixel] = std::min(nearest[pixel], p.z);
    });
  }

  std::vector<double> weight(n, 0.0);
  std::vector<double> depth(n, 0.0);
  std::vector<Eigen::Array3d> color(n, Eigen::Array3d::Zero());
  const double window = 1.0 + config.z_window;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Projected& p = points[i];
    if (!in_reach(p)) continue;
    const Eigen::Array3d c = cloud.colors.col(Eigen::Index(i)).cast<double>().array();
    for_each_footprint(p, config.radius_px, width, height, [&](std::size_t pixel, double w) {
      if (p.z > nearest[pixel] * window) return;
      weight[pixel] += w;
      depth[pixel] += w * p.z;
      color[pixel] += w * c;
    });
  }

  RenderLayers out{ColorImage(width, height), DepthMap(width, height),
                   AlphaMap(width, height)};
  for (std::size_t pixel = 0; pixel < n; ++pixel) {
    if (!(weight[pixel] > 0.0)) continue;
    const Eigen::Index row = Eigen::Index(pixel);
    out.alpha.data()(row) = static_cast<float>(std::min(1.0, weight[pixel]));
    out.depth.data()(row) = static_cast<float>(depth[pixel] / weight[pixel]);
    out.color.data().row(row) = (color[pixel] / weight[pixel]).cast<float>().transpose();
  }
  return out;
}

void check_view(int t, int frame_count) {
  if (frame_count < 1) throw ConfigError("frame count N must be at least 1");
  if (t < 0 || t > frame_count) {
    throw ConfigError("time index " + std::to_string(t) + " outside [0, " +
                      std::to_string(frame_count) + "]");
  }
}

}  // namespace

RenderLayers splat(const PointCloud& cloud, const Camera& camera, int width,
                   int height, const SplatConfig& config) {
  camera.validate();
  if (width <= 0 || height <= 0) throw RenderError("splat: empty target view");
  if (!(config.radius_px > 0.0)) throw ConfigError("splat.radius_px must be positive");
  if (!(config.z_window >= 0.0)) throw ConfigError("splat.z_window must be non-negative");
  const auto points = project_cloud(cloud, camera, config.near);
  if (config.mode == SplatMode::nearest) {
    return splat_nearest(cloud, points, width, height);
  }
  return splat_soft(cloud, points, width, height, config);
}

WeightMap blend_weights(const RenderLayers& forward, const RenderLayers& backward,
                        int t, int frame_count, double sharpness) {
  check_view(t, frame_count);
  if (!same_size(forward.color, backward.color)) {
    throw RenderError("blend_weights: render size mismatch");
  }
  const Eigen::Index n = forward.alpha.pixel_count();
  const auto& alpha_f = forward.alpha.data();
  const auto& alpha_b = backward.alpha.data();
  const auto& depth_f = forward.depth.data();
  const auto& depth_b = backward.depth.data();

  double d_min = kInfinity;
  double d_max = -kInfinity;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (alpha_f(i) > 0.0f) {
      d_min = std::min<double>(d_min, depth_f(i));
      d_max = std::max<double>(d_max, depth_f(i));
    }
    if (alpha_b(i) > 0.0f) {
      d_min = std::min<double>(d_min, depth_b(i));
      d_max = std::max<double>(d_max, depth_b(i));
    }
  }
  const double span = d_max - d_min + kBlendEpsilon;

  const double time_f = 1.0 - double(t) / frame_count;
  const double time_b = double(t) / frame_count;
  auto log_term = [&](double time_weight, float alpha, float depth) {
    if (!(time_weight > 0.0) || !(alpha > 0.0f)) return -kInfinity;
    return std::log(time_weight * alpha) - sharpness * ((depth - d_min) / span);
  };

  WeightMap out{Raster<float, 1, WeightTag>(forward.width(), forward.height()),
                MaskImage(forward.width(), forward.height())};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lf = log_term(time_f, alpha_f(i), depth_f(i));
    const double lb = log_term(time_b, alpha_b(i), depth_b(i));
    if (lf == -kInfinity && lb == -kInfinity) {
      out.hole.data()(i) = 1;
      continue;
    }
    const double top = std::max(lf, lb);
    const double a_f = std::exp(lf - top);
    const double a_b = std::exp(lb - top);
    out.weight.data()(i) = static_cast<float>(a_f / (a_f + a_b + kBlendEpsilon));
  }
  return out;
}

Frame composite(const RenderLayers& forward, const RenderLayers& backward,
                const WeightMap& weights) {
  if (!same_size(forward.color, backward.color) ||
      !same_size(forward.color, weights.weight)) {
    throw RenderError("composite: size mismatch");
  }
  const int width = forward.width();
  const int height = forward.height();
  const Eigen::Index n = forward.color.pixel_count();

  Frame frame{ColorImage(width, height), DepthMap(width, height), weights.hole, 0, {}};
  std::vector<CellRole> roles(std::size_t(n), CellRole::fixed);
  Eigen::Index holes = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (weights.hole.data()(i)) {
      roles[i] = CellRole::free;
      ++holes;
      continue;
    }
    const float w = weights.weight.data()(i);
    for (int c = 0; c < 3; ++c) {
      frame.color.data()(i, c) = std::lerp(backward.color.data()(i, c), forward.color.data()(i, c), w);
    }
    frame.depth.data()(i) = std::lerp(backward.depth.data()(i), forward.depth.data()(i), w);
  }

  if (holes == n) {
    std::clog << "[cinema3d] warning: frame has no covered pixels; filled with black\n";
  } else if (holes > 0) {
    HarmonicValues values(n, 4);
    values.leftCols<3>() = frame.color.data().cast<double>();
    values.col(3) = frame.depth.data().cast<double>();
    solve_harmonic(width, height, roles, values, {5000, 1e-4, HarmonicScheme::jacobi});
    for (Eigen::Index i = 0; i < n; ++i) {
      if (roles[i] != CellRole::free) continue;
      frame.color.data().row(i) = values.row(i).head<3>().cast<float>();
      frame.depth.data()(i) = static_cast<float>(values(i, 3));
    }
  }
  frame.color.data() = frame.color.data().max(0.0f).min(1.0f);
  frame.depth.data() = frame.depth.data().max(0.0f);
  return frame;
}

ViewRender render_with_displacements(const LayeredScene& scene,
                                     const DisplacementField& forward_field,
                                     const DisplacementField& backward_field,
                                     int t, int frame_count, const Camera& camera,
                                     const RenderConfig& config) {
  check_view(t, frame_count);
  const PointCloud forward_cloud =
      displace(scene.cloud, lift_flow(forward_field, scene.cloud, scene.camera));
  const PointCloud backward_cloud =
      displace(scene.cloud, lift_flow(backward_field, scene.cloud, scene.camera));

  ViewRender view;
  view.forward = splat(forward_cloud, camera, scene.width, scene.height, config.splat);
  view.backward = splat(backward_cloud, camera, scene.width, scene.height, config.splat);
  view.weights = blend_weights(view.forward, view.backward, t, frame_count, config.sharpness);
  view.frame = composite(view.forward, view.backward, view.weights);
  view.frame.time_index = t;
  view.frame.camera = camera;
  return view;
}

ViewRender render_view_detailed(const LayeredScene& scene, const FlowField& flow,
                                int t, int frame_count, const Camera& camera,
                                const RenderConfig& config) {
  check_view(t, frame_count);
  if (flow.width() != scene.width || flow.height() != scene.height) {
    throw AssetError("dimension mismatch: flow vs scene");
  }
  const DisplacementField forward_field =
      euler_integrate(flow, t, Direction::forward, config.threads);
  const DisplacementField backward_field =
      euler_integrate(flow, frame_count - t, Direction::backward, config.threads);
  return render_with_displacements(scene, forward_field, backward_field, t,
                                   frame_count, camera, config);
}

Frame render_view(const LayeredScene& scene, const FlowField& flow, int t,
                  int frame_count, const Camera& camera, const RenderConfig& config) {
  return render_view_detailed(scene, flow, t, frame_count, camera, config).frame;
}

}  // namespace cinema3d
