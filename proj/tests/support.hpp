#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "cinema3d/camera.hpp"
#include "cinema3d/raster.hpp"
#include "cinema3d/renderer.hpp"
#include "cinema3d/scene.hpp"

namespace testing {

using namespace cinema3d;
using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("cinema3d_" + name + "_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline ColorImage random_color(int width, int height, Rng& rng) {
  ColorImage image(width, height);
  for (Eigen::Index i = 0; i < image.data().size(); ++i) {
    image.data().data()[i] = static_cast<float>(uniform(rng, 0.0, 1.0));
  }
  return image;
}

inline FlowField random_flow(int width, int height, Rng& rng, double magnitude) {
  FlowField flow(width, height);
  for (Eigen::Index i = 0; i < flow.data().size(); ++i) {
    flow.data().data()[i] = static_cast<float>(uniform(rng, -magnitude, magnitude));
  }
  return flow;
}

inline FlowField constant_flow(int width, int height, float u, float v) {
  FlowField flow(width, height);
  flow.data().col(0).setConstant(u);
  flow.data().col(1).setConstant(v);
  return flow;
}

inline DepthMap constant_depth(int width, int height, float d) {
  DepthMap depth(width, height);
  depth.data().setConstant(d);
  return depth;
}

/// A near rectangle at `near` in front of a background plane at `far`.
inline DepthMap two_plane_depth(int width, int height, Rng& rng, float near, float far) {
  DepthMap depth = constant_depth(width, height, far);
  const int x0 = uniform_int(rng, 0, width / 2 - 1);
  const int y0 = uniform_int(rng, 0, height / 2 - 1);
  const int x1 = uniform_int(rng, width / 2 + 1, width);
  const int y1 = uniform_int(rng, height / 2 + 1, height);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) depth.at(x, y) = near;
  }
  return depth;
}

/// Depth varying linearly across the image between `lo` and `hi`.
inline DepthMap gradient_depth(int width, int height, Rng& rng, float lo, float hi) {
  DepthMap depth(width, height);
  const double angle = uniform(rng, 0.0, 2.0 * M_PI);
  const double cx = std::cos(angle), cy = std::sin(angle);
  const double span = std::abs(cx) * (width - 1) + std::abs(cy) * (height - 1);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double s = (cx * x + cy * y) + (cx < 0 ? -cx * (width - 1) : 0.0) +
                       (cy < 0 ? -cy * (height - 1) : 0.0);
      depth.at(x, y) = static_cast<float>(lo + (hi - lo) * s / std::max(span, 1.0));
    }
  }
  return depth;
}

inline Camera shifted_camera(const Camera& source, const Eigen::Vector3d& center) {
  Camera camera = source;
  camera.pose = Pose::from_center(Eigen::Matrix3d::Identity(), center);
  return camera;
}

// ---------------------------------------------------------------------------
// Oracles. Written independently of the library code paths they check.

/// One pixel of the displacement recursion, with bilinear weights written
/// as the four-corner sum.
inline Eigen::Vector2d scalar_euler(const FlowField& flow, int x0, int y0, int steps,
                                    double sign) {
  const int w = flow.width();
  const int h = flow.height();
  auto value = [&](int x, int y, int c) -> double {
    return flow.data()(Eigen::Index(y) * w + x, c);
  };
  double u = 0.0, v = 0.0;
  for (int s = 0; s < steps; ++s) {
    double px = x0 + u, py = y0 + v;
    px = px < 0 ? 0 : (px > w - 1 ? w - 1 : px);
    py = py < 0 ? 0 : (py > h - 1 ? h - 1 : py);
    const int ix = int(std::floor(px)), iy = int(std::floor(py));
    const int jx = ix + 1 < w ? ix + 1 : ix, jy = iy + 1 < h ? iy + 1 : iy;
    const double a = px - ix, b = py - iy;
    double m[2];
    for (int c = 0; c < 2; ++c) {
      m[c] = (1 - a) * (1 - b) * value(ix, iy, c) + a * (1 - b) * value(jx, iy, c) +
             (1 - a) * b * value(ix, jy, c) + a * b * value(jx, jy, c);
    }
    u += sign * m[0];
    v += sign * m[1];
  }
  return {u, v};
}

/// Agglomerative single linkage on distinct values by exhaustive pairwise
/// distances: merge everything closer than the threshold, then keep merging
/// the closest pair (fewest members, then leftmost) down to max_layers.
inline std::vector<DepthInterval> brute_force_single_linkage(std::vector<double> values,
                                                             double gap_threshold,
                                                             int max_layers) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  const double threshold = gap_threshold * (values.back() - values.front());
  std::vector<std::vector<double>> clusters;
  for (double v : values) clusters.push_back({v});

  auto linkage = [](const std::vector<double>& a, const std::vector<double>& b) {
    double best = std::numeric_limits<double>::infinity();
    for (double x : a) {
      for (double y : b) best = std::min(best, std::abs(x - y));
    }
    return best;
  };
  auto merge_step = [&](bool threshold_phase) {
    std::size_t bi = 0, bj = 0;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_size = 0;
    double best_left = 0.0;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double d = linkage(clusters[i], clusters[j]);
        const std::size_t size = clusters[i].size() + clusters[j].size();
        const double left = std::min(clusters[i].front(), clusters[j].front());
        const bool better = d < best || (d == best && (size < best_size ||
                                                       (size == best_size && left < best_left)));
        if (better) {
          best = d;
          bi = i;
          bj = j;
          best_size = size;
          best_left = left;
        }
      }
    }
    if (threshold_phase && !(best <= threshold)) return false;
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    std::sort(clusters[bi].begin(), clusters[bi].end());
    clusters.erase(clusters.begin() + std::ptrdiff_t(bj));
    std::sort(clusters.begin(), clusters.end());
    return true;
  };
  while (clusters.size() > 1 && merge_step(true)) {
  }
  while (clusters.size() > std::size_t(max_layers)) merge_step(false);

  std::vector<DepthInterval> out;
  for (const auto& c : clusters) out.push_back({c.front(), c.back()});
  return out;
}

/// Nearest-mode splat by exhaustive search: for each pixel, scan every point.
inline RenderLayers brute_force_nearest(const PointCloud& cloud, const Camera& camera,
                                        int width, int height, double near) {
  RenderLayers out{ColorImage(width, height), DepthMap(width, height),
                   AlphaMap(width, height)};
  const Eigen::Matrix3d& r = camera.pose.rotation;
  const Eigen::Vector3d& t = camera.pose.translation;
  const Intrinsics& k = camera.intrinsics;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      Eigen::Index best = -1;
      double best_z = 0.0;
      for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        const Eigen::Vector3d p = r * cloud.positions.col(i) + t;
        if (!(p.z() > near)) continue;
        const double u = k.fx * p.x() / p.z() + k.cx;
        const double v = k.fy * p.y() / p.z() + k.cy;
        if (std::floor(u + 0.5) != x || std::floor(v + 0.5) != y) continue;
        if (best < 0 || p.z() < best_z) {
          best = i;
          best_z = p.z();
        }
      }
      if (best < 0) continue;
      out.color.pixel(x, y) = cloud.colors.col(best).transpose();
      out.depth.at(x, y) = static_cast<float>(best_z);
      out.alpha.at(x, y) = 1.0f;
    }
  }
  return out;
}

/// Pixel position of a world point seen by `camera`.
inline Eigen::Vector2d reference_project(const Camera& camera, const Eigen::Vector3d& world) {
  const Eigen::Vector3d p = camera.pose.rotation * world + camera.pose.translation;
  return {camera.intrinsics.fx * p.x() / p.z() + camera.intrinsics.cx,
          camera.intrinsics.fy * p.y() / p.z() + camera.intrinsics.cy};
}

/// Weight-map formula evaluated literally for one pixel.
inline double reference_weight(double t, double n, double alpha_f, double alpha_b,
                               double dhat_f, double dhat_b, double s) {
  const double a = (1 - t / n) * alpha_f * std::exp(-s * dhat_f);
  const double b = (t / n) * alpha_b * std::exp(-s * dhat_b);
  return a / (a + b + 1e-8);
}

/// One point per pixel of a fully valid single-layer scene; handy for
/// renderer tests that do not need layering.
inline LayeredScene flat_scene(const ColorImage& color, const DepthMap& depth,
                               const Camera& camera) {
  LayeredScene scene;
  scene.width = color.width();
  scene.height = color.height();
  scene.camera = camera;
  scene.intervals.ranges = {{depth.data().minCoeff(), depth.data().maxCoeff()}};
  LdiLayer layer{color, depth, MaskImage(color.width(), color.height()),
                 MaskImage(color.width(), color.height()), scene.intervals.ranges[0], 0.0};
  layer.valid.data().setOnes();
  scene.layers = {layer};
  scene.cloud = unproject(scene.layers, camera);
  return scene;
}

}  // namespace testing
