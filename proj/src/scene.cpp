#include "cinema3d/scene.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "cinema3d/assets.hpp"
#include "cinema3d/errors.hpp"
#include "cinema3d/harmonic.hpp"

namespace cinema3d {

namespace fs = std::filesystem;

int DepthIntervals::locate(double depth) const {
  for (int i = 0; i < count(); ++i) {
    if (depth <= ranges[i].high) return i;
  }
  return count() - 1;
}

DepthIntervals cluster_depth_values(std::vector<double> values,
                                    double gap_threshold, int max_layers) {
  if (!(gap_threshold > 0.0 && gap_threshold < 1.0)) {
    throw ConfigError("gap_threshold must lie in (0, 1)");
  }
  if (max_layers < 1) throw ConfigError("max_layers must be at least 1");
  if (values.empty()) throw AssetError("cluster_depth: no depth values");

  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  DepthIntervals out;
  out.margin = gap_threshold * (values.back() - values.front());

  // Cluster k spans values[starts[k]] .. values[starts[k+1] - 1].
  std::vector<std::size_t> starts = {0};
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] - values[i - 1] > out.margin) starts.push_back(i);
  }
  // Merge the closest neighbors; among equal gaps prefer the smallest merged
  // cluster, then the leftmost.
  auto end_of = [&](std::size_t k) { return k + 1 < starts.size() ? starts[k + 1] : values.size(); };
  while (starts.size() > std::size_t(max_layers)) {
    std::size_t best = 0;
    double best_gap = 0.0;
    std::size_t best_size = 0;
    for (std::size_t k = 1; k < starts.size(); ++k) {
      const double gap = values[starts[k]] - values[starts[k] - 1];
      const std::size_t size = end_of(k) - starts[k - 1];
      if (best == 0 || gap < best_gap || (gap == best_gap && size < best_size)) {
        best = k;
        best_gap = gap;
        best_size = size;
      }
    }
    starts.erase(starts.begin() + std::ptrdiff_t(best));
  }
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const std::size_t end = k + 1 < starts.size() ? starts[k + 1] : values.size();
    out.ranges.push_back({values[starts[k]], values[end - 1]});
  }
  return out;
}

DepthIntervals cluster_depth(const DepthMap& depth, double gap_threshold,
                             int max_layers) {
  const auto& data = depth.data();
  std::vector<double> values(data.data(), data.data() + data.size());
  return cluster_depth_values(std::move(values), gap_threshold, max_layers);
}

std::vector<LdiLayer> build_ldi(const ColorImage& color, const DepthMap& depth,
                                const DepthIntervals& intervals) {
  if (!same_size(color, depth)) throw AssetError("dimension mismatch: color vs depth");
  const int width = color.width();
  const int height = color.height();
  const int count = intervals.count();

  std::vector<LdiLayer> layers;
  layers.reserve(std::size_t(count));
  // Output order is far → near; interval order is near → far.
  for (int k = count - 1; k >= 0; --k) {
    layers.push_back({ColorImage(width, height), DepthMap(width, height),
                      MaskImage(width, height), MaskImage(width, height),
                      intervals.ranges[k], intervals.margin});
  }
  for (Eigen::Index i = 0; i < depth.pixel_count(); ++i) {
    const int interval = intervals.locate(depth.data()(i));
    LdiLayer& layer = layers[std::size_t(count - 1 - interval)];
    layer.color.data().row(i) = color.data().row(i);
    layer.depth.data()(i) = depth.data()(i);
    layer.valid.data()(i) = 1;
  }
  return layers;
}

MaskImage occluded_region(const std::vector<LdiLayer>& layers, std::size_t index) {
  const LdiLayer& layer = layers.at(index);
  MaskImage occluded(layer.valid.width(), layer.valid.height());
  for (std::size_t k = index + 1; k < layers.size(); ++k) {
    const auto& nearer = layers[k];
    for (Eigen::Index i = 0; i < occluded.pixel_count(); ++i) {
      if (nearer.valid.data()(i) && !nearer.inpainted.data()(i) &&
          !layer.valid.data()(i)) {
        occluded.data()(i) = 1;
      }
    }
  }
  return occluded;
}

namespace {

// Square dilation by `radius`, done as two separable 1-D passes.
MaskImage dilate(const MaskImage& mask, int radius) {
  const int width = mask.width();
  const int height = mask.height();
  MaskImage horizontal(width, height);
  for (int y = 0; y < height; ++y) {
    int last = -1'000'000;
    // Distance to the nearest set pixel on the left, then on the right.
    std::vector<int> left(static_cast<std::size_t>(width));
    for (int x = 0; x < width; ++x) {
      if (mask.at(x, y)) last = x;
      left[x] = x - last;
    }
    last = 1'000'000;
    for (int x = width - 1; x >= 0; --x) {
      if (mask.at(x, y)) last = x;
      horizontal.at(x, y) = std::min(left[x], last - x) <= radius ? 1 : 0;
    }
  }
  MaskImage out(width, height);
  for (int x = 0; x < width; ++x) {
    int last = -1'000'000;
    std::vector<int> up(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) {
      if (horizontal.at(x, y)) last = y;
      up[y] = y - last;
    }
    last = 1'000'000;
    for (int y = height - 1; y >= 0; --y) {
      if (horizontal.at(x, y)) last = y;
      out.at(x, y) = std::min(up[y], last - y) <= radius ? 1 : 0;
    }
  }
  return out;
}

}  // namespace

LdiLayer inpaint_layer(const LdiLayer& layer, const MaskImage& occluded,
                       int band_px) {
  if (band_px < 0) throw ConfigError("inpaint band must be non-negative");
  LdiLayer out = layer;
  if (band_px == 0) return out;

  const MaskImage band = dilate(layer.valid, band_px);
  const Eigen::Index n = layer.valid.pixel_count();
  std::vector<CellRole> roles(std::size_t(n), CellRole::excluded);
  HarmonicValues values = HarmonicValues::Zero(n, 4);
  bool any_target = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (layer.valid.data()(i)) {
      roles[i] = CellRole::fixed;
      values.row(i).head<3>() = layer.color.data().row(i).cast<double>();
      values(i, 3) = layer.depth.data()(i);
    } else if (occluded.data()(i) && band.data()(i)) {
      roles[i] = CellRole::free;
      any_target = true;
    }
  }
  if (!any_target) return out;

  const HarmonicReport report =
      solve_harmonic(layer.valid.width(), layer.valid.height(), roles, values,
                     {5000, 1e-4, HarmonicScheme::jacobi});
  std::vector<std::uint8_t> unreachable(std::size_t(n), 0);
  for (Eigen::Index i : report.unreachable) unreachable[i] = 1;

  const double depth_low = std::max<double>(layer.interval.low - layer.margin, kDepthFloor);
  const double depth_high = layer.interval.high + layer.margin;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (roles[i] != CellRole::free || unreachable[i]) continue;
    for (int c = 0; c < 3; ++c) {
      out.color.data()(i, c) = static_cast<float>(std::clamp(values(i, c), 0.0, 1.0));
    }
    out.depth.data()(i) = static_cast<float>(std::clamp(values(i, 3), depth_low, depth_high));
    out.valid.data()(i) = 1;
    out.inpainted.data()(i) = 1;
  }
  return out;
}

PointCloud unproject(const std::vector<LdiLayer>& layers, const Camera& camera) {
  camera.validate();
  Eigen::Index total = 0;
  for (const auto& layer : layers) total += layer.valid.data().cast<Eigen::Index>().sum();

  PointCloud cloud;
  cloud.positions.resize(3, total);
  cloud.colors.resize(3, total);
  cloud.pixels.resize(2, total);
  cloud.layers.resize(std::size_t(total));

  const Intrinsics& k = camera.intrinsics;
  Eigen::Index next = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LdiLayer& layer = layers[l];
    for (int y = 0; y < layer.valid.height(); ++y) {
      for (int x = 0; x < layer.valid.width(); ++x) {
        if (!layer.valid.at(x, y)) continue;
        const double d = layer.depth.at(x, y);
        if (!(d > 0.0)) {
          throw AssetError("nonpositive depth at valid pixel (" +
                           std::to_string(x) + ", " + std::to_string(y) + ")");
        }
        cloud.positions.col(next) = unproject_pixel<double>(k, x, y, d);
        cloud.colors.col(next) = layer.color.pixel(x, y).transpose();
        cloud.pixels.col(next) = Eigen::Vector2i(x, y);
        cloud.layers[std::size_t(next)] = static_cast<int>(l);
        ++next;
      }
    }
  }
  return cloud;
}

SceneFlow lift_flow(const DisplacementField& displacement, const PointCloud& cloud,
                    const Camera& camera) {
  const Intrinsics& k = camera.intrinsics;
  SceneFlow flow{Eigen::Matrix3Xd::Zero(3, cloud.size()), displacement.time_index};
  if (displacement.time_index == 0) return flow;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const int x = cloud.pixels(0, i);
    const int y = cloud.pixels(1, i);
    if (!displacement.field.contains(x, y)) {
      throw RenderError("lift_flow: point source pixel outside displacement field");
    }
    const auto u = sample_bilinear(displacement.field, x, y);
    const double d = cloud.positions(2, i);
    flow.translations.col(i) = unproject_pixel<double>(k, x + u(0), y + u(1), d) -
                               unproject_pixel<double>(k, x, y, d);
  }
  return flow;
}

PointCloud displace(const PointCloud& cloud, const SceneFlow& flow) {
  if (flow.translations.cols() != cloud.size()) {
    throw RenderError("displace: scene flow has " +
                      std::to_string(flow.translations.cols()) +
                      " vectors for " + std::to_string(cloud.size()) + " points");
  }
  PointCloud moved = cloud;
  moved.positions += flow.translations;
  return moved;
}

LayeredScene build_scene(const ColorImage& color, const DepthMap& depth,
                         const Camera& camera, const SceneOptions& options) {
  if (!same_size(color, depth)) throw AssetError("dimension mismatch: color vs depth");
  LayeredScene scene;
  scene.width = color.width();
  scene.height = color.height();
  scene.camera = camera;
  scene.intervals = cluster_depth(depth, options.gap_threshold, options.max_layers);
  scene.layers = build_ldi(color, depth, scene.intervals);
  for (std::size_t l = 0; l < scene.layers.size(); ++l) {
    const MaskImage occluded = occluded_region(scene.layers, l);
    scene.layers[l] = inpaint_layer(scene.layers[l], occluded, options.inpaint_band_px);
  }
  scene.cloud = unproject(scene.layers, camera);
  return scene;
}

double median_depth(const DepthMap& depth) {
  const auto& data = depth.data();
  std::vector<float> values(data.data(), data.data() + data.size());
  if (values.empty()) return 1.0;
  const auto mid = values.begin() + std::ptrdiff_t(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

void dump_layers(const LayeredScene& scene, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t l = 0; l < scene.layers.size(); ++l) {
    const LdiLayer& layer = scene.layers[l];
    char name[64];
    std::snprintf(name, sizeof(name), "layer_%zu_color.png", l);
    save_frame(layer.color, dir / name);
    std::snprintf(name, sizeof(name), "layer_%zu_depth.pfm", l);
    save_pfm(layer.depth, dir / name);
    std::snprintf(name, sizeof(name), "layer_%zu_valid.png", l);
    write_file(dir / name, encode_mask(layer.valid));
  }
}

}  // namespace cinema3d
