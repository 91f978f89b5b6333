#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "cinema3d/camera.hpp"
#include "cinema3d/motion.hpp"
#include "cinema3d/raster.hpp"

namespace cinema3d {

struct DepthInterval {
  double low = 0.0;
  double high = 0.0;
};

/// Disjoint depth ranges in ascending order. `margin` is the absolute gap
/// threshold used to split them; inpainted depth may stray that far past an
/// interval's ends.
struct DepthIntervals {
  std::vector<DepthInterval> ranges;
  double margin = 0.0;

  int count() const { return static_cast<int>(ranges.size()); }
  /// Index of the first interval whose upper end is ≥ depth, so a value on
  /// a shared boundary goes to the nearer interval. Clamped to the last.
  int locate(double depth) const;
};

/// 1-D single-linkage agglomerative clustering of the distinct values:
/// split wherever consecutive sorted values differ by more than
/// gap_threshold·(max − min), then merge the pair of neighbors with the
/// smallest gap until at most max_layers remain. Equal gaps merge the pair
/// with fewer distinct values first, then the leftmost pair.
DepthIntervals cluster_depth_values(std::vector<double> values,
                                    double gap_threshold, int max_layers);
DepthIntervals cluster_depth(const DepthMap& depth, double gap_threshold,
                             int max_layers);

struct LdiLayer {
  ColorImage color;
  DepthMap depth;
  MaskImage valid;
  /// 1 where the pixel was filled by inpainting rather than observed.
  MaskImage inpainted;
  DepthInterval interval;
  double margin = 0.0;
};

/// Partitions pixels by depth interval. Farther layers come first.
std::vector<LdiLayer> build_ldi(const ColorImage& color, const DepthMap& depth,
                                const DepthIntervals& intervals);

/// Pixels hidden behind nearer layers: observed in some later (nearer)
/// layer of `layers` and not valid in layer `index`.
MaskImage occluded_region(const std::vector<LdiLayer>& layers, std::size_t index);

/// Fills occluded ∩ dilate(valid, band_px) by harmonic diffusion of color and
/// depth from the layer's valid pixels. Square (Chebyshev) dilation.
LdiLayer inpaint_layer(const LdiLayer& layer, const MaskImage& occluded,
                       int band_px);

/// One point per valid LDI pixel, farther layers first, row-major within a
/// layer. Positions are in source-camera coordinates.
struct PointCloud {
  Eigen::Matrix3Xd positions;
  Eigen::Matrix3Xf colors;
  Eigen::Matrix2Xi pixels;
  std::vector<int> layers;

  Eigen::Index size() const { return positions.cols(); }
};

PointCloud unproject(const std::vector<LdiLayer>& layers, const Camera& camera);

struct SceneFlow {
  Eigen::Matrix3Xd translations;
  int time_index = 0;
};

/// Lifts a 2D displacement field to per-point translations at constant
/// depth: T = π⁻¹(p + F(p), d) − π⁻¹(p, d).
SceneFlow lift_flow(const DisplacementField& displacement,
                    const PointCloud& cloud, const Camera& camera);

PointCloud displace(const PointCloud& cloud, const SceneFlow& flow);

struct SceneOptions {
  double gap_threshold = 0.12;
  int max_layers = 4;
  int inpaint_band_px = 16;
};

struct LayeredScene {
  int width = 0;
  int height = 0;
  Camera camera;
  DepthIntervals intervals;
  std::vector<LdiLayer> layers;
  PointCloud cloud;
};

/// cluster → LDI → inpaint → unproject.
LayeredScene build_scene(const ColorImage& color, const DepthMap& depth,
                         const Camera& camera, const SceneOptions& options = {});

double median_depth(const DepthMap& depth);

/// Writes layer_%d_color.png, layer_%d_depth.pfm, layer_%d_valid.png.
void dump_layers(const LayeredScene& scene, const std::filesystem::path& dir);

}  // namespace cinema3d
