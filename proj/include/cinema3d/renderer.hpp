#pragma once

#include "cinema3d/camera.hpp"
#include "cinema3d/motion.hpp"
#include "cinema3d/raster.hpp"
#include "cinema3d/scene.hpp"

namespace cinema3d {

enum class SplatMode { nearest, soft };

struct SplatConfig {
  SplatMode mode = SplatMode::soft;
  double radius_px = 1.0;
  /// Relative depth window around the nearest contribution (soft mode).
  double z_window = 0.01;
  double near = 1e-3;
};

/// Splat output. color is un-premultiplied; depth and alpha are 0 where no
/// point landed.
struct RenderLayers {
  ColorImage color;
  DepthMap depth;
  AlphaMap alpha;

  int width() const { return color.width(); }
  int height() const { return color.height(); }
};

/// Forward-projects every point with z > near into a width×height view.
///
/// nearest: each point lands on its rounded pixel; the smallest depth wins
/// and equal depths keep the lower point index.
///
/// soft: each point spreads a tent footprint of radius radius_px (bilinear
/// for radius 1). A pixel keeps the contributions within z_window of its
/// nearest incoming depth and reports their coverage-weighted color and
/// depth; alpha is the summed coverage capped at 1.
///
/// Points are visited in index order in both modes, so the result does not
/// depend on scheduling.
RenderLayers splat(const PointCloud& cloud, const Camera& camera, int width,
                   int height, const SplatConfig& config = {});

struct WeightMap {
  Raster<float, 1, WeightTag> weight;
  MaskImage hole;
};

/// Per-pixel share of the forward render:
///
///   W = a_f / (a_f + a_b),  a_f = (1 − t/N)·α_f·exp(−s·D̂_f),
///                           a_b = (t/N)·α_b·exp(−s·D̂_b)
///
/// with depths normalized jointly over covered pixels to
/// D̂ = (D − d_min)/(d_max − d_min + 1e-8). Both terms are scaled by the
/// larger one before a 1e-8 guard is added to the denominator, so the guard
/// never shifts W by more than 1e-8. A pixel is a hole when neither term has
/// any support, i.e. neither direction both covers it and carries time weight.
WeightMap blend_weights(const RenderLayers& forward, const RenderLayers& backward,
                        int t, int frame_count, double sharpness);

struct Frame {
  ColorImage color;
  DepthMap depth;
  MaskImage hole;
  int time_index = 0;
  Camera camera;

  Eigen::Index hole_count() const { return hole.data().cast<Eigen::Index>().sum(); }
};

/// F_t = W·F_f + (1 − W)·F_b and the same for depth; holes are filled by
/// harmonic diffusion from their covered neighbors. Color is clamped to [0,1].
Frame composite(const RenderLayers& forward, const RenderLayers& backward,
                const WeightMap& weights);

struct RenderConfig {
  SplatConfig splat;
  double sharpness = 10.0;
  /// Workers used for displacement integration inside one view.
  int threads = 1;
};

/// Every intermediate of one rendered view.
struct ViewRender {
  RenderLayers forward;
  RenderLayers backward;
  WeightMap weights;
  Frame frame;
};

/// Renders from precomputed F_{0→t} (forward) and F_{0→t−N} (backward).
ViewRender render_with_displacements(const LayeredScene& scene,
                                     const DisplacementField& forward_field,
                                     const DisplacementField& backward_field,
                                     int t, int frame_count, const Camera& camera,
                                     const RenderConfig& config = {});

/// Integrates M forward for t steps and −M for N − t steps, displaces the
/// scene cloud both ways, splats both and composites.
ViewRender render_view_detailed(const LayeredScene& scene, const FlowField& flow,
                                int t, int frame_count, const Camera& camera,
                                const RenderConfig& config = {});

Frame render_view(const LayeredScene& scene, const FlowField& flow, int t,
                  int frame_count, const Camera& camera,
                  const RenderConfig& config = {});

}  // namespace cinema3d
