#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cinema3d/raster.hpp"

namespace cinema3d {

/// Sparse velocity constraint: the pixel nearest (x, y) moves by (dx, dy)
/// pixels per frame.
struct FlowHint {
  double x = 0.0;
  double y = 0.0;
  double dx = 0.0;
  double dy = 0.0;
};

struct HintSolverOptions {
  int max_iterations = 20000;
  double tolerance = 1e-5;
};

struct MotionEstimate {
  FlowField flow;
  int iterations = 0;
  bool converged = true;
};

/// Dense Eulerian field from a mask and sparse hints: each component is
/// harmonic inside the mask, equals the hint at every (snapped) hint pixel,
/// is pinned to zero just outside the mask, and mirrors at image borders.
/// Outside the mask the field is zero.
MotionEstimate estimate_motion_from_hints(const MaskImage& mask,
                                          const std::vector<FlowHint>& hints,
                                          const HintSolverOptions& solver = {});

enum class Direction { forward, backward };

/// F_{0→t}: total displacement of every source pixel after `steps` Euler
/// steps through M (or −M when integrating backward).
struct DisplacementField {
  Raster<float, 2, DisplacementTag> field;
  int time_index = 0;

  int width() const { return field.width(); }
  int height() const { return field.height(); }
};

/// F_{0→0} = 0, F_{0→t}(x) = F_{0→t−1}(x) + M̃(x + F_{0→t−1}(x)), with M̃
/// sampled bilinearly and edge-clamped. Pixels are independent, so the work
/// is split across `threads` workers without affecting the result.
DisplacementField euler_integrate(const FlowField& flow, int steps,
                                  Direction direction, int threads = 1);

FlowField scale_flow(const FlowField& flow, double speed);

/// Pixel a hint snaps to.
inline int snap_coordinate(double v) { return static_cast<int>(std::floor(v + 0.5)); }

/// `{"mask": "<path>", "hints": [{"x","y","dx","dy"}...], "speed": float}`.
/// The mask may be omitted (whole image animates).
struct HintsDocument {
  std::optional<std::string> mask;
  std::vector<FlowHint> hints;
  double speed = 1.0;
};

HintsDocument parse_hints_document(const nlohmann::json& document);
HintsDocument load_hints_document(const std::filesystem::path& path);

/// Loads the document's mask (relative paths resolve against `base_dir`),
/// or an all-ones mask when none is named.
MaskImage resolve_hint_mask(const HintsDocument& document,
                            const std::filesystem::path& base_dir, int width,
                            int height);

}  // namespace cinema3d
