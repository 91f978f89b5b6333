#include "cinema3d/motion.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <thread>
#include <utility>

#include "cinema3d/assets.hpp"
#include "cinema3d/errors.hpp"
#include "cinema3d/harmonic.hpp"

namespace cinema3d {

namespace fs = std::filesystem;
using nlohmann::json;

MotionEstimate estimate_motion_from_hints(const MaskImage& mask,
                                          const std::vector<FlowHint>& hints,
                                          const HintSolverOptions& solver) {
  const int width = mask.width();
  const int height = mask.height();
  if (mask.empty() || mask.data().cast<int>().sum() == 0) {
    throw ConfigError("no animation region");
  }
  if (hints.empty()) throw ConfigError("no hints");

  // Hints sharing a pixel are averaged.
  std::map<Eigen::Index, std::pair<Eigen::Array2d, int>> pinned;
  for (const FlowHint& hint : hints) {
    if (!std::isfinite(hint.x) || !std::isfinite(hint.y) ||
        !std::isfinite(hint.dx) || !std::isfinite(hint.dy)) {
      throw ConfigError("non-finite hint");
    }
    const int px = snap_coordinate(hint.x);
    const int py = snap_coordinate(hint.y);
    if (!mask.contains(px, py)) {
      throw ConfigError("hint outside image at (" + std::to_string(hint.x) +
                        ", " + std::to_string(hint.y) + ")");
    }
    if (mask.at(px, py) == 0) {
      throw ConfigError("hint outside mask at (" + std::to_string(hint.x) +
                        ", " + std::to_string(hint.y) + ")");
    }
    auto& slot = pinned[mask.index(px, py)];
    if (slot.second == 0) slot.first.setZero();
    slot.first += Eigen::Array2d(hint.dx, hint.dy);
    slot.second += 1;
  }

  const Eigen::Index n = mask.pixel_count();
  std::vector<CellRole> roles(std::size_t(n), CellRole::free);
  HarmonicValues values = HarmonicValues::Zero(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (mask.data()(i) == 0) roles[i] = CellRole::fixed;
  }
  for (const auto& [index, sum] : pinned) {
    roles[index] = CellRole::fixed;
    values.row(index) = (sum.first / double(sum.second)).transpose();
  }

  const HarmonicReport report = solve_harmonic(
      width, height, roles, values,
      {solver.max_iterations, solver.tolerance, HarmonicScheme::gauss_seidel});

  MotionEstimate estimate{FlowField(width, height), report.iterations,
                          report.converged};
  estimate.flow.data() = values.cast<float>();
  return estimate;
}

DisplacementField euler_integrate(const FlowField& flow, int steps,
                                  Direction direction, int threads) {
  if (steps < 0) throw ConfigError("euler_integrate: negative step count");
  const int width = flow.width();
  const int height = flow.height();
  DisplacementField out{Raster<float, 2, DisplacementTag>(width, height),
                        direction == Direction::forward ? steps : -steps};
  if (steps == 0) return out;

  const bool backward = direction == Direction::backward;
  auto integrate_rows = [&](int row_begin, int row_end) {
    for (int y = row_begin; y < row_end; ++y) {
      for (int x = 0; x < width; ++x) {
        double u = 0.0;
        double v = 0.0;
        for (int s = 0; s < steps; ++s) {
          const auto m = sample_bilinear(flow, x + u, y + v);
          if (backward) {
            u += -m(0);
            v += -m(1);
          } else {
            u += m(0);
            v += m(1);
          }
        }
        out.field.at(x, y, 0) = static_cast<float>(u);
        out.field.at(x, y, 1) = static_cast<float>(v);
      }
    }
  };

  threads = std::clamp(threads, 1, std::max(1, height));
  if (threads == 1) {
    integrate_rows(0, height);
    return out;
  }
  std::vector<std::jthread> workers;
  const int chunk = (height + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int begin = t * chunk;
    const int end = std::min(height, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back(integrate_rows, begin, end);
  }
  return out;
}

FlowField scale_flow(const FlowField& flow, double speed) {
  if (!std::isfinite(speed) || speed <= 0.0) {
    throw ConfigError("speed must be a positive finite number");
  }
  FlowField scaled(flow.width(), flow.height());
  scaled.data() = flow.data() * static_cast<float>(speed);
  return scaled;
}

namespace {

double require_number(const json& object, const char* key) {
  const auto it = object.find(key);
  if (it == object.end()) throw ConfigError(std::string("hint missing key: ") + key);
  if (!it->is_number()) throw ConfigError(std::string("hint key ") + key + " must be a number");
  return it->get<double>();
}

}  // namespace

HintsDocument parse_hints_document(const json& document) {
  if (!document.is_object()) throw ConfigError("hints document must be a JSON object");
  HintsDocument out;
  for (const auto& [key, value] : document.items()) {
    if (key == "mask") {
      if (!value.is_string()) throw ConfigError("mask must be a string");
      out.mask = value.get<std::string>();
    } else if (key == "hints") {
      if (!value.is_array()) throw ConfigError("hints must be an array");
      for (const json& item : value) {
        if (!item.is_object()) throw ConfigError("hint must be an object");
        for (const auto& [hint_key, unused] : item.items()) {
          if (hint_key != "x" && hint_key != "y" && hint_key != "dx" &&
              hint_key != "dy") {
            throw ConfigError("unknown hint key: " + hint_key);
          }
        }
        out.hints.push_back({require_number(item, "x"), require_number(item, "y"),
                             require_number(item, "dx"), require_number(item, "dy")});
      }
    } else if (key == "speed") {
      if (!value.is_number()) throw ConfigError("speed must be a number");
      out.speed = value.get<double>();
      if (!std::isfinite(out.speed) || out.speed <= 0.0) {
        throw ConfigError("speed must be a positive finite number");
      }
    } else {
      throw ConfigError("unknown key in hints document: " + key);
    }
  }
  return out;
}

HintsDocument load_hints_document(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open hints file " + path.string());
  json document;
  try {
    document = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed hints JSON: " + std::string(e.what()));
  }
  return parse_hints_document(document);
}

MaskImage resolve_hint_mask(const HintsDocument& document,
                            const fs::path& base_dir, int width, int height) {
  if (!document.mask) {
    MaskImage full(width, height);
    full.data().setOnes();
    return full;
  }
  fs::path path = *document.mask;
  if (path.is_relative()) path = base_dir / path;
  MaskImage mask = load_mask(path);
  if (mask.width() != width || mask.height() != height) {
    throw AssetError("dimension mismatch: mask is " + std::to_string(mask.width()) +
                     "x" + std::to_string(mask.height()) + ", image is " +
                     std::to_string(width) + "x" + std::to_string(height));
  }
  return mask;
}

}  // namespace cinema3d
