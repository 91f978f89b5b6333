#include "sample_scene.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>

#include "json.hpp"

#include "cinema3d/assets.hpp"

namespace cinema3d::tools {

namespace {

// Cheap deterministic texture noise in [0, 1).
double hash_noise(int x, int y) {
  std::uint32_t h = std::uint32_t(x) * 374761393u + std::uint32_t(y) * 668265263u;
  h = (h ^ (h >> 13)) * 1274126177u;
  return double(h ^ (h >> 16)) / 4294967296.0;
}

}  // namespace

void write_sample_scene(const std::filesystem::path& dir, int width, int height) {
  std::filesystem::create_directories(dir);
  ColorImage color(width, height);
  DepthMap depth(width, height);
  MaskImage mask(width, height);

  const double sx = width / 256.0;
  const double sy = height / 144.0;
  const double fall_left = 100 * sx, fall_right = 156 * sx;
  const double fall_top = 20 * sy;
  const double rock_cx = 60 * sx, rock_cy = 118 * sy, rock_rx = 45 * sx, rock_ry = 30 * sy;

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double n = hash_noise(x, y);
      const double ridge = 40 * sy + 12 * sy * std::sin(x * 0.05 / sx);
      Eigen::Array3f c;
      float d;
      if (y < ridge) {
        const double s = double(y) / ridge;
        c = {float(0.35 + 0.3 * s), float(0.55 + 0.25 * s), 0.9f};
        d = 20.0f;
      } else {
        c = {float(0.25 + 0.1 * n), float(0.22 + 0.08 * n), float(0.18 + 0.05 * n)};
        d = float(6.0 + 0.5 * std::sin(y * 0.1));
      }
      if (x >= fall_left && x < fall_right && y >= fall_top) {
        const double streak = 0.5 + 0.5 * std::sin(x * 1.3 / sx + 3.0 * n);
        c = {float(0.6 + 0.3 * streak), float(0.75 + 0.2 * streak), float(0.85 + 0.15 * n)};
        d = 6.0f;
        mask.at(x, y) = 1;
      }
      const double ex = (x - rock_cx) / rock_rx;
      const double ey = (y - rock_cy) / rock_ry;
      if (ex * ex + ey * ey <= 1.0) {
        c = {float(0.12 + 0.1 * n), float(0.2 + 0.1 * n), float(0.08 + 0.05 * n)};
        d = float(2.5 + 0.3 * ey);
        mask.at(x, y) = 0;
      }
      color.pixel(x, y) = c.transpose();
      depth.at(x, y) = d;
    }
  }
  save_frame(color, dir / "image.png");
  save_pfm(depth, dir / "depth.pfm");
  write_file(dir / "mask.png", encode_mask(mask));

  const double mid = 0.5 * (fall_left + fall_right);
  nlohmann::json hints = {
      {"mask", "mask.png"},
      {"speed", 1.0},
      {"hints",
       {{{"x", mid}, {"y", fall_top + 4 * sy}, {"dx", 0.0}, {"dy", 1.0}},
        {{"x", fall_left + 4 * sx}, {"y", 80 * sy}, {"dx", 0.0}, {"dy", 2.0}},
        {{"x", fall_right - 4 * sx}, {"y", 80 * sy}, {"dx", 0.0}, {"dy", 2.0}},
        {{"x", mid}, {"y", height - 6 * sy}, {"dx", 0.0}, {"dy", 2.5}}}}};
  std::ofstream(dir / "hints.json") << hints.dump(2) << '\n';

  nlohmann::json job = {{"image", "image.png"}, {"depth", "depth.pfm"},
                        {"hints", "hints.json"}, {"out", "out"},
                        {"trajectory", "sway"},  {"amplitude", 0.03},
                        {"frames", 60},          {"workers", 0}};
  std::ofstream(dir / "job.json") << job.dump(2) << '\n';
}

}  // namespace cinema3d::tools
