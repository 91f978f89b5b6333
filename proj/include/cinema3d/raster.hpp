#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace cinema3d {

/// Dense row-major W×H grid with a fixed channel count. Pixel (x, y) lives
/// in row y * width + x of the backing Eigen array, so whole-image math can
/// be written as array expressions on data().
///
/// The tag parameter keeps semantically different grids with the same
/// layout (depth vs. alpha, flow vs. displacement) from mixing silently.
template <typename Scalar, int Channels, typename Tag>
class Raster {
 public:
  static constexpr int kChannels = Channels;
  using ScalarType = Scalar;
  using Storage =
      Eigen::Array<Scalar, Eigen::Dynamic, Channels,
                   Channels == 1 ? Eigen::ColMajor : Eigen::RowMajor>;

  Raster() = default;
  Raster(int width, int height)
      : width_(width),
        height_(height),
        data_(Storage::Zero(Eigen::Index(width) * height, Channels)) {}
  Raster(int width, int height, Storage data)
      : width_(width), height_(height), data_(std::move(data)) {}

  int width() const { return width_; }
  int height() const { return height_; }
  Eigen::Index pixel_count() const { return data_.rows(); }
  bool empty() const { return data_.rows() == 0; }

  Eigen::Index index(int x, int y) const {
    return Eigen::Index(y) * width_ + x;
  }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  auto pixel(int x, int y) { return data_.row(index(x, y)); }
  auto pixel(int x, int y) const { return data_.row(index(x, y)); }

  Scalar& at(int x, int y, int c = 0) { return data_(index(x, y), c); }
  Scalar at(int x, int y, int c = 0) const { return data_(index(x, y), c); }

  Storage& data() { return data_; }
  const Storage& data() const { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  Storage data_;
};

struct ColorTag {};
struct DepthTag {};
struct AlphaTag {};
struct FlowTag {};
struct DisplacementTag {};
struct MaskTag {};
struct WeightTag {};

/// Linear-light RGB in [0,1].
using ColorImage = Raster<float, 3, ColorTag>;
/// Positive depth, larger = farther. Renderer outputs use 0 for "uncovered".
using DepthMap = Raster<float, 1, DepthTag>;
using AlphaMap = Raster<float, 1, AlphaTag>;
/// Per-pixel (u, v) motion in pixels per frame step.
using FlowField = Raster<float, 2, FlowTag>;
/// Binary {0,1}.
using MaskImage = Raster<std::uint8_t, 1, MaskTag>;

template <typename A, typename B>
bool same_size(const A& a, const B& b) {
  return a.width() == b.width() && a.height() == b.height();
}

/// Linear interpolation written so that a == b returns a exactly.
template <typename T>
inline T lerp_exact(T a, T b, T f) {
  return a + (b - a) * f;
}

/// Bilinear sample at a continuous position (pixel centers on integer
/// coordinates). Coordinates outside the grid are clamped to the edge.
/// Sampling a constant field returns the constant bit-exactly.
template <typename Scalar, int Channels, typename Tag>
Eigen::Array<double, 1, Channels> sample_bilinear(
    const Raster<Scalar, Channels, Tag>& raster, double x, double y) {
  const double max_x = raster.width() - 1;
  const double max_y = raster.height() - 1;
  x = std::clamp(x, 0.0, max_x);
  y = std::clamp(y, 0.0, max_y);
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, raster.width() - 1);
  const int y1 = std::min(y0 + 1, raster.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;

  Eigen::Array<double, 1, Channels> out(1, Channels);
  for (int c = 0; c < Channels; ++c) {
    const double v00 = raster.at(x0, y0, c);
    const double v10 = raster.at(x1, y0, c);
    const double v01 = raster.at(x0, y1, c);
    const double v11 = raster.at(x1, y1, c);
    const double top = lerp_exact(v00, v10, fx);
    const double bottom = lerp_exact(v01, v11, fx);
    out(c) = lerp_exact(top, bottom, fy);
  }
  return out;
}

}  // namespace cinema3d
