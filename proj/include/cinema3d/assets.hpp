#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cinema3d/raster.hpp"

namespace cinema3d {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline constexpr float kDepthFloor = 1e-4f;
/// Fraction of non-positive depth samples above which a depth file is
/// rejected instead of clamped.
inline constexpr double kDegenerateDepthFraction = 0.10;

/// Raw PNG samples as stored in the file, one uint16 per sample regardless
/// of bit depth. Palette and sub-byte gray images are expanded to 8 bits.
struct PngImage {
  enum class Color { gray, gray_alpha, rgb, rgba };

  int width = 0;
  int height = 0;
  int bit_depth = 8;
  Color color = Color::rgb;
  bool from_palette = false;
  std::vector<std::uint16_t> samples;

  int channels() const {
    switch (color) {
      case Color::gray:
        return 1;
      case Color::gray_alpha:
        return 2;
      case Color::rgb:
        return 3;
      case Color::rgba:
        return 4;
    }
    return 0;
  }
};

PngImage decode_png(ByteView bytes);
Bytes encode_png(const PngImage& image);

float srgb_to_linear(float encoded);
float linear_to_srgb(float linear);
/// 8-bit code whose decoded linear value is closest to `linear`.
std::uint8_t encode_srgb8(float linear);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, ByteView bytes);

ColorImage decode_color(ByteView png_bytes);
ColorImage load_color(const std::filesystem::path& path);

struct DepthDecodeOptions {
  /// Depth assigned to the 16-bit code 65535 in PNG depth files.
  double depth_scale = 1.0;
};

/// Accepts grayscale PFM ("Pf") or 16-bit grayscale PNG, detected by magic.
DepthMap decode_depth(ByteView bytes, const DepthDecodeOptions& options = {});
DepthMap load_depth(const std::filesystem::path& path,
                    const DepthDecodeOptions& options = {});

/// Middlebury .flo: "PIEH", int32 width, int32 height, float32 (u,v) pairs.
FlowField decode_flow(ByteView bytes);
FlowField load_flow(const std::filesystem::path& path);
Bytes encode_flow(const FlowField& flow);
void save_flow(const FlowField& flow, const std::filesystem::path& path);

/// Any 8/16-bit PNG; the first channel at or above half scale marks 1.
MaskImage decode_mask(ByteView png_bytes);
MaskImage load_mask(const std::filesystem::path& path);
Bytes encode_mask(const MaskImage& mask);

/// Linear → sRGB, 8-bit RGB PNG.
Bytes encode_frame(const ColorImage& image);
void save_frame(const ColorImage& image, const std::filesystem::path& path);

/// Little-endian grayscale PFM, rows written bottom to top.
Bytes encode_pfm(const DepthMap& depth);
void save_pfm(const DepthMap& depth, const std::filesystem::path& path);

/// `frame_%05d.png`
std::string frame_filename(int index);

/// Inputs for one job, with dimensions checked once at construction.
struct AssetBundle {
  ColorImage color;
  DepthMap depth;
  std::optional<FlowField> flow;
  std::optional<MaskImage> mask;

  int width() const { return color.width(); }
  int height() const { return color.height(); }
};

AssetBundle make_bundle(ColorImage color, DepthMap depth,
                        std::optional<FlowField> flow = std::nullopt,
                        std::optional<MaskImage> mask = std::nullopt);

}  // namespace cinema3d
