#include "cinema3d/assets.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "cinema3d/errors.hpp"

namespace cinema3d {

namespace fs = std::filesystem;

namespace {

struct ReadCursor {
  ByteView bytes;
  std::size_t offset = 0;
};

void read_callback(png_structp png, png_bytep out, png_size_t length) {
  auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + length > cursor->bytes.size()) {
    png_error(png, "truncated");
  }
  std::memcpy(out, cursor->bytes.data() + cursor->offset, length);
  cursor->offset += length;
}

void write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_callback(png_structp) {}

void silent_warning(png_structp, png_const_charp) {}

// Kept free of objects with non-trivial destructors between setjmp and the
// libpng calls that may longjmp back.
bool decode_png_raw(ByteView bytes, PngImage& out, Bytes& rows) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           nullptr, silent_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  ReadCursor cursor{bytes, 0};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &cursor, read_callback);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  int bit_depth = png_get_bit_depth(png, info);

  out.from_palette = color_type == PNG_COLOR_TYPE_PALETTE;
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  png_read_update_info(png, info);
  bit_depth = png_get_bit_depth(png, info);
  const int channels = png_get_channels(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);

  out.width = static_cast<int>(width);
  out.height = static_cast<int>(height);
  out.bit_depth = bit_depth;
  switch (channels) {
    case 1:
      out.color = PngImage::Color::gray;
      break;
    case 2:
      out.color = PngImage::Color::gray_alpha;
      break;
    case 3:
      out.color = PngImage::Color::rgb;
      break;
    default:
      out.color = PngImage::Color::rgba;
      break;
  }

  rows.resize(row_bytes * height);
  for (png_uint_32 y = 0; y < height; ++y) {
    png_read_row(png, rows.data() + row_bytes * y, nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool encode_png_raw(const PngImage& image, Bytes& out) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, silent_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  int color_type = PNG_COLOR_TYPE_RGB;
  switch (image.color) {
    case PngImage::Color::gray:
      color_type = PNG_COLOR_TYPE_GRAY;
      break;
    case PngImage::Color::gray_alpha:
      color_type = PNG_COLOR_TYPE_GRAY_ALPHA;
      break;
    case PngImage::Color::rgb:
      color_type = PNG_COLOR_TYPE_RGB;
      break;
    case PngImage::Color::rgba:
      color_type = PNG_COLOR_TYPE_RGB_ALPHA;
      break;
  }
  png_set_write_fn(png, &out, write_callback, flush_callback);
  png_set_IHDR(png, info, image.width, image.height, image.bit_depth,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  if (image.bit_depth == 8 && image.color == PngImage::Color::rgb) {
    png_set_sRGB(png, info, PNG_sRGB_INTENT_PERCEPTUAL);
  }
  // Fixed settings keep the output bytes reproducible.
  png_set_compression_level(png, 6);
  png_write_info(png, info);

  const int channels = image.channels();
  const std::size_t bytes_per_sample = image.bit_depth == 16 ? 2 : 1;
  const std::size_t row_samples = std::size_t(image.width) * channels;
  std::vector<png_byte> row(row_samples * bytes_per_sample);
  for (int y = 0; y < image.height; ++y) {
    const std::uint16_t* src = image.samples.data() + row_samples * y;
    for (std::size_t i = 0; i < row_samples; ++i) {
      if (bytes_per_sample == 2) {
        row[2 * i] = static_cast<png_byte>(src[i] >> 8);
        row[2 * i + 1] = static_cast<png_byte>(src[i] & 0xff);
      } else {
        row[i] = static_cast<png_byte>(src[i]);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

std::array<float, 256> make_srgb8_table() {
  std::array<float, 256> table{};
  for (int i = 0; i < 256; ++i) {
    table[i] = srgb_to_linear(static_cast<float>(i) / 255.0f);
  }
  return table;
}

const std::array<float, 256>& srgb8_table() {
  static const std::array<float, 256> table = make_srgb8_table();
  return table;
}

bool starts_with(ByteView bytes, std::string_view prefix) {
  return bytes.size() >= prefix.size() &&
         std::memcmp(bytes.data(), prefix.data(), prefix.size()) == 0;
}

std::uint32_t read_u32_le(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

std::uint32_t read_u32_be(const std::uint8_t* p) {
  return std::uint32_t(p[3]) | (std::uint32_t(p[2]) << 8) |
         (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[0]) << 24);
}

void append_u32_le(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

DepthMap finalize_depth(DepthMap depth) {
  auto& values = depth.data();
  Eigen::Index bad = 0;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    if (!std::isfinite(values(i)) || values(i) <= 0.0f) ++bad;
  }
  if (double(bad) > kDegenerateDepthFraction * double(values.rows())) {
    throw AssetError("degenerate depth: " + std::to_string(bad) + " of " +
                     std::to_string(values.rows()) +
                     " samples are non-positive");
  }
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    if (!std::isfinite(values(i)) || values(i) < kDepthFloor) {
      values(i) = kDepthFloor;
    }
  }
  return depth;
}

DepthMap decode_pfm(ByteView bytes) {
  if (starts_with(bytes, "PF")) throw AssetError("expected grayscale PFM");
  if (!starts_with(bytes, "Pf")) throw AssetError("not a PFM file");

  std::size_t pos = 2;
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    std::string token;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) {
      token.push_back(static_cast<char>(bytes[pos++]));
    }
    if (token.empty()) throw AssetError("PFM header mismatch");
    return token;
  };

  int width = 0;
  int height = 0;
  double scale = 0.0;
  try {
    width = std::stoi(next_token());
    height = std::stoi(next_token());
    scale = std::stod(next_token());
  } catch (const std::logic_error&) {
    throw AssetError("PFM header mismatch");
  }
  if (width <= 0 || height <= 0) throw AssetError("PFM header mismatch: zero dimension");
  if (scale == 0.0) throw AssetError("PFM header mismatch: zero scale");
  // Exactly one whitespace byte separates the header from the payload.
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw AssetError("truncated PFM");
  }
  ++pos;

  const std::size_t count = std::size_t(width) * std::size_t(height);
  if (bytes.size() - pos < count * 4) throw AssetError("truncated PFM");

  const bool little_endian = scale < 0.0;
  DepthMap depth(width, height);
  const std::uint8_t* payload = bytes.data() + pos;
  for (int row = 0; row < height; ++row) {
    // PFM stores the bottom row first.
    const int y = height - 1 - row;
    for (int x = 0; x < width; ++x) {
      const std::uint8_t* p = payload + 4 * (std::size_t(row) * width + x);
      const std::uint32_t bits = little_endian ? read_u32_le(p) : read_u32_be(p);
      depth.at(x, y) = std::bit_cast<float>(bits);
    }
  }
  return finalize_depth(std::move(depth));
}

DepthMap decode_depth_png(ByteView bytes, const DepthDecodeOptions& options) {
  const PngImage png = decode_png(bytes);
  if (png.color != PngImage::Color::gray || png.bit_depth != 16) {
    throw AssetError("expected 16-bit grayscale PNG depth");
  }
  if (!(options.depth_scale > 0.0) || !std::isfinite(options.depth_scale)) {
    throw AssetError("depth_scale must be positive");
  }
  DepthMap depth(png.width, png.height);
  for (Eigen::Index i = 0; i < depth.pixel_count(); ++i) {
    depth.data()(i) =
        static_cast<float>(png.samples[i] / 65535.0 * options.depth_scale);
  }
  return finalize_depth(std::move(depth));
}

}  // namespace

PngImage decode_png(ByteView bytes) {
  static constexpr std::array<std::uint8_t, 8> kSignature = {
      0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() < kSignature.size() ||
      !std::equal(kSignature.begin(), kSignature.end(), bytes.begin())) {
    throw AssetError("malformed image: not a PNG");
  }
  PngImage image;
  Bytes rows;
  if (!decode_png_raw(bytes, image, rows)) {
    throw AssetError("malformed image");
  }
  if (image.width <= 0 || image.height <= 0) {
    throw AssetError("malformed image: zero dimension");
  }
  const std::size_t count =
      std::size_t(image.width) * image.height * image.channels();
  image.samples.resize(count);
  if (image.bit_depth == 16) {
    for (std::size_t i = 0; i < count; ++i) {
      image.samples[i] =
          static_cast<std::uint16_t>((rows[2 * i] << 8) | rows[2 * i + 1]);
    }
  } else {
    std::copy(rows.begin(), rows.begin() + count, image.samples.begin());
  }
  return image;
}

Bytes encode_png(const PngImage& image) {
  if (image.bit_depth != 8 && image.bit_depth != 16) {
    throw AssetError("unsupported PNG bit depth");
  }
  if (image.samples.size() !=
      std::size_t(image.width) * image.height * image.channels()) {
    throw AssetError("PNG sample count mismatch");
  }
  Bytes out;
  if (!encode_png_raw(image, out)) throw AssetError("PNG encode failed");
  return out;
}

float srgb_to_linear(float encoded) {
  if (encoded <= 0.04045f) return encoded / 12.92f;
  return static_cast<float>(std::pow((encoded + 0.055) / 1.055, 2.4));
}

float linear_to_srgb(float linear) {
  if (linear <= 0.0031308f) return linear * 12.92f;
  return static_cast<float>(1.055 * std::pow(double(linear), 1.0 / 2.4) - 0.055);
}

std::uint8_t encode_srgb8(float linear) {
  if (!(linear > 0.0f)) return 0;
  if (linear >= 1.0f) return 255;
  const auto& table = srgb8_table();
  const auto upper = std::lower_bound(table.begin(), table.end(), linear);
  const auto hi = static_cast<int>(std::distance(table.begin(), upper));
  const int lo = hi - 1;
  if (lo < 0) return 0;
  return static_cast<std::uint8_t>(
      (linear - table[lo] <= table[hi] - linear) ? lo : hi);
}

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AssetError("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& path, ByteView bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw AssetError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw AssetError("write failed: " + path.string());
}

ColorImage decode_color(ByteView png_bytes) {
  const PngImage png = decode_png(png_bytes);
  if (png.from_palette || png.color == PngImage::Color::gray ||
      png.color == PngImage::Color::gray_alpha) {
    throw AssetError("unsupported color type: expected RGB or RGBA PNG");
  }
  const int channels = png.channels();
  const auto& table = srgb8_table();
  ColorImage image(png.width, png.height);
  for (Eigen::Index i = 0; i < image.pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const std::uint16_t v = png.samples[std::size_t(i) * channels + c];
      image.data()(i, c) = png.bit_depth == 16
                               ? srgb_to_linear(static_cast<float>(v / 65535.0))
                               : table[v];
    }
  }
  return image;
}

ColorImage load_color(const fs::path& path) { return decode_color(read_file(path)); }

DepthMap decode_depth(ByteView bytes, const DepthDecodeOptions& options) {
  if (starts_with(bytes, "Pf") || starts_with(bytes, "PF")) return decode_pfm(bytes);
  if (starts_with(bytes, "\x89PNG")) return decode_depth_png(bytes, options);
  throw AssetError("unrecognized depth format: expected PFM or 16-bit PNG");
}

DepthMap load_depth(const fs::path& path, const DepthDecodeOptions& options) {
  return decode_depth(read_file(path), options);
}

FlowField decode_flow(ByteView bytes) {
  if (bytes.size() < 4 || !starts_with(bytes, "PIEH")) {
    throw AssetError("not a .flo file");
  }
  if (bytes.size() < 12) throw AssetError("truncated flow");
  const auto width = static_cast<std::int32_t>(read_u32_le(bytes.data() + 4));
  const auto height = static_cast<std::int32_t>(read_u32_le(bytes.data() + 8));
  if (width <= 0 || height <= 0) throw AssetError("nonpositive flow dimensions");
  const std::size_t count = std::size_t(width) * std::size_t(height) * 2;
  if (bytes.size() - 12 < count * 4) throw AssetError("truncated flow");

  FlowField flow(width, height);
  const std::uint8_t* payload = bytes.data() + 12;
  float* out = flow.data().data();
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = std::bit_cast<float>(read_u32_le(payload + 4 * i));
    if (!std::isfinite(out[i])) throw AssetError("non-finite flow value");
  }
  return flow;
}

FlowField load_flow(const fs::path& path) { return decode_flow(read_file(path)); }

Bytes encode_flow(const FlowField& flow) {
  Bytes out{'P', 'I', 'E', 'H'};
  out.reserve(12 + std::size_t(flow.pixel_count()) * 8);
  append_u32_le(out, static_cast<std::uint32_t>(flow.width()));
  append_u32_le(out, static_cast<std::uint32_t>(flow.height()));
  const float* data = flow.data().data();
  for (Eigen::Index i = 0; i < flow.pixel_count() * 2; ++i) {
    append_u32_le(out, std::bit_cast<std::uint32_t>(data[i]));
  }
  return out;
}

void save_flow(const FlowField& flow, const fs::path& path) {
  write_file(path, encode_flow(flow));
}

MaskImage decode_mask(ByteView png_bytes) {
  const PngImage png = decode_png(png_bytes);
  const int channels = png.channels();
  const std::uint16_t half = png.bit_depth == 16 ? 32768 : 128;
  MaskImage mask(png.width, png.height);
  for (Eigen::Index i = 0; i < mask.pixel_count(); ++i) {
    mask.data()(i) = png.samples[std::size_t(i) * channels] >= half ? 1 : 0;
  }
  return mask;
}

MaskImage load_mask(const fs::path& path) { return decode_mask(read_file(path)); }

Bytes encode_mask(const MaskImage& mask) {
  PngImage png;
  png.width = mask.width();
  png.height = mask.height();
  png.bit_depth = 8;
  png.color = PngImage::Color::gray;
  png.samples.resize(std::size_t(mask.pixel_count()));
  for (Eigen::Index i = 0; i < mask.pixel_count(); ++i) {
    png.samples[i] = mask.data()(i) ? 255 : 0;
  }
  return encode_png(png);
}

Bytes encode_frame(const ColorImage& image) {
  PngImage png;
  png.width = image.width();
  png.height = image.height();
  png.bit_depth = 8;
  png.color = PngImage::Color::rgb;
  png.samples.resize(std::size_t(image.pixel_count()) * 3);
  for (Eigen::Index i = 0; i < image.pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) {
      png.samples[std::size_t(i) * 3 + c] = encode_srgb8(image.data()(i, c));
    }
  }
  return encode_png(png);
}

void save_frame(const ColorImage& image, const fs::path& path) {
  write_file(path, encode_frame(image));
}

Bytes encode_pfm(const DepthMap& depth) {
  const std::string header = "Pf\n" + std::to_string(depth.width()) + " " +
                             std::to_string(depth.height()) + "\n-1.0\n";
  Bytes out(header.begin(), header.end());
  out.reserve(out.size() + std::size_t(depth.pixel_count()) * 4);
  for (int row = 0; row < depth.height(); ++row) {
    const int y = depth.height() - 1 - row;
    for (int x = 0; x < depth.width(); ++x) {
      append_u32_le(out, std::bit_cast<std::uint32_t>(depth.at(x, y)));
    }
  }
  return out;
}

void save_pfm(const DepthMap& depth, const fs::path& path) {
  write_file(path, encode_pfm(depth));
}

std::string frame_filename(int index) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "frame_%05d.png", index);
  return buffer;
}

AssetBundle make_bundle(ColorImage color, DepthMap depth,
                        std::optional<FlowField> flow,
                        std::optional<MaskImage> mask) {
  auto mismatch = [&](const char* what, int w, int h) {
    return AssetError(std::string("dimension mismatch: ") + what + " is " +
                      std::to_string(w) + "x" + std::to_string(h) +
                      ", image is " + std::to_string(color.width()) + "x" +
                      std::to_string(color.height()));
  };
  if (color.empty()) throw AssetError("zero dimension image");
  if (!same_size(color, depth)) throw mismatch("depth", depth.width(), depth.height());
  if (flow && !same_size(color, *flow)) {
    throw mismatch("flow", flow->width(), flow->height());
  }
  if (mask && !same_size(color, *mask)) {
    throw mismatch("mask", mask->width(), mask->height());
  }
  return AssetBundle{std::move(color), std::move(depth), std::move(flow),
                     std::move(mask)};
}

}  // namespace cinema3d
