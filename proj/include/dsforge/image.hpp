#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dsforge {

/// Owned row-major RGB8 pixel buffer.
class RasterImage {
 public:
  static constexpr int kChannels = 3;

  RasterImage() = default;
  /// Throws InvalidArgument unless width, height >= 1.
  RasterImage(int width, int height, std::uint8_t fill = 0);
  /// Takes ownership of `pixels`; throws if its size is not width*height*3.
  RasterImage(int width, int height, std::vector<std::uint8_t> pixels);

  static RasterImage filled(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  std::uint8_t at(int x, int y, int c) const noexcept {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }
  std::uint8_t& at(int x, int y, int c) noexcept {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }

  bool operator==(const RasterImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Centered side x side window, offsets floor((dim - side) / 2).
RasterImage center_crop(const RasterImage& img, int side);

/// Bilinear resize with pixel-center alignment and edge clamping.
RasterImage resize(const RasterImage& img, int width, int height);

/// Crop the largest centered square, then resize it to side x side.
RasterImage square_fit(const RasterImage& img, int side);

/// Decode PNG or JPEG (any channel layout is converted to RGB8).
RasterImage read_image(const std::filesystem::path& path);
RasterImage decode_image(std::span<const std::uint8_t> encoded);
/// Encode as 8-bit RGB PNG.
void write_png(const RasterImage& img, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const RasterImage& img);

bool is_image_file(const std::filesystem::path& path);

/// v in [0,1] -> nearest 8-bit level, clipping out-of-range values.
inline std::uint8_t quantize_unit(double v) noexcept {
  if (!(v > 0.0)) return 0;  // also catches NaN
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(v * 255.0 + 0.5);
}

namespace serial {
RasterImage resize(const RasterImage& img, int width, int height);
}

}  // namespace dsforge
