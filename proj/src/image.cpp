#include "dsforge/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "dsforge/error.hpp"

namespace dsforge {

RasterImage::RasterImage(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  if (width < 1 || height < 1)
    throw InvalidArgument("image dimensions must be positive, got " + std::to_string(width) + "x" +
                          std::to_string(height));
  pixels_.assign(pixel_count() * kChannels, fill);
}

RasterImage::RasterImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1) throw InvalidArgument("image dimensions must be positive");
  if (pixels_.size() != pixel_count() * kChannels)
    throw InvalidArgument("pixel buffer has " + std::to_string(pixels_.size()) + " bytes, expected " +
                          std::to_string(pixel_count() * kChannels));
}

RasterImage RasterImage::filled(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  RasterImage img(width, height);
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    px[i] = r;
    px[i + 1] = g;
    px[i + 2] = b;
  }
  return img;
}

RasterImage center_crop(const RasterImage& img, int side) {
  if (side < 1 || side > std::min(img.width(), img.height()))
    throw InvalidArgument("crop side " + std::to_string(side) + " exceeds image " +
                          std::to_string(img.width()) + "x" + std::to_string(img.height()));
  const int x0 = (img.width() - side) / 2;
  const int y0 = (img.height() - side) / 2;
  RasterImage out(side, side);
  const auto src = img.pixels();
  auto dst = out.pixels();
  const std::size_t row = static_cast<std::size_t>(side) * 3;
  for (int y = 0; y < side; ++y) {
    const auto* from = src.data() + (static_cast<std::size_t>(y + y0) * img.width() + x0) * 3;
    std::copy_n(from, row, dst.data() + y * row);
  }
  return out;
}

namespace {

struct Tap {
  int i0, i1;
  double w1;  // weight of i1; i0 gets 1 - w1
};

std::vector<Tap> bilinear_taps(int src, int dst) {
  std::vector<Tap> taps(dst);
  const double scale = static_cast<double>(src) / dst;
  for (int d = 0; d < dst; ++d) {
    double s = (d + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, src - 1);
    taps[d] = {i0, i1, s - i0};
  }
  return taps;
}

inline std::uint8_t bilinear_at(const RasterImage& img, const Tap& tx, const Tap& ty, int c) {
  const double top = img.at(tx.i0, ty.i0, c) * (1.0 - tx.w1) + img.at(tx.i1, ty.i0, c) * tx.w1;
  const double bot = img.at(tx.i0, ty.i1, c) * (1.0 - tx.w1) + img.at(tx.i1, ty.i1, c) * tx.w1;
  const double v = top * (1.0 - ty.w1) + bot * ty.w1;
  return static_cast<std::uint8_t>(std::clamp(std::nearbyint(v), 0.0, 255.0));
}

}  // namespace

RasterImage resize(const RasterImage& img, int width, int height) {
  if (width < 1 || height < 1) throw InvalidArgument("resize target must be at least 1x1");
  if (width == img.width() && height == img.height()) return img;
  const auto tx = bilinear_taps(img.width(), width);
  const auto ty = bilinear_taps(img.height(), height);
  RasterImage out(width, height);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = bilinear_at(img, tx[x], ty[y], c);
  return out;
}

namespace serial {
RasterImage resize(const RasterImage& img, int width, int height) {
  if (width < 1 || height < 1) throw InvalidArgument("resize target must be at least 1x1");
  RasterImage out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double scale_x = static_cast<double>(img.width()) / width;
      const double scale_y = static_cast<double>(img.height()) / height;
      const double sx = std::clamp((x + 0.5) * scale_x - 0.5, 0.0, img.width() - 1.0);
      const double sy = std::clamp((y + 0.5) * scale_y - 0.5, 0.0, img.height() - 1.0);
      const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, img.width() - 1), y1 = std::min(y0 + 1, img.height() - 1);
      const double fx = sx - x0, fy = sy - y0;
      for (int c = 0; c < 3; ++c) {
        const double v = (img.at(x0, y0, c) * (1 - fx) + img.at(x1, y0, c) * fx) * (1 - fy) +
                         (img.at(x0, y1, c) * (1 - fx) + img.at(x1, y1, c) * fx) * fy;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::nearbyint(v), 0.0, 255.0));
      }
    }
  }
  return out;
}
}  // namespace serial

RasterImage square_fit(const RasterImage& img, int side) {
  const int s = std::min(img.width(), img.height());
  const RasterImage sq = (img.width() == img.height()) ? img : center_crop(img, s);
  return resize(sq, side, side);
}

namespace {

RasterImage from_mat(const cv::Mat& decoded, const std::string& what) {
  if (decoded.empty()) throw IoError("cannot decode image " + what);
  cv::Mat m8;
  if (decoded.depth() == CV_8U) {
    m8 = decoded;
  } else if (decoded.depth() == CV_16U) {
    decoded.convertTo(m8, CV_8U, 1.0 / 257.0);
  } else {
    throw IoError("unsupported pixel depth in " + what);
  }
  const int ch = m8.channels();
  if (ch != 1 && ch != 3 && ch != 4) throw IoError("unsupported channel count in " + what);
  RasterImage out(m8.cols, m8.rows);
  for (int y = 0; y < m8.rows; ++y) {
    const auto* row = m8.ptr<std::uint8_t>(y);
    for (int x = 0; x < m8.cols; ++x) {
      const auto* p = row + static_cast<std::size_t>(x) * ch;
      if (ch == 1) {
        out.at(x, y, 0) = out.at(x, y, 1) = out.at(x, y, 2) = p[0];
      } else {  // OpenCV stores BGR(A)
        out.at(x, y, 0) = p[2];
        out.at(x, y, 1) = p[1];
        out.at(x, y, 2) = p[0];
      }
    }
  }
  return out;
}

cv::Mat to_bgr_mat(const RasterImage& img) {
  cv::Mat m(img.height(), img.width(), CV_8UC3);
  for (int y = 0; y < img.height(); ++y) {
    auto* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.width(); ++x) {
      row[x * 3 + 0] = img.at(x, y, 2);
      row[x * 3 + 1] = img.at(x, y, 1);
      row[x * 3 + 2] = img.at(x, y, 0);
    }
  }
  return m;
}

}  // namespace

RasterImage read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.empty()) throw IoError("image '" + path.string() + "' is empty");
  cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8UC1, bytes.data());
  return from_mat(cv::imdecode(raw, cv::IMREAD_UNCHANGED), "'" + path.string() + "'");
}

RasterImage decode_image(std::span<const std::uint8_t> encoded) {
  if (encoded.empty()) throw IoError("cannot decode an empty image payload");
  cv::Mat raw(1, static_cast<int>(encoded.size()), CV_8UC1, const_cast<std::uint8_t*>(encoded.data()));
  return from_mat(cv::imdecode(raw, cv::IMREAD_UNCHANGED), "payload");
}

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
  std::vector<std::uint8_t> buf;
  if (!cv::imencode(".png", to_bgr_mat(img), buf)) throw IoError("PNG encoding failed");
  return buf;
}

void write_png(const RasterImage& img, const std::filesystem::path& path) {
  const auto buf = encode_png(img);
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

bool is_image_file(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace dsforge
