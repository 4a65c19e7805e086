#pragma once
// Test helpers and independent reference implementations. Nothing here calls into the
// library's numeric kernels, so the oracles can catch errors in them.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "dsforge/image.hpp"

namespace testing {

inline dsforge::RasterImage random_image(int w, int h, std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::uniform_int_distribution<int> d(0, 255);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
  for (auto& v : px) v = static_cast<std::uint8_t>(d(gen));
  return dsforge::RasterImage(w, h, std::move(px));
}

// Smooth random image: a few random gradients plus mild noise, closer to photos than white noise.
inline dsforge::RasterImage smooth_image(int w, int h, std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 8.0);
  double a[3][3];
  for (auto& row : a)
    for (auto& v : row) v = u(gen);
  dsforge::RasterImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = 255.0 * (a[c][0] * x / w + a[c][1] * y / h) * 0.5 +
                         60.0 * std::sin(a[c][2] * 12.0 * (x + y) / (w + h)) + 64.0 + n(gen);
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
  return img;
}

inline dsforge::RasterImage random_gray(int w, int h, std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::uniform_int_distribution<int> d(0, 255);
  dsforge::RasterImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto v = static_cast<std::uint8_t>(d(gen));
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = v;
    }
  return img;
}

// Direct per-window SSIM: full 11x11 weights, every statistic summed from scratch in
// long double.
inline double oracle_ssim(const dsforge::RasterImage& a, const dsforge::RasterImage& b) {
  const int w = a.width(), h = a.height(), win = 11;
  const long double sigma = 1.5L;
  long double g[11], gs = 0;
  for (int i = 0; i < win; ++i) {
    const long double d = i - 5;
    g[i] = std::exp(-d * d / (2 * sigma * sigma));
    gs += g[i];
  }
  for (auto& v : g) v /= gs;
  auto luma = [](const dsforge::RasterImage& im, int x, int y) -> long double {
    const long double num = 299.0L * im.at(x, y, 0) + 587.0L * im.at(x, y, 1) + 114.0L * im.at(x, y, 2);
    return static_cast<long double>(std::lround(static_cast<double>(num / 1000.0L)));
  };
  const long double c1 = (0.01L * 255) * (0.01L * 255), c2 = (0.03L * 255) * (0.03L * 255);
  long double total = 0;
  int windows = 0;
  for (int y0 = 0; y0 + win <= h; ++y0)
    for (int x0 = 0; x0 + win <= w; ++x0) {
      long double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int j = 0; j < win; ++j)
        for (int i = 0; i < win; ++i) {
          const long double wt = g[i] * g[j];
          const long double xv = luma(a, x0 + i, y0 + j), yv = luma(b, x0 + i, y0 + j);
          mx += wt * xv;
          my += wt * yv;
          sxx += wt * xv * xv;
          syy += wt * yv * yv;
          sxy += wt * xv * yv;
        }
      const long double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
      total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++windows;
    }
  return static_cast<double>(total / windows);
}

// Two-pass floating-point colorfulness with population standard deviations.
inline double oracle_colorfulness(const dsforge::RasterImage& img) {
  const std::size_t n = img.pixel_count();
  std::vector<long double> rg(n), yb(n);
  std::size_t k = 0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x, ++k) {
      const long double r = img.at(x, y, 0), g = img.at(x, y, 1), b = img.at(x, y, 2);
      rg[k] = r - g;
      yb[k] = 0.5L * (r + g) - b;
    }
  auto mean = [&](const std::vector<long double>& v) {
    long double s = 0;
    for (auto e : v) s += e;
    return s / v.size();
  };
  auto sd = [&](const std::vector<long double>& v, long double m) {
    long double s = 0;
    for (auto e : v) s += (e - m) * (e - m);
    return std::sqrt(s / v.size());
  };
  const long double mrg = mean(rg), myb = mean(yb);
  const long double srg = sd(rg, mrg), syb = sd(yb, myb);
  return static_cast<double>(std::sqrt(srg * srg + syb * syb) + 0.3L * std::sqrt(mrg * mrg + myb * myb));
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("dsforge_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Hand-built 4-d vectors: living words on axis 0, non-living words on axis 1. "tie" is
// equidistant from both lists; "beast" and "thing" copy the "animal" and "object" vectors.
inline std::string animacy_vector_file() {
  return "12 4\n"
         "animate 1 0 0 0\n"
         "animal 1 0 0 0\n"
         "plant 1 0 0 0\n"
         "inanimate 0 1 0 0\n"
         "object 0 1 0 0\n"
         "man-made 0 1 0 0\n"
         "lion 0.9 0.1 0.2 0\n"
         "cup 0.1 0.9 0 0.2\n"
         "tie 1 1 0 0\n"
         "beast 1 0 0 0\n"
         "thing 0 1 0 0\n"
         "female 0 0 1 0\n";
}

}  // namespace testing

