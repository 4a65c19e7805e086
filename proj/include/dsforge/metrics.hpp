#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsforge/core.hpp"
#include "dsforge/image.hpp"

namespace dsforge {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = (0.01 * 255) * (0.01 * 255);
inline constexpr double kSsimC2 = (0.03 * 255) * (0.03 * 255);

/// BT.601 luma rounded to 8 bits: (299 R + 587 G + 114 B + 500) / 1000.
std::vector<std::uint8_t> luma8(const RasterImage& img);

/// Mean SSIM over all valid 11x11 Gaussian (sigma 1.5) windows of the BT.601 luma planes.
/// Throws InvalidArgument on a size mismatch or images smaller than the window.
double ssim(const RasterImage& a, const RasterImage& b);

/// Per-image window statistics reused across many pairs.
class SsimPlane {
 public:
  explicit SsimPlane(const RasterImage& img);
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  friend double ssim(const SsimPlane& a, const SsimPlane& b);

 private:
  int width_, height_;
  std::vector<double> luma_;  // full plane
  std::vector<double> mu_;    // valid region
  std::vector<double> var_;   // valid region
};

double ssim(const SsimPlane& a, const SsimPlane& b);

struct PairSampling {
  std::size_t pairs = 0;  // K
  std::uint64_t seed = 0;
};

struct PairScore {
  std::size_t i, j;
  double value;
};

struct ClassSsim {
  double mean = 0.0;
  double sd = 0.0;  // population SD over the evaluated pairs
  std::size_t pair_count = 0;
  bool sampled = false;
  double std_error = 0.0;  // sd / sqrt(pair_count) when sampled, else 0
  std::vector<PairScore> pairs;
};

/// Resizes every image to resize_to x resize_to (0 keeps the input size), then scores all
/// n(n-1)/2 unordered pairs, or K uniformly drawn pairs when `sampling` asks for fewer than
/// all. Reduction order is fixed, so results do not depend on the thread count.
ClassSsim class_ssim(std::span<const RasterImage> images, int resize_to = 224,
                     std::optional<PairSampling> sampling = std::nullopt);

/// Hasler-Suesstrunk colorfulness. The image is first resized to resize_to x resize_to
/// unless resize_to is nullopt.
double colorfulness(const RasterImage& img, std::optional<int> resize_to = 224);

struct ClassReport {
  std::string name;
  std::size_t image_count = 0;
  std::optional<ClassSsim> ssim;  // absent when image_count < 2
  std::vector<double> colorfulness;
  double colorfulness_mean = 0.0;
  double colorfulness_sd = 0.0;
};

struct Summary {
  std::size_t count = 0;
  double mean = 0.0, sd = 0.0, min = 0.0, max = 0.0, median = 0.0;
};

Summary summarize(std::span<const double> values);

struct DiversityReport {
  std::map<std::string, ClassReport> per_class;
  double ssim_mean_of_class_means = 0.0;
  double ssim_sd_of_class_means = 0.0;  // across classes
  double ssim_mean_pooled_sd = 0.0;     // mean of per-class pair SDs
  Summary colorfulness;
  int resize_to = 224;
  std::vector<std::string> warnings;
  std::vector<std::string> unreadable;
};

struct AuditOptions {
  int resize_to = 224;
  std::optional<PairSampling> sampling;
  std::optional<std::filesystem::path> manifest;
  std::optional<std::filesystem::path> pairs_csv;
};

/// Audits a class-per-subdirectory dataset (or the classes listed in a manifest).
/// Throws Error("no classes found") when nothing is found and IoError when every image fails.
DiversityReport audit(const std::filesystem::path& dataset_dir, const AuditOptions& opts = {});

std::string report_to_json(const DiversityReport& r);
DiversityReport report_from_json(std::string_view text);
void write_report(const DiversityReport& r, const std::filesystem::path& path);

namespace serial {
/// Direct per-window evaluation with the full 2-D window.
double ssim(const RasterImage& a, const RasterImage& b);
ClassSsim class_ssim(std::span<const RasterImage> images, int resize_to = 224);
}  // namespace serial

}  // namespace dsforge
