#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dsforge/image.hpp"

namespace dsforge {

enum class NoiseKind {
  GaussianBlur,
  GaussianNoise,
  LocalvarNoise,
  PoissonNoise,
  Salt,
  Pepper,
  SaltAndPepper,
  Speckle,
};

std::string_view to_string(NoiseKind kind) noexcept;
/// Accepts the snake_case names ("gaussian_blur", "s&p" and "salt_and_pepper" both work).
std::optional<NoiseKind> parse_noise_kind(std::string_view name) noexcept;

/// Per-pixel variances for LocalvarNoise.
struct VarianceMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // row-major, width*height

  bool operator==(const VarianceMap&) const = default;

  /// Text format: "<width> <height>" then width*height reals, whitespace separated.
  static VarianceMap load(const std::filesystem::path& path);
};

struct GaussianBlurParams {
  int kernel_size = 5;
  double sigma = 1.1;
  bool operator==(const GaussianBlurParams&) const = default;
};
struct GaussianNoiseParams {
  double mean = 0.0;
  double variance = 0.01;
  bool operator==(const GaussianNoiseParams&) const = default;
};
struct LocalvarNoiseParams {
  /// Used where no map is given.
  double variance = 0.01;
  /// Source of `map`; loaded on first use when `map` is null.
  std::string map_path;
  std::shared_ptr<const VarianceMap> map;

  /// The map is derived from map_path when one is set, so it does not take part in equality.
  bool operator==(const LocalvarNoiseParams& o) const {
    if (variance != o.variance || map_path != o.map_path) return false;
    if (map_path.empty() && (map || o.map)) return map && o.map && *map == *o.map;
    return true;
  }
};
struct PoissonNoiseParams {
  bool operator==(const PoissonNoiseParams&) const = default;
};
struct SaltParams {
  double amount = 0.05;
  bool operator==(const SaltParams&) const = default;
};
struct PepperParams {
  double amount = 0.05;
  bool operator==(const PepperParams&) const = default;
};
struct SaltAndPepperParams {
  double amount = 0.05;
  double salt_fraction = 0.5;
  bool operator==(const SaltAndPepperParams&) const = default;
};
struct SpeckleParams {
  double variance = 0.01;
  bool operator==(const SpeckleParams&) const = default;
};

using NoiseParams = std::variant<GaussianBlurParams, GaussianNoiseParams, LocalvarNoiseParams,
                                 PoissonNoiseParams, SaltParams, PepperParams, SaltAndPepperParams,
                                 SpeckleParams>;

/// One post-processing technique with its parameters and RNG seed.
struct NoiseSpec {
  NoiseParams params;
  std::uint64_t seed = 0;

  /// Default parameters for `kind`.
  static NoiseSpec defaults(NoiseKind kind, std::uint64_t seed = 0);

  NoiseKind kind() const noexcept { return static_cast<NoiseKind>(params.index()); }
  /// Empty when every parameter invariant holds.
  std::vector<std::string> validate() const;

  bool operator==(const NoiseSpec&) const = default;
};

/// Normalized 1-D Gaussian taps, centered, odd length.
std::vector<double> gaussian_kernel_1d(int size, double sigma);

/// Reflect index into [0, n) mirroring about the edge pixels (dcb|abcd|cba).
int reflect_index(int i, int n) noexcept;

/// Number of Poisson quantization levels for an image: 2^ceil(log2(#distinct 8-bit values)).
double poisson_levels(const RasterImage& img);

/// Applies the technique described by `spec`. Throws InvalidArgument if spec.validate() fails.
/// Output is bit-identical for a fixed seed regardless of thread count.
RasterImage apply_noise(const RasterImage& img, const NoiseSpec& spec);

namespace serial {
/// Single-threaded reference. Blur uses direct 2-D convolution instead of separable passes.
RasterImage apply_noise(const RasterImage& img, const NoiseSpec& spec);
}  // namespace serial

}  // namespace dsforge
