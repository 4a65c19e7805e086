#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace dsforge {

/// splitmix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Order-sensitive hash of a sequence of words. Stable across platforms.
std::uint64_t hash64(std::initializer_list<std::uint64_t> words) noexcept;

/// Hash of a byte string (bytes assembled little-endian regardless of host).
std::uint64_t hash64(std::string_view bytes) noexcept;

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Counter-based generator: every draw is a pure function of (seed, index, lane, draw),
/// so kernels can visit pixels in any order or in parallel and still produce the same bits.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  std::array<std::uint32_t, 4> block(std::uint64_t index, std::uint32_t lane,
                                     std::uint32_t draw = 0) const noexcept {
    return philox4x32({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                       lane, draw},
                      key_);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform(std::uint64_t index, std::uint32_t lane, std::uint32_t draw = 0) const noexcept {
    const auto b = block(index, lane, draw);
    return to_unit(b[0], b[1]);
  }

  /// Standard normal via Box-Muller on the two halves of one block.
  double normal(std::uint64_t index, std::uint32_t lane, std::uint32_t draw = 0) const noexcept;

  static double to_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  }

 private:
  std::array<std::uint32_t, 2> key_;
};

}  // namespace dsforge
