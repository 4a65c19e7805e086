#include "dsforge/rng.hpp"

#include <cmath>
#include <numbers>

namespace dsforge {

std::uint64_t hash64(std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t h = 0x243f6a8885a308d3ULL ^ words.size();
  for (const auto w : words) h = mix64(h ^ mix64(w));
  return h;
}

std::uint64_t hash64(std::string_view bytes) noexcept {
  std::uint64_t h = 0x13198a2e03707344ULL ^ bytes.size();
  std::size_t i = 0;
  while (i < bytes.size()) {
    std::uint64_t chunk = 0;
    for (std::size_t k = 0; k < 8 && i < bytes.size(); ++k, ++i) {
      chunk |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * k);
    }
    h = mix64(h ^ mix64(chunk));
  }
  return mix64(h);
}

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

double CounterRng::normal(std::uint64_t index, std::uint32_t lane, std::uint32_t draw) const noexcept {
  const auto b = block(index, lane, draw);
  // 1 - u maps [0,1) onto (0,1], keeping the log finite.
  const double u1 = 1.0 - to_unit(b[0], b[1]);
  const double u2 = to_unit(b[2], b[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace dsforge
