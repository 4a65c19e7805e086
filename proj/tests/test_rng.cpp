#include <doctest.h>

#include <cmath>
#include <set>

#include "dsforge/rng.hpp"

using namespace dsforge;

TEST_CASE("philox4x32-10 known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("hash64 is order sensitive and stable") {
  CHECK(hash64({1, 2}) != hash64({2, 1}));
  CHECK(hash64({1, 2, 3}) == hash64({1, 2, 3}));
  CHECK(hash64({0}) != hash64({0, 0}));
  CHECK(hash64(std::string_view("abc")) == hash64(std::string_view("abc")));
  CHECK(hash64(std::string_view("abc")) != hash64(std::string_view("abd")));
  CHECK(hash64(std::string_view("")) != hash64(std::string_view("a")));
}

TEST_CASE("uniforms lie in [0,1) and normals are standard") {
  const CounterRng rng(42);
  const int n = 200000;
  double s = 0, s2 = 0, z1 = 0, z2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform(i, 0);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    s += u;
    s2 += u * u;
    const double z = rng.normal(i, 1);
    REQUIRE(std::isfinite(z));
    z1 += z;
    z2 += z * z;
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  CHECK(std::abs(mean - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(var - 1.0 / 12) < 0.002);
  CHECK(std::abs(z1 / n) < 4 / std::sqrt(double(n)));
  CHECK(std::abs(z2 / n - 1.0) < 4 * std::sqrt(2.0 / n));
  CHECK(CounterRng::to_unit(0xffffffff, 0xffffffff) < 1.0);
  CHECK(CounterRng::to_unit(0, 0) == 0.0);
}

TEST_CASE("draws depend on every counter component and the seed") {
  const CounterRng a(1), b(2);
  std::set<double> seen{a.uniform(0, 0, 0), a.uniform(1, 0, 0), a.uniform(0, 1, 0), a.uniform(0, 0, 1),
                        b.uniform(0, 0, 0), a.uniform(std::uint64_t{1} << 32, 0, 0)};
  CHECK(seen.size() == 6);
}
