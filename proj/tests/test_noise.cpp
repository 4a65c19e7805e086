#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dsforge/error.hpp"
#include "dsforge/noise.hpp"
#include "support.hpp"

using namespace dsforge;

namespace {

NoiseSpec salt(double amount, std::uint64_t seed) { return {SaltParams{amount}, seed}; }

int count_value(const RasterImage& img, std::uint8_t v) {
  int n = 0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (img.at(x, y, 0) == v && img.at(x, y, 1) == v && img.at(x, y, 2) == v) ++n;
  return n;
}

std::vector<NoiseSpec> every_kind(std::uint64_t seed) {
  std::vector<NoiseSpec> out;
  for (int k = 0; k <= static_cast<int>(NoiseKind::Speckle); ++k)
    out.push_back(NoiseSpec::defaults(static_cast<NoiseKind>(k), seed));
  return out;
}

}  // namespace

TEST_CASE("noise kind names round trip") {
  for (const auto& s : every_kind(0)) CHECK(parse_noise_kind(to_string(s.kind())) == s.kind());
  CHECK(parse_noise_kind("s&p") == NoiseKind::SaltAndPepper);
  CHECK(parse_noise_kind("Gaussian_Blur") == NoiseKind::GaussianBlur);
  CHECK_FALSE(parse_noise_kind("jpeg").has_value());
}

TEST_CASE("parameter validation") {
  for (const auto& s : every_kind(0)) CHECK(s.validate().empty());
  CHECK(NoiseSpec{GaussianBlurParams{4, 1.0}, 0}.validate().size() == 1);
  CHECK(NoiseSpec{GaussianBlurParams{1, 1.0}, 0}.validate().size() == 1);
  CHECK(NoiseSpec{GaussianBlurParams{5, 0.0}, 0}.validate().size() == 1);
  CHECK(NoiseSpec{SaltParams{1.5}, 0}.validate().size() == 1);
  CHECK(NoiseSpec{SaltAndPepperParams{0.1, -0.1}, 0}.validate().size() == 1);
  CHECK(NoiseSpec{SpeckleParams{-1}, 0}.validate().size() == 1);
  CHECK(NoiseSpec{GaussianNoiseParams{0, std::nan("")}, 0}.validate().size() == 1);
  CHECK_THROWS_AS(apply_noise(RasterImage(4, 4), NoiseSpec{PepperParams{-0.1}, 0}), InvalidArgument);
}

TEST_CASE("gaussian kernel taps") {
  for (int k : {3, 5, 11}) {
    const auto t = gaussian_kernel_1d(k, 1.1);
    REQUIRE(t.size() == static_cast<std::size_t>(k));
    double s = 0;
    for (double v : t) s += v;
    // 2-D kernel is the outer product, so its sum is s*s
    CHECK(std::abs(s * s - 1.0) < 1e-12);
    for (int i = 0; i < k; ++i) CHECK(t[i] == t[k - 1 - i]);
    CHECK(t[k / 2] > t[0]);
  }
}

TEST_CASE("reflect index mirrors without repeating the edge") {
  CHECK(reflect_index(-1, 4) == 1);
  CHECK(reflect_index(-3, 4) == 3);
  CHECK(reflect_index(4, 4) == 2);
  CHECK(reflect_index(5, 4) == 1);
  CHECK(reflect_index(2, 4) == 2);
  CHECK(reflect_index(-7, 1) == 0);
  for (int i = -20; i < 20; ++i) {
    const int r = reflect_index(i, 3);
    CHECK(r >= 0);
    CHECK(r < 3);
  }
}

TEST_CASE("salt exact cases") {
  const auto img = testing::random_image(64, 48, 5);
  CHECK(apply_noise(img, salt(0.0, 7)) == img);
  CHECK(apply_noise(img, salt(1.0, 7)) == RasterImage::filled(64, 48, 255, 255, 255));
  CHECK(apply_noise(img, NoiseSpec{PepperParams{1.0}, 7}) == RasterImage(64, 48, 0));
  CHECK(apply_noise(img, NoiseSpec{PepperParams{0.0}, 7}) == img);
}

TEST_CASE("salt corruption fraction concentrates around amount") {
  const auto gray = RasterImage::filled(1024, 1024, 128, 128, 128);
  const auto out = apply_noise(gray, salt(0.05, 11));
  const double n = 1024.0 * 1024.0;
  const double frac = count_value(out, 255) / n;
  const double sigma = std::sqrt(0.05 * 0.95 / n);
  CHECK(std::abs(frac - 0.05) <= 6 * sigma);
  CHECK(frac >= 0.045);
  CHECK(frac <= 0.055);
  // untouched pixels stay exactly gray
  CHECK(count_value(out, 255) + count_value(out, 128) == 1024 * 1024);
}

TEST_CASE("salt and pepper splits corrupted pixels by salt_fraction") {
  const auto gray = RasterImage::filled(512, 512, 128, 128, 128);
  const auto img = testing::random_image(40, 30, 6);
  CHECK(apply_noise(img, NoiseSpec{SaltAndPepperParams{0.3, 1.0}, 9}) == apply_noise(img, salt(0.3, 9)));
  CHECK(apply_noise(img, NoiseSpec{SaltAndPepperParams{0.3, 0.0}, 9}) ==
        apply_noise(img, NoiseSpec{PepperParams{0.3}, 9}));
  const auto out = apply_noise(gray, NoiseSpec{SaltAndPepperParams{0.2, 0.25}, 3});
  const double n = 512.0 * 512.0;
  const double white = count_value(out, 255) / n, black = count_value(out, 0) / n;
  CHECK(std::abs(white - 0.05) < 6 * std::sqrt(0.05 * 0.95 / n));
  CHECK(std::abs(black - 0.15) < 6 * std::sqrt(0.15 * 0.85 / n));
}

TEST_CASE("gaussian noise moments match within 3 standard errors") {
  // mid-gray keeps clipping negligible: 0.5 / 0.1 = 5 sigma
  const auto gray = RasterImage::filled(512, 512, 128, 128, 128);
  for (auto [mean, var] : {std::pair{0.0, 0.01}, {0.02, 0.005}}) {
    const auto out = apply_noise(gray, NoiseSpec{GaussianNoiseParams{mean, var}, 21});
    const auto a = out.pixels();
    const double n = static_cast<double>(a.size());
    double s = 0, s2 = 0;
    for (auto v : a) {
      const double d = (v - 128) / 255.0;
      s += d;
      s2 += d * d;
    }
    const double m = s / n, v = s2 / n - m * m;
    // rounding to 8 bits adds uniform error of variance 1/(12*255^2)
    const double qvar = 1.0 / (12.0 * 255 * 255);
    CHECK(std::abs(m - mean) <= 3 * std::sqrt((var + qvar) / n) + 0.5 / 255 / 128);
    CHECK(std::abs(v - (var + qvar)) <= 3 * var * std::sqrt(2.0 / n) + 1e-6);
  }
}

TEST_CASE("fixed points") {
  const auto constant = RasterImage::filled(50, 40, 90, 10, 250);
  CHECK(apply_noise(constant, NoiseSpec::defaults(NoiseKind::GaussianBlur)) == constant);
  CHECK(apply_noise(constant, NoiseSpec{GaussianBlurParams{11, 3.0}, 0}) == constant);
  const RasterImage black(32, 32, 0);
  CHECK(apply_noise(black, NoiseSpec::defaults(NoiseKind::Speckle, 4)) == black);
  CHECK(apply_noise(black, NoiseSpec::defaults(NoiseKind::PoissonNoise, 4)) == black);
}

TEST_CASE("poisson levels") {
  CHECK(poisson_levels(RasterImage(4, 4, 0)) == 1.0);
  CHECK(poisson_levels(testing::random_image(64, 64, 1)) == 256.0);
  RasterImage two(2, 1, 0);
  two.at(1, 0, 0) = 200;
  CHECK(poisson_levels(two) == 2.0);
  const RasterImage three(3, 1, std::vector<std::uint8_t>{0, 0, 0, 1, 1, 1, 2, 2, 2});
  CHECK(poisson_levels(three) == 4.0);
}

TEST_CASE("poisson noise is unbiased on a mid-gray image") {
  // single value -> Q = 1, so counts are Poisson(0.5)/1 clipped to [0,1]
  const auto gray = RasterImage::filled(256, 256, 128, 128, 128);
  const auto out = apply_noise(gray, NoiseSpec::defaults(NoiseKind::PoissonNoise, 2));
  int zeros = 0;
  for (auto v : out.pixels()) {
    CHECK((v == 0 || v == 255));
    zeros += v == 0;
  }
  const double n = out.pixels().size();
  CHECK(std::abs(zeros / n - std::exp(-128 / 255.0)) < 6 * std::sqrt(0.25 / n));
}

TEST_CASE("localvar noise uses the per-pixel map") {
  const auto gray = RasterImage::filled(8, 8, 128, 128, 128);
  auto map = std::make_shared<VarianceMap>();
  map->width = 8;
  map->height = 8;
  map->values.assign(64, 0.0);
  map->values[9] = 0.05;
  LocalvarNoiseParams p;
  p.map = map;
  const auto out = apply_noise(gray, NoiseSpec{p, 3});
  for (int i = 0; i < 64; ++i)
    if (i != 9) CHECK(out.at(i % 8, i / 8, 0) == 128);
  CHECK(out.at(1, 1, 0) != 128);

  auto wrong = std::make_shared<VarianceMap>(*map);
  wrong->width = 4;
  wrong->values.resize(32);
  p.map = wrong;
  CHECK_THROWS_AS(apply_noise(gray, NoiseSpec{p, 3}), InvalidArgument);
}

TEST_CASE("variance map files") {
  testing::TempDir dir("vmap");
  testing::write_text(dir / "m.txt", "2 2\n0 0.1\n0.2 0.3\n");
  const auto m = VarianceMap::load(dir / "m.txt");
  CHECK(m.values == std::vector<double>{0, 0.1, 0.2, 0.3});
  testing::write_text(dir / "short.txt", "2 2\n0 0.1\n");
  CHECK_THROWS_AS(VarianceMap::load(dir / "short.txt"), SchemaError);
  testing::write_text(dir / "long.txt", "1 1\n0 0.1\n");
  CHECK_THROWS_AS(VarianceMap::load(dir / "long.txt"), SchemaError);

  LocalvarNoiseParams p;
  p.map_path = (dir / "m.txt").string();
  const auto img = RasterImage::filled(2, 2, 128, 128, 128);
  const auto out = apply_noise(img, NoiseSpec{p, 1});
  CHECK(out.at(0, 0, 0) == 128);
}

TEST_CASE("outputs are deterministic, seed dependent and match the serial reference") {
  const auto img = testing::smooth_image(97, 61, 8);
  for (const auto& spec : every_kind(1234)) {
    CAPTURE(to_string(spec.kind()));
    const auto a = apply_noise(img, spec);
    CHECK(a == apply_noise(img, spec));
    CHECK(a.width() == img.width());
    const auto ref = serial::apply_noise(img, spec);
    if (spec.kind() == NoiseKind::GaussianBlur) {
      // separable vs direct 2-D summation may round differently at .5 boundaries
      int worst = 0;
      for (std::size_t i = 0; i < a.pixels().size(); ++i)
        worst = std::max(worst, std::abs(int(a.pixels()[i]) - int(ref.pixels()[i])));
      CHECK(worst <= 1);
    } else {
      CHECK(a == ref);
      NoiseSpec other = spec;
      other.seed = 1235;
      CHECK(apply_noise(img, other) != a);
    }
  }
}

TEST_CASE("blur smooths an impulse symmetrically") {
  RasterImage img(9, 9, 0);
  for (int c = 0; c < 3; ++c) img.at(4, 4, c) = 255;
  const auto out = apply_noise(img, NoiseSpec::defaults(NoiseKind::GaussianBlur));
  CHECK(out.at(4, 4, 0) < 255);
  CHECK(out.at(4, 4, 0) > out.at(5, 4, 0));
  CHECK(out.at(3, 4, 0) == out.at(5, 4, 0));
  CHECK(out.at(4, 3, 0) == out.at(4, 5, 0));
  CHECK(out.at(0, 0, 0) == 0);
}
