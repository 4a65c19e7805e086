#include "dsforge/noise.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>

#include "dsforge/error.hpp"
#include "dsforge/rng.hpp"

namespace dsforge {

namespace {

constexpr std::array<std::pair<NoiseKind, std::string_view>, 8> kKindNames{{
    {NoiseKind::GaussianBlur, "gaussian_blur"},
    {NoiseKind::GaussianNoise, "gaussian_noise"},
    {NoiseKind::LocalvarNoise, "localvar_noise"},
    {NoiseKind::PoissonNoise, "poisson_noise"},
    {NoiseKind::Salt, "salt"},
    {NoiseKind::Pepper, "pepper"},
    {NoiseKind::SaltAndPepper, "salt_and_pepper"},
    {NoiseKind::Speckle, "speckle"},
}};

std::string num(double v) {
  std::string s = std::to_string(v);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

std::string_view to_string(NoiseKind kind) noexcept {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

std::optional<NoiseKind> parse_noise_kind(std::string_view raw) noexcept {
  std::string name(raw);
  for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  if (name == "s&p" || name == "sp") return NoiseKind::SaltAndPepper;
  if (name == "blur") return NoiseKind::GaussianBlur;
  if (name == "gaussian") return NoiseKind::GaussianNoise;
  if (name == "localvar") return NoiseKind::LocalvarNoise;
  if (name == "poisson") return NoiseKind::PoissonNoise;
  return std::nullopt;
}

VarianceMap VarianceMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open variance map '" + path.string() + "'");
  VarianceMap m;
  if (!(in >> m.width >> m.height) || m.width < 1 || m.height < 1)
    throw SchemaError("variance map '" + path.string() + "': malformed header");
  m.values.resize(static_cast<std::size_t>(m.width) * m.height);
  for (auto& v : m.values)
    if (!(in >> v)) throw SchemaError("variance map '" + path.string() + "': too few values");
  double extra;
  if (in >> extra) throw SchemaError("variance map '" + path.string() + "': too many values");
  return m;
}

NoiseSpec NoiseSpec::defaults(NoiseKind kind, std::uint64_t seed) {
  NoiseSpec s;
  s.seed = seed;
  switch (kind) {
    case NoiseKind::GaussianBlur: s.params = GaussianBlurParams{}; break;
    case NoiseKind::GaussianNoise: s.params = GaussianNoiseParams{}; break;
    case NoiseKind::LocalvarNoise: s.params = LocalvarNoiseParams{}; break;
    case NoiseKind::PoissonNoise: s.params = PoissonNoiseParams{}; break;
    case NoiseKind::Salt: s.params = SaltParams{}; break;
    case NoiseKind::Pepper: s.params = PepperParams{}; break;
    case NoiseKind::SaltAndPepper: s.params = SaltAndPepperParams{}; break;
    case NoiseKind::Speckle: s.params = SpeckleParams{}; break;
  }
  return s;
}

std::vector<std::string> NoiseSpec::validate() const {
  std::vector<std::string> errs;
  std::visit(
      [&errs](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, GaussianBlurParams>) {
          if (p.kernel_size < 3 || p.kernel_size % 2 == 0)
            errs.push_back("kernel_size must be odd and ≥ 3, got " + std::to_string(p.kernel_size));
          if (!(p.sigma > 0.0)) errs.push_back("sigma must be > 0, got " + num(p.sigma));
        } else if constexpr (std::is_same_v<P, GaussianNoiseParams>) {
          if (!(p.variance >= 0.0)) errs.push_back("variance must be ≥ 0, got " + num(p.variance));
          if (!std::isfinite(p.mean)) errs.push_back("mean must be finite");
        } else if constexpr (std::is_same_v<P, LocalvarNoiseParams>) {
          if (!(p.variance >= 0.0)) errs.push_back("variance must be ≥ 0, got " + num(p.variance));
          if (p.map) {
            if (p.map->values.size() != static_cast<std::size_t>(p.map->width) * p.map->height)
              errs.emplace_back("variance map size does not match its dimensions");
            if (std::any_of(p.map->values.begin(), p.map->values.end(),
                            [](double v) { return !(v >= 0.0); }))
              errs.emplace_back("variance map entries must be ≥ 0");
          }
        } else if constexpr (std::is_same_v<P, SaltParams> || std::is_same_v<P, PepperParams>) {
          if (!in_unit(p.amount)) errs.push_back("amount must be in [0,1], got " + num(p.amount));
        } else if constexpr (std::is_same_v<P, SaltAndPepperParams>) {
          if (!in_unit(p.amount)) errs.push_back("amount must be in [0,1], got " + num(p.amount));
          if (!in_unit(p.salt_fraction))
            errs.push_back("salt_fraction must be in [0,1], got " + num(p.salt_fraction));
        } else if constexpr (std::is_same_v<P, SpeckleParams>) {
          if (!(p.variance >= 0.0)) errs.push_back("variance must be ≥ 0, got " + num(p.variance));
        }
      },
      params);
  return errs;
}

std::vector<double> gaussian_kernel_1d(int size, double sigma) {
  if (size < 1 || size % 2 == 0) throw InvalidArgument("kernel size must be odd and positive");
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  std::vector<double> k(size);
  const int r = size / 2;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - r;
    k[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

int reflect_index(int i, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

double poisson_levels(const RasterImage& img) {
  std::array<bool, 256> seen{};
  for (auto v : img.pixels()) seen[v] = true;
  const auto distinct = std::count(seen.begin(), seen.end(), true);
  return std::exp2(std::ceil(std::log2(static_cast<double>(std::max<std::ptrdiff_t>(distinct, 1)))));
}

namespace {

// Inversion sampler driven by a single uniform; k is capped far in the upper tail.
std::uint32_t poisson_sample(double lambda, double u) {
  if (!(lambda > 0.0)) return 0;
  double p = std::exp(-lambda);
  double cdf = p;
  std::uint32_t k = 0;
  const auto cap = static_cast<std::uint32_t>(lambda + 40.0 * std::sqrt(lambda) + 40.0);
  while (u > cdf && k < cap) {
    ++k;
    p *= lambda / k;
    cdf += p;
  }
  return k;
}

constexpr double kInv255 = 1.0 / 255.0;

// Per-element bodies shared by the parallel kernel and the serial reference; both must
// produce the same bits, only the traversal differs.
struct Kernel {
  const RasterImage& in;
  const NoiseSpec& spec;
  CounterRng rng;
  double levels = 1.0;
  const VarianceMap* map = nullptr;

  // Writes pixel p (all three channels) of `out`.
  void pixel(std::size_t p, std::uint8_t* out) const {
    const auto src = in.pixels().data() + p * 3;
    std::visit(
        [&](const auto& prm) {
          using P = std::decay_t<decltype(prm)>;
          if constexpr (std::is_same_v<P, SaltParams>) {
            const bool hit = rng.uniform(p, 0) < prm.amount;
            for (int c = 0; c < 3; ++c) out[c] = hit ? 255 : src[c];
          } else if constexpr (std::is_same_v<P, PepperParams>) {
            const bool hit = rng.uniform(p, 0) < prm.amount;
            for (int c = 0; c < 3; ++c) out[c] = hit ? 0 : src[c];
          } else if constexpr (std::is_same_v<P, SaltAndPepperParams>) {
            // Draw 0 decides corruption exactly as Salt/Pepper do, so salt_fraction = 1
            // reproduces Salt with the same seed.
            const bool hit = rng.uniform(p, 0) < prm.amount;
            const bool salt = rng.uniform(p, 0, 1) < prm.salt_fraction;
            for (int c = 0; c < 3; ++c) out[c] = hit ? (salt ? 255 : 0) : src[c];
          } else if constexpr (std::is_same_v<P, GaussianNoiseParams>) {
            const double sd = std::sqrt(prm.variance);
            for (int c = 0; c < 3; ++c) {
              const double n = prm.mean + sd * rng.normal(p, static_cast<std::uint32_t>(c));
              out[c] = quantize_unit(src[c] * kInv255 + n);
            }
          } else if constexpr (std::is_same_v<P, LocalvarNoiseParams>) {
            const double var = map ? map->values[p] : prm.variance;
            const double sd = std::sqrt(var);
            for (int c = 0; c < 3; ++c)
              out[c] = quantize_unit(src[c] * kInv255 + sd * rng.normal(p, static_cast<std::uint32_t>(c)));
          } else if constexpr (std::is_same_v<P, PoissonNoiseParams>) {
            for (int c = 0; c < 3; ++c) {
              const double lambda = src[c] * kInv255 * levels;
              const auto k = poisson_sample(lambda, rng.uniform(p, static_cast<std::uint32_t>(c)));
              out[c] = quantize_unit(k / levels);
            }
          } else if constexpr (std::is_same_v<P, SpeckleParams>) {
            const double sd = std::sqrt(prm.variance);
            for (int c = 0; c < 3; ++c) {
              const double x = src[c] * kInv255;
              out[c] = quantize_unit(x + x * sd * rng.normal(p, static_cast<std::uint32_t>(c)));
            }
          }
        },
        spec.params);
  }
};

std::shared_ptr<const VarianceMap> resolve_map(const NoiseSpec& spec, const RasterImage& img) {
  const auto* lv = std::get_if<LocalvarNoiseParams>(&spec.params);
  if (!lv) return nullptr;
  auto map = lv->map;
  if (!map && !lv->map_path.empty()) map = std::make_shared<VarianceMap>(VarianceMap::load(lv->map_path));
  if (map) {
    if (map->width != img.width() || map->height != img.height())
      throw InvalidArgument("variance map is " + std::to_string(map->width) + "x" +
                            std::to_string(map->height) + " but the image is " +
                            std::to_string(img.width()) + "x" + std::to_string(img.height()));
    if (std::any_of(map->values.begin(), map->values.end(), [](double v) { return !(v >= 0.0); }))
      throw InvalidArgument("variance map entries must be ≥ 0");
  }
  return map;
}

void check_spec(const NoiseSpec& spec) {
  if (auto errs = spec.validate(); !errs.empty())
    throw InvalidArgument(std::string(to_string(spec.kind())) + ": " + errs.front());
}

RasterImage blur_separable(const RasterImage& img, const GaussianBlurParams& prm) {
  const auto k = gaussian_kernel_1d(prm.kernel_size, prm.sigma);
  const int r = prm.kernel_size / 2;
  const int w = img.width(), h = img.height();
  std::vector<double> tmp(static_cast<std::size_t>(w) * h * 3);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int t = -r; t <= r; ++t) acc += k[t + r] * (img.at(reflect_index(x + t, w), y, c) * kInv255);
        tmp[(static_cast<std::size_t>(y) * w + x) * 3 + c] = acc;
      }
    }
  }
  RasterImage out(w, h);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int t = -r; t <= r; ++t)
          acc += k[t + r] * tmp[(static_cast<std::size_t>(reflect_index(y + t, h)) * w + x) * 3 + c];
        out.at(x, y, c) = quantize_unit(acc);
      }
    }
  }
  return out;
}

}  // namespace

RasterImage apply_noise(const RasterImage& img, const NoiseSpec& spec) {
  check_spec(spec);
  if (const auto* blur = std::get_if<GaussianBlurParams>(&spec.params)) return blur_separable(img, *blur);
  const auto map = resolve_map(spec, img);
  const Kernel kernel{img, spec, CounterRng(spec.seed),
                      spec.kind() == NoiseKind::PoissonNoise ? poisson_levels(img) : 1.0, map.get()};
  RasterImage out(img.width(), img.height());
  auto* dst = out.pixels().data();
  const auto n = static_cast<std::int64_t>(img.pixel_count());
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < n; ++p) kernel.pixel(static_cast<std::size_t>(p), dst + p * 3);
  return out;
}

namespace serial {

RasterImage apply_noise(const RasterImage& img, const NoiseSpec& spec) {
  check_spec(spec);
  if (const auto* blur = std::get_if<GaussianBlurParams>(&spec.params)) {
    const auto k = gaussian_kernel_1d(blur->kernel_size, blur->sigma);
    const int r = blur->kernel_size / 2;
    RasterImage out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        for (int c = 0; c < 3; ++c) {
          double acc = 0.0;
          for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx)
              acc += k[dy + r] * k[dx + r] *
                     img.at(reflect_index(x + dx, img.width()), reflect_index(y + dy, img.height()), c) *
                     kInv255;
          out.at(x, y, c) = quantize_unit(acc);
        }
    return out;
  }
  const auto map = resolve_map(spec, img);
  const Kernel kernel{img, spec, CounterRng(spec.seed),
                      spec.kind() == NoiseKind::PoissonNoise ? poisson_levels(img) : 1.0, map.get()};
  RasterImage out(img.width(), img.height());
  for (std::size_t p = 0; p < img.pixel_count(); ++p) kernel.pixel(p, out.pixels().data() + p * 3);
  return out;
}

}  // namespace serial

}  // namespace dsforge
