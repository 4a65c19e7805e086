// Parallel kernels against their serial:: references.

#include <benchmark/benchmark.h>

#include <random>

#include "dsforge/genclient.hpp"
#include "dsforge/metrics.hpp"
#include "dsforge/noise.hpp"

using namespace dsforge;

namespace {

RasterImage photo_like(int side, std::uint32_t seed) {
  GenRequest req{Prompt::make("a photo of one tabby cat", Label::make("cat"), PromptSource::Naive), side, side,
                 seed, 0};
  return MockBackend().generate(req);
}

std::vector<RasterImage> class_images(int n, int side) {
  std::vector<RasterImage> out;
  for (int i = 0; i < n; ++i) out.push_back(photo_like(side, static_cast<std::uint32_t>(i)));
  return out;
}

template <bool Parallel>
void BM_Blur(benchmark::State& st) {
  const auto img = photo_like(static_cast<int>(st.range(0)), 1);
  const NoiseSpec spec{GaussianBlurParams{5, 1.1}, 0};
  for (auto _ : st) benchmark::DoNotOptimize(Parallel ? apply_noise(img, spec) : serial::apply_noise(img, spec));
  st.SetItemsProcessed(st.iterations() * img.pixel_count());
}

template <bool Parallel>
void BM_GaussianNoise(benchmark::State& st) {
  const auto img = photo_like(static_cast<int>(st.range(0)), 2);
  const auto spec = NoiseSpec::defaults(NoiseKind::GaussianNoise, 7);
  for (auto _ : st) benchmark::DoNotOptimize(Parallel ? apply_noise(img, spec) : serial::apply_noise(img, spec));
  st.SetItemsProcessed(st.iterations() * img.pixel_count());
}

template <bool Parallel>
void BM_Resize(benchmark::State& st) {
  const auto img = photo_like(static_cast<int>(st.range(0)), 3);
  for (auto _ : st) benchmark::DoNotOptimize(Parallel ? resize(img, 224, 224) : serial::resize(img, 224, 224));
}

template <bool Parallel>
void BM_Ssim(benchmark::State& st) {
  const int side = static_cast<int>(st.range(0));
  const auto a = photo_like(side, 4), b = photo_like(side, 5);
  for (auto _ : st) benchmark::DoNotOptimize(Parallel ? ssim(a, b) : serial::ssim(a, b));
}

template <bool Parallel>
void BM_ClassSsim(benchmark::State& st) {
  const auto imgs = class_images(static_cast<int>(st.range(0)), 128);
  for (auto _ : st)
    benchmark::DoNotOptimize(Parallel ? class_ssim(imgs, 128).mean : serial::class_ssim(imgs, 128).mean);
  st.SetItemsProcessed(st.iterations() * imgs.size() * (imgs.size() - 1) / 2);
}

template <bool Parallel>
void BM_MockGenerate(benchmark::State& st) {
  const int side = static_cast<int>(st.range(0));
  GenRequest req{Prompt::make("a photo of one tabby cat", Label::make("cat"), PromptSource::Naive), side, side, 9, 0};
  MockBackend backend;
  for (auto _ : st) benchmark::DoNotOptimize(Parallel ? backend.generate(req) : serial::mock_generate(req));
}

}  // namespace

BENCHMARK(BM_Blur<true>)->Name("blur/parallel")->Arg(256)->Arg(768);
BENCHMARK(BM_Blur<false>)->Name("blur/serial")->Arg(256)->Arg(768);
BENCHMARK(BM_GaussianNoise<true>)->Name("gaussian_noise/parallel")->Arg(256)->Arg(768);
BENCHMARK(BM_GaussianNoise<false>)->Name("gaussian_noise/serial")->Arg(256)->Arg(768);
BENCHMARK(BM_Resize<true>)->Name("resize_to_224/parallel")->Arg(768);
BENCHMARK(BM_Resize<false>)->Name("resize_to_224/serial")->Arg(768);
BENCHMARK(BM_Ssim<true>)->Name("ssim/parallel")->Arg(224);
BENCHMARK(BM_Ssim<false>)->Name("ssim/serial")->Arg(224);
BENCHMARK(BM_ClassSsim<true>)->Name("class_ssim/parallel")->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClassSsim<false>)->Name("class_ssim/serial")->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MockGenerate<true>)->Name("mock_generate/parallel")->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MockGenerate<false>)->Name("mock_generate/serial")->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
