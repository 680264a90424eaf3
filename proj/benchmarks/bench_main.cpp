#include <benchmark/benchmark.h>

#include <random>

#include "monostereo/losses.hpp"
#include "monostereo/network.hpp"
#include "monostereo/sampler.hpp"
#include "monostereo/tensor.hpp"

using namespace monostereo;

namespace {

Raster random_raster(int h, int w, int c, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Raster r(h, w, c);
  for (double& v : r.values()) v = u(rng);
  return r;
}

void BM_Conv3x3(benchmark::State& state) {
  const int ch = static_cast<int>(state.range(0));
  const Tensor in = Tensor::from_raster(random_raster(64, 128, ch, -1, 1, 1));
  const Raster w = random_raster(1, 1, ch * ch * 9, -0.1, 0.1, 2);
  const std::vector<double> weight(w.values().begin(), w.values().end());
  const std::vector<double> bias(static_cast<std::size_t>(ch), 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d(in, weight, bias, ch, {}));
  state.SetItemsProcessed(state.iterations() * 64 * 128);
}
BENCHMARK(BM_Conv3x3)->Arg(8)->Arg(32);

void BM_Warp(benchmark::State& state) {
  const Raster src = random_raster(256, 512, 3, 0, 1, 3);
  const Raster disp = random_raster(256, 512, 1, 0, 40, 4);
  for (auto _ : state) benchmark::DoNotOptimize(warp(src, disp, WarpDirection::kReconstructLeft));
  state.SetItemsProcessed(state.iterations() * 256 * 512);
}
BENCHMARK(BM_Warp);

void BM_WarpBackward(benchmark::State& state) {
  const Raster src = random_raster(256, 512, 3, 0, 1, 5);
  const Raster disp = random_raster(256, 512, 1, 0, 40, 6);
  const Raster up = random_raster(256, 512, 3, -1, 1, 7);
  for (auto _ : state) benchmark::DoNotOptimize(warp_backward(src, disp, WarpDirection::kReconstructLeft, up));
}
BENCHMARK(BM_WarpBackward);

void BM_Ssim(benchmark::State& state) {
  const Raster a = random_raster(128, 256, 3, 0, 1, 8);
  const Raster b = random_raster(128, 256, 3, 0, 1, 9);
  for (auto _ : state) benchmark::DoNotOptimize(ssim_loss(a, b));
}
BENCHMARK(BM_Ssim);

void BM_MicroForwardBackward(benchmark::State& state) {
  const Checkpoint ck = init_network(NetworkSpec::for_preset(Preset::kMicro, NetworkRole::kViewSynthesis), 0);
  const Raster in = random_raster(64, 128, 3, 0, 1, 10);
  for (auto _ : state) {
    ForwardResult fr = forward(ck, in);
    MultiScaleGradient g;
    for (const auto& s : fr.output.scales) {
      g.scales.push_back({DisparityMap(s.left.height(), s.left.width(), 1.0),
                          DisparityMap(s.left.height(), s.left.width(), 1.0)});
    }
    benchmark::DoNotOptimize(backward(ck, fr.tape, g));
  }
}
BENCHMARK(BM_MicroForwardBackward)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
