#include <random>

#include <Eigen/Geometry>
#include <benchmark/benchmark.h>

#include "ampi/camera.hpp"
#include "ampi/losses.hpp"
#include "ampi/mpi.hpp"
#include "ampi/renderer.hpp"

namespace {

using namespace ampi;

ImageBuffer noise(std::mt19937_64& rng, int w, int h, int c) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageBuffer img(w, h, c);
  for (double& v : img.data()) v = u(rng);
  return img;
}

MultiplaneImage random_mpi(int size, int n) {
  std::mt19937_64 rng(1);
  MultiplaneImage m;
  m.depth_range = {1.0, 10.0};
  m.intrinsics = {double(size), double(size), (size - 1) / 2.0, (size - 1) / 2.0};
  const auto depths = uniform_positions(n, m.depth_range);
  for (int i = 0; i < n; ++i) m.planes.push_back({noise(rng, size, size, 3), noise(rng, size, size, 1), depths[i]});
  return m;
}

RigidPose small_motion() {
  RigidPose p;
  p.R = Eigen::AngleAxisd(0.01, Eigen::Vector3d(0.3, 1.0, 0.1).normalized()).toRotationMatrix();
  p.t = {0.05, -0.03, 0.02};
  return p;
}

void BM_Render(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const MultiplaneImage m = random_mpi(size, static_cast<int>(state.range(1)));
  const RigidPose pose = small_motion();
  for (auto _ : state) benchmark::DoNotOptimize(render(m, pose, m.intrinsics, size, size));
  state.SetItemsProcessed(state.iterations() * size * size * state.range(1));
}
BENCHMARK(BM_Render)->Args({128, 8})->Args({128, 16})->Args({256, 8})->Unit(benchmark::kMillisecond);

void BM_RenderWithAdjoint(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const MultiplaneImage m = random_mpi(size, static_cast<int>(state.range(1)));
  const RigidPose pose = small_motion();
  std::mt19937_64 rng(2);
  const ImageBuffer d_out = noise(rng, size, size, 3);
  for (auto _ : state) {
    auto r = render_with_adjoint(m, pose, m.intrinsics, size, size, [&](const ImageBuffer&) { return d_out; });
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * size * size * state.range(1));
}
BENCHMARK(BM_RenderWithAdjoint)->Args({128, 8})->Args({128, 16})->Unit(benchmark::kMillisecond);

void BM_SynthesisLoss(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  const ImageBuffer a = noise(rng, size, size, 3), b = noise(rng, size, size, 3);
  for (auto _ : state) benchmark::DoNotOptimize(synthesis_loss(a, b));
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_SynthesisLoss)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Chamfer(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(1.0, 10.0);
  DepthSampleSet gt;
  for (int i = 0; i < 4096; ++i) gt.values.push_back(d(rng));
  const auto pos = uniform_positions(static_cast<int>(state.range(0)), {1.0, 10.0});
  for (auto _ : state) benchmark::DoNotOptimize(adaptive_bins_loss(pos, gt));
}
BENCHMARK(BM_Chamfer)->Arg(8)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
