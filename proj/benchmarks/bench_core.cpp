#include <benchmark/benchmark.h>

#include "convexinit/init.hpp"
#include "convexinit/kernels.hpp"
#include "convexinit/network.hpp"
#include "convexinit/numerics.hpp"
#include "convexinit/propagation.hpp"

using namespace convexinit;

namespace {

NetworkConfig stack(std::size_t width, std::size_t depth, Variant v, InitKind k) {
  NetworkConfig c;
  c.layer_widths.assign(depth + 1, width);
  c.layer_widths.back() = 10;
  c.variant = v;
  c.init.kind = k;
  return c;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = std::size_t(state.range(0));
  Rng rng(1);
  const Matrix a = gaussian_sample(rng, 0.0, 1.0, n, n);
  const Matrix b = gaussian_sample(rng, 0.0, 1.0, n, n);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * std::int64_t(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(128)->Arg(256)->Arg(784);

void BM_ForwardBackward(benchmark::State& state) {
  const auto width = std::size_t(state.range(0));
  Rng rng(2);
  const Network net = build_network(stack(width, 6, Variant::icnn_projection, InitKind::convex_init), rng);
  const Matrix x = gaussian_sample(rng, 0.0, 1.0, 128, width);
  const Matrix g = gaussian_sample(rng, 0.0, 1.0, 128, 10);
  for (auto _ : state) {
    const ForwardTrace t = forward(net, x);
    benchmark::DoNotOptimize(backward(net, t, g));
  }
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_ForwardBackward)->Arg(100)->Arg(784)->Unit(benchmark::kMillisecond);

void BM_ClosedFormKernels(benchmark::State& state) {
  double rho = -0.99;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lrelu_kernel(rho, 1.0, 0.1) + lrelu_deriv_kernel(rho, 0.1) +
                             f_c(rho, 784, 0.1));
    rho = rho > 0.98 ? -0.99 : rho + 1e-3;
  }
}
BENCHMARK(BM_ClosedFormKernels);

void BM_KernelMonteCarlo(benchmark::State& state) {
  Rng rng(3);
  for (auto _ : state)
    benchmark::DoNotOptimize(kernel_mc_oracle(rng, 0.5, 1.0, 0.1, 100'000, KernelMode::value));
  state.SetItemsProcessed(state.iterations() * 100'000);
}
BENCHMARK(BM_KernelMonteCarlo)->Unit(benchmark::kMillisecond);

void BM_ConvexInitParams(benchmark::State& state) {
  std::size_t n = 2;
  for (auto _ : state) {
    benchmark::DoNotOptimize(convex_init_params(n));
    n = n > 4096 ? 2 : n + 1;
  }
}
BENCHMARK(BM_ConvexInitParams);

void BM_EmpiricalLayerStats(benchmark::State& state) {
  Rng rng(4);
  const Network net = build_network(stack(256, 4, Variant::nonconvex, InitKind::default_he), rng);
  const Matrix x = gaussian_sample(rng, 0.0, 1.0, 1000, 256);
  for (auto _ : state) benchmark::DoNotOptimize(empirical_layer_stats(net, x));
}
BENCHMARK(BM_EmpiricalLayerStats)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
