#include <benchmark/benchmark.h>

#include <vector>

#include "bnnfilt/binopt.hpp"
#include "bnnfilt/kernels.hpp"
#include "bnnfilt/rng.hpp"

using namespace bnnfilt;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

void label(benchmark::State& state) {
  state.SetLabel(state.range(0) == 0 ? "serial" : "omp");
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_CascadeUpdate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto grad = normals(n, 1);
  std::vector<double> m(n, 0.0), g(n, 0.0);
  for (auto _ : state) {
    kernels::cascade_update(exec_of(state), {1e-3, 0.1, grad, m, g});
    benchmark::DoNotOptimize(g.data());
  }
  label(state);
}

void BM_Direct2Update(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto grad = normals(n, 2);
  std::vector<double> g1(n, 0.0), g2(n, 0.0);
  for (auto _ : state) {
    kernels::direct2_update(exec_of(state), {1e-4, -1.899, 0.8991, grad, g1, g2});
    benchmark::DoNotOptimize(g1.data());
  }
  label(state);
}

void BM_LatentUpdate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto grad = normals(n, 3);
  std::vector<double> m(n, 0.0), w(n, 0.0);
  for (auto _ : state) {
    kernels::latent_update(exec_of(state), {0.1, 1e-2, 0.1, false, grad, m, w});
    benchmark::DoNotOptimize(w.data());
  }
  label(state);
}

void BM_Binarize(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto values = normals(n, 4);
  const binopt::TieBreakRng rng(5);
  std::vector<std::int8_t> theta(n, 1);
  std::vector<std::uint8_t> flipped(n, 0);
  std::uint64_t step = 0;
  for (auto _ : state) benchmark::DoNotOptimize(kernels::binarize(exec_of(state), {values, -1.0, &rng, step++, theta, flipped}));
  label(state);
}

void BM_MatmulBinary(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(1));
  const std::size_t batch = 64;
  const auto a = normals(batch * width, 6);
  std::vector<std::int8_t> b(width * width, 1);
  std::vector<double> c(batch * width);
  for (auto _ : state) {
    kernels::matmul_abt<std::int8_t>(exec_of(state), a, b, c, batch, width, width);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetLabel(state.range(0) == 0 ? "serial" : "omp");
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch * width * width));
}

void BM_FilterOptimizerStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto grad = normals(n, 7);
  binopt::FilterHyper hyper;
  hyper.alpha.total_steps = std::size_t{1} << 40;
  binopt::FilterOptimizer opt(n, hyper, binopt::TieBreakRng(8), exec_of(state));
  std::size_t step = 0;
  for (auto _ : state) benchmark::DoNotOptimize(opt.step(grad, step++));
  label(state);
}

void sizes(benchmark::internal::Benchmark* b) {
  for (int exec : {0, 1})
    for (int n : {1 << 12, 1 << 16, 1 << 20}) b->Args({exec, n});
}

void widths(benchmark::internal::Benchmark* b) {
  for (int exec : {0, 1})
    for (int n : {64, 256}) b->Args({exec, n});
}

}  // namespace

BENCHMARK(BM_CascadeUpdate)->Apply(sizes);
BENCHMARK(BM_Direct2Update)->Apply(sizes);
BENCHMARK(BM_LatentUpdate)->Apply(sizes);
BENCHMARK(BM_Binarize)->Apply(sizes);
BENCHMARK(BM_FilterOptimizerStep)->Apply(sizes);
BENCHMARK(BM_MatmulBinary)->Apply(widths);

BENCHMARK_MAIN();
