#include <benchmark/benchmark.h>

#include <random>

#include "tpf/grid.hpp"
#include "tpf/kernels.hpp"

namespace {

struct Setup {
  tpf::GridPtr grid;
  tpf::CellField c;
  tpf::FaceField coef;
  tpf::CellField out;

  explicit Setup(int n, int dim) {
    const std::array<int, 3> cells{n, n, dim == 3 ? n : 1};
    grid = tpf::make_grid(tpf::GridSpec(dim, cells, 1.0 / n));
    c = tpf::CellField(grid);
    coef = tpf::FaceField(grid);
    out = tpf::CellField(grid);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (double& v : c.values()) v = u(rng);
    for (int a = 0; a < dim; ++a)
      for (double& v : coef.axis(a)) v = u(rng);
  }
};

void BM_FluxLaplacianOmp(benchmark::State& st) {
  Setup s(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
  for (auto _ : st) {
    tpf::kernels::flux_laplacian_omp(*s.grid, s.coef, s.c.values(), s.out.values());
    benchmark::DoNotOptimize(s.out.values().data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<int64_t>(s.grid->num_cells()));
}

void BM_FluxLaplacianSerial(benchmark::State& st) {
  Setup s(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
  for (auto _ : st) {
    tpf::kernels::flux_laplacian_serial(*s.grid, s.coef, s.c.values(), s.out.values());
    benchmark::DoNotOptimize(s.out.values().data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<int64_t>(s.grid->num_cells()));
}

void BM_GradientOmp(benchmark::State& st) {
  Setup s(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
  for (auto _ : st) {
    tpf::kernels::gradient_omp(*s.grid, s.c.values(), s.coef);
    benchmark::DoNotOptimize(s.coef.axis(0).data());
  }
}

void BM_GradientSerial(benchmark::State& st) {
  Setup s(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
  for (auto _ : st) {
    tpf::kernels::gradient_serial(*s.grid, s.c.values(), s.coef);
    benchmark::DoNotOptimize(s.coef.axis(0).data());
  }
}

void BM_DivergenceOmp(benchmark::State& st) {
  Setup s(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
  for (auto _ : st) {
    tpf::kernels::divergence_omp(*s.grid, s.coef, s.out.values());
    benchmark::DoNotOptimize(s.out.values().data());
  }
}

void BM_DivergenceSerial(benchmark::State& st) {
  Setup s(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
  for (auto _ : st) {
    tpf::kernels::divergence_serial(*s.grid, s.coef, s.out.values());
    benchmark::DoNotOptimize(s.out.values().data());
  }
}

void sizes(benchmark::internal::Benchmark* b) {
  b->Args({64, 2})->Args({256, 2})->Args({1024, 2})->Args({20, 3})->Args({64, 3});
}

}  // namespace

BENCHMARK(BM_FluxLaplacianOmp)->Apply(sizes);
BENCHMARK(BM_FluxLaplacianSerial)->Apply(sizes);
BENCHMARK(BM_GradientOmp)->Apply(sizes);
BENCHMARK(BM_GradientSerial)->Apply(sizes);
BENCHMARK(BM_DivergenceOmp)->Apply(sizes);
BENCHMARK(BM_DivergenceSerial)->Apply(sizes);

BENCHMARK_MAIN();
