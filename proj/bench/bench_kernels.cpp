// Parallel kernels vs their serial references at the sizes the training
// loop actually hits (32x32 renders x 32 samples, 64-wide field MLP).
#include <benchmark/benchmark.h>

#include <vector>

#include "tpmtl/core/rng.hpp"
#include "tpmtl/kernels/kernels.hpp"

namespace {

using namespace tpmtl;

std::vector<double> random_vec(std::size_t n, std::uint64_t seed, double lo = -1, double hi = 1) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

template <auto Fn>
void BM_GemmNN(benchmark::State& state) {
  const int M = state.range(0), N = state.range(1), K = state.range(2);
  auto A = random_vec(static_cast<std::size_t>(M) * K, 1), B = random_vec(static_cast<std::size_t>(K) * N, 2);
  std::vector<double> C(static_cast<std::size_t>(M) * N);
  for (auto _ : state) {
    Fn(M, N, K, A, B, C, false);
    benchmark::DoNotOptimize(C.data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(2.0 * M * N * K, benchmark::Counter::kIsIterationInvariantRate,
                                                benchmark::Counter::kIs1000);
}

template <auto Fn>
void BM_GemmTN(benchmark::State& state) {
  const int M = state.range(0), N = state.range(1), K = state.range(2);
  auto A = random_vec(static_cast<std::size_t>(M) * K, 1), B = random_vec(static_cast<std::size_t>(M) * N, 2);
  std::vector<double> C(static_cast<std::size_t>(K) * N);
  for (auto _ : state) {
    Fn(M, N, K, A, B, C, false);
    benchmark::DoNotOptimize(C.data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(2.0 * M * N * K, benchmark::Counter::kIsIterationInvariantRate,
                                                benchmark::Counter::kIs1000);
}

template <auto Fn>
void BM_GemmNT(benchmark::State& state) {
  const int M = state.range(0), N = state.range(1), K = state.range(2);
  auto A = random_vec(static_cast<std::size_t>(M) * K, 1), B = random_vec(static_cast<std::size_t>(N) * K, 2);
  std::vector<double> C(static_cast<std::size_t>(M) * N);
  for (auto _ : state) {
    Fn(M, N, K, A, B, C, false);
    benchmark::DoNotOptimize(C.data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(2.0 * M * N * K, benchmark::Counter::kIsIterationInvariantRate,
                                                benchmark::Counter::kIs1000);
}

template <auto Fwd>
void BM_Bilinear(benchmark::State& state) {
  const int R = 16, Ch = 64, N = state.range(0);
  auto plane = random_vec(R * R * Ch, 3);
  auto uv = random_vec(2 * N, 4);
  std::vector<double> out(static_cast<std::size_t>(N) * Ch);
  for (auto _ : state) {
    Fwd(R, Ch, plane, N, uv, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Bwd>
void BM_BilinearBackward(benchmark::State& state) {
  const int R = 16, Ch = 64, N = state.range(0);
  auto plane = random_vec(R * R * Ch, 3);
  auto uv = random_vec(2 * N, 4);
  auto g = random_vec(static_cast<std::size_t>(N) * Ch, 5);
  std::vector<double> gp(plane.size()), guv(uv.size());
  for (auto _ : state) {
    Bwd(R, Ch, plane, N, uv, g, gp, guv);
    benchmark::DoNotOptimize(gp.data());
  }
}

template <auto Fwd>
void BM_Composite(benchmark::State& state) {
  const int P = state.range(0), S = 32;
  auto sigma = random_vec(static_cast<std::size_t>(P) * S, 6, 0, 10);
  auto delta = random_vec(static_cast<std::size_t>(P) * S, 7, 0.01, 0.1);
  std::vector<double> w(sigma.size());
  for (auto _ : state) {
    Fwd(P, S, sigma, delta, w);
    benchmark::DoNotOptimize(w.data());
  }
}

template <auto Im2col>
void BM_Im2col(benchmark::State& state) {
  const int C = state.range(0), H = state.range(1);
  auto x = random_vec(static_cast<std::size_t>(C) * H * H, 8);
  std::vector<double> cols(static_cast<std::size_t>(C) * 9 * H * H);
  for (auto _ : state) {
    Im2col(C, H, H, x, cols);
    benchmark::DoNotOptimize(cols.data());
  }
}

#define GEMM_ARGS Args({32768, 64, 64})->Args({32768, 6, 64})->Args({64, 1024, 288})->Args({64, 4096, 27})
BENCHMARK(BM_GemmNN<kernels::gemm_nn>)->GEMM_ARGS;
BENCHMARK(BM_GemmNN<kernels::reference::gemm_nn>)->GEMM_ARGS;
BENCHMARK(BM_GemmTN<kernels::gemm_tn>)->Args({32768, 64, 64})->Args({64, 1024, 288});
BENCHMARK(BM_GemmTN<kernels::reference::gemm_tn>)->Args({32768, 64, 64})->Args({64, 1024, 288});
BENCHMARK(BM_GemmNT<kernels::gemm_nt>)->Args({32768, 64, 64})->Args({64, 288, 1024});
BENCHMARK(BM_GemmNT<kernels::reference::gemm_nt>)->Args({32768, 64, 64})->Args({64, 288, 1024});
BENCHMARK(BM_Bilinear<kernels::bilinear_forward>)->Arg(32768);
BENCHMARK(BM_Bilinear<kernels::reference::bilinear_forward>)->Arg(32768);
BENCHMARK(BM_BilinearBackward<kernels::bilinear_backward>)->Arg(32768);
BENCHMARK(BM_BilinearBackward<kernels::reference::bilinear_backward>)->Arg(32768);
BENCHMARK(BM_Composite<kernels::composite_forward>)->Arg(1024);
BENCHMARK(BM_Composite<kernels::reference::composite_forward>)->Arg(1024);
BENCHMARK(BM_Im2col<kernels::im2col_3x3>)->Args({32, 32});
BENCHMARK(BM_Im2col<kernels::reference::im2col_3x3>)->Args({32, 32});

}  // namespace

BENCHMARK_MAIN();
