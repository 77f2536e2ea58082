#include <gtest/gtest.h>

#include "support/random_tensor.hpp"
#include "tpmtl/kernels/kernels.hpp"

namespace tpmtl {
namespace {

using testing::max_abs_diff;

std::vector<double> random_vec(std::size_t n, Rng& rng, double lo = -1, double hi = 1) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

TEST(KernelsTest, GemmVariantsMatchReference) {
  Rng rng(3);
  const int dims[][3] = {{1, 1, 1}, {5, 7, 3}, {33, 17, 9}, {64, 64, 64}, {130, 6, 64}, {4, 16, 1}, {9, 40, 300},
                         {40, 12, 64}, {37, 29, 20}, {300, 3, 12}};
  for (const auto& d : dims) {
    const int M = d[0], N = d[1], K = d[2];
    auto A = random_vec(static_cast<std::size_t>(M) * K, rng);
    auto B = random_vec(static_cast<std::size_t>(K) * N, rng);
    auto C0 = random_vec(static_cast<std::size_t>(M) * N, rng);
    for (bool acc : {false, true}) {
      auto c_fast = C0, c_ref = C0;
      kernels::gemm_nn(M, N, K, A, B, c_fast, acc);
      kernels::reference::gemm_nn(M, N, K, A, B, c_ref, acc);
      EXPECT_LT(max_abs_diff(c_fast, c_ref), 1e-12) << M << "x" << N << "x" << K;
    }
    // A^T B with A[K' x M'] reinterpreted: use A as [M x K], B2 as [M x N]
    auto B2 = random_vec(static_cast<std::size_t>(M) * N, rng);
    std::vector<double> t_fast(static_cast<std::size_t>(K) * N), t_ref(t_fast.size());
    kernels::gemm_tn(M, N, K, A, B2, t_fast, false);
    kernels::reference::gemm_tn(M, N, K, A, B2, t_ref, false);
    EXPECT_LT(max_abs_diff(t_fast, t_ref), 1e-12);

    auto B3 = random_vec(static_cast<std::size_t>(N) * K, rng);
    std::vector<double> n_fast(static_cast<std::size_t>(M) * N), n_ref(n_fast.size());
    kernels::gemm_nt(M, N, K, A, B3, n_fast, false);
    kernels::reference::gemm_nt(M, N, K, A, B3, n_ref, false);
    EXPECT_LT(max_abs_diff(n_fast, n_ref), 1e-12);
  }
}

TEST(KernelsTest, Im2colRoundTripMatchesReference) {
  Rng rng(5);
  const int C = 3, H = 7, W = 5;
  auto x = random_vec(C * H * W, rng);
  std::vector<double> a(C * 9 * H * W), b(a.size());
  kernels::im2col_3x3(C, H, W, x, a);
  kernels::reference::im2col_3x3(C, H, W, x, b);
  EXPECT_EQ(a, b);
  std::vector<double> ga(x.size(), 0.0), gb(x.size(), 0.0);
  kernels::col2im_3x3(C, H, W, a, ga);
  kernels::reference::col2im_3x3(C, H, W, b, gb);
  EXPECT_LT(max_abs_diff(ga, gb), 1e-14);
  // Interior pixels receive all 9 taps.
  EXPECT_NEAR(ga[1 * H * W + 3 * W + 2], 9 * x[1 * H * W + 3 * W + 2], 1e-12);
}

TEST(KernelsTest, BilinearMatchesReference) {
  Rng rng(7);
  const int R = 9, Ch = 13, N = 500;
  auto plane = random_vec(R * R * Ch, rng);
  auto uv = random_vec(2 * N, rng, -1.2, 1.2);
  std::vector<double> a(N * Ch), b(N * Ch);
  kernels::bilinear_forward(R, Ch, plane, N, uv, a);
  kernels::reference::bilinear_forward(R, Ch, plane, N, uv, b);
  EXPECT_LT(max_abs_diff(a, b), 1e-15);

  auto g = random_vec(N * Ch, rng);
  std::vector<double> gp_a(plane.size(), 0), gp_b(plane.size(), 0), guv_a(uv.size(), 0), guv_b(uv.size(), 0);
  kernels::bilinear_backward(R, Ch, plane, N, uv, g, gp_a, guv_a);
  kernels::reference::bilinear_backward(R, Ch, plane, N, uv, g, gp_b, guv_b);
  EXPECT_LT(max_abs_diff(gp_a, gp_b), 1e-13);
  EXPECT_LT(max_abs_diff(guv_a, guv_b), 1e-13);
}

TEST(KernelsTest, CompositeMatchesReference) {
  Rng rng(11);
  const int P = 300, S = 17;
  auto sigma = random_vec(P * S, rng, 0, 20);
  auto delta = random_vec(P * S, rng, 0.01, 0.2);
  std::vector<double> a(P * S), b(P * S);
  kernels::composite_forward(P, S, sigma, delta, a);
  kernels::reference::composite_forward(P, S, sigma, delta, b);
  EXPECT_EQ(a, b);
  auto g = random_vec(P * S, rng);
  std::vector<double> ga(P * S, 0), gb(P * S, 0);
  kernels::composite_backward(P, S, sigma, delta, g, ga);
  kernels::reference::composite_backward(P, S, sigma, delta, g, gb);
  EXPECT_LT(max_abs_diff(ga, gb), 1e-14);
}

TEST(KernelsTest, BilinearTapClampsOutsideCube) {
  const auto inside = kernels::bilinear_tap(5, 0.0, 0.0);
  EXPECT_EQ(inside.j0, 2);
  EXPECT_DOUBLE_EQ(inside.fx, 0.0);
  EXPECT_DOUBLE_EQ(inside.du, 2.0);
  const auto outside = kernels::bilinear_tap(5, 3.0, -4.0);
  EXPECT_EQ(outside.j1, 4);
  EXPECT_DOUBLE_EQ(outside.fx, 1.0);
  EXPECT_EQ(outside.i0, 0);
  EXPECT_DOUBLE_EQ(outside.fy, 0.0);
  EXPECT_DOUBLE_EQ(outside.du, 0.0);
  EXPECT_DOUBLE_EQ(outside.dv, 0.0);
}

}  // namespace
}  // namespace tpmtl
