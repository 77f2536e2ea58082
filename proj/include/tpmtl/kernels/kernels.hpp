#pragma once

// Dense numeric kernels behind the autodiff primitives.
//
// Every kernel exists twice: `tpmtl::kernels` holds the OpenMP-parallel
// version used by the library, `tpmtl::kernels::reference` holds a plain
// serial loop nest kept for testing and benchmarking. Both produce the same
// per-element summation order, so results agree to rounding (in practice
// bit-for-bit).
//
// Layouts are row-major. Sizes are element counts, not bytes.

#include <cstddef>
#include <span>

namespace tpmtl::kernels {

/// C[M x N] (+)= A[M x K] * B[K x N]
void gemm_nn(int M, int N, int K, std::span<const double> A, std::span<const double> B,
             std::span<double> C, bool accumulate);
/// C[K x N] (+)= A^T * B with A[M x K], B[M x N]
void gemm_tn(int M, int N, int K, std::span<const double> A, std::span<const double> B,
             std::span<double> C, bool accumulate);
/// C[M x N] (+)= A * B^T with A[M x K], B[N x K]
void gemm_nt(int M, int N, int K, std::span<const double> A, std::span<const double> B,
             std::span<double> C, bool accumulate);

/// 3x3, stride 1, zero padding 1. cols is [(C*9) x (H*W)].
void im2col_3x3(int C, int H, int W, std::span<const double> x, std::span<double> cols);
/// Adjoint of im2col_3x3; accumulates into gx.
void col2im_3x3(int C, int H, int W, std::span<const double> cols, std::span<double> gx);

/// Align-corners bilinear lookup into an R x R x Ch plane (row index from v,
/// column index from u), uv in [-1,1]^2 with border clamping.
void bilinear_forward(int R, int Ch, std::span<const double> plane, int N,
                      std::span<const double> uv, std::span<double> out);
/// Accumulates into gplane and guv; either may be empty to skip it.
void bilinear_backward(int R, int Ch, std::span<const double> plane, int N,
                       std::span<const double> uv, std::span<const double> gout,
                       std::span<double> gplane, std::span<double> guv);

/// Emission-absorption quadrature weights w_i = T_i (1 - exp(-sigma_i delta_i)),
/// rays of S samples laid out contiguously.
void composite_forward(int P, int S, std::span<const double> sigma,
                       std::span<const double> delta, std::span<double> weights);
/// Accumulates dL/dsigma given dL/dweights.
void composite_backward(int P, int S, std::span<const double> sigma,
                        std::span<const double> delta, std::span<const double> gweights,
                        std::span<double> gsigma);

namespace reference {

void gemm_nn(int M, int N, int K, std::span<const double> A, std::span<const double> B,
             std::span<double> C, bool accumulate);
void gemm_tn(int M, int N, int K, std::span<const double> A, std::span<const double> B,
             std::span<double> C, bool accumulate);
void gemm_nt(int M, int N, int K, std::span<const double> A, std::span<const double> B,
             std::span<double> C, bool accumulate);
void im2col_3x3(int C, int H, int W, std::span<const double> x, std::span<double> cols);
void col2im_3x3(int C, int H, int W, std::span<const double> cols, std::span<double> gx);
void bilinear_forward(int R, int Ch, std::span<const double> plane, int N,
                      std::span<const double> uv, std::span<double> out);
void bilinear_backward(int R, int Ch, std::span<const double> plane, int N,
                       std::span<const double> uv, std::span<const double> gout,
                       std::span<double> gplane, std::span<double> guv);
void composite_forward(int P, int S, std::span<const double> sigma,
                       std::span<const double> delta, std::span<double> weights);
void composite_backward(int P, int S, std::span<const double> sigma,
                        std::span<const double> delta, std::span<const double> gweights,
                        std::span<double> gsigma);

}  // namespace reference

/// Cell lookup shared by both bilinear implementations.
struct BilinearTap {
  int i0, i1, j0, j1;  // row (v) and column (u) corner indices
  double fy, fx;       // fractional offsets inside the cell
  double du, dv;       // d(pixel coordinate)/d(uv); zero where clamped
};
BilinearTap bilinear_tap(int R, double u, double v);

/// Thread cap applied to all parallel kernels (TPMTL_THREADS).
void set_max_threads(int n);
int max_threads();

}  // namespace tpmtl::kernels
