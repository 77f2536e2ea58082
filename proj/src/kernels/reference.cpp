#include <algorithm>
#include <cmath>
#include <vector>

#include "tpmtl/kernels/kernels.hpp"

namespace tpmtl::kernels::reference {

void gemm_nn(int M, int N, int K, std::span<const double> A, std::span<const double> B,
             std::span<double> C, bool accumulate) {
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < N; ++j) {
      double acc = 0.0;
      for (int k = 0; k < K; ++k) acc += A[i * K + k] * B[k * N + j];
      C[i * N + j] = accumulate ? C[i * N + j] + acc : acc;
    }
  }
}

void gemm_tn(int M, int N, int K, std::span<const double> A, std::span<const double> B,
             std::span<double> C, bool accumulate) {
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < N; ++j) {
      double acc = 0.0;
      for (int m = 0; m < M; ++m) acc += A[m * K + k] * B[m * N + j];
      C[k * N + j] = accumulate ? C[k * N + j] + acc : acc;
    }
  }
}

void gemm_nt(int M, int N, int K, std::span<const double> A, std::span<const double> B,
             std::span<double> C, bool accumulate) {
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < N; ++j) {
      double acc = 0.0;
      for (int k = 0; k < K; ++k) acc += A[i * K + k] * B[j * K + k];
      C[i * N + j] = accumulate ? C[i * N + j] + acc : acc;
    }
  }
}

void im2col_3x3(int C, int H, int W, std::span<const double> x, std::span<double> cols) {
  const int HW = H * W;
  for (int c = 0; c < C; ++c)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const int row = (c * 9 + ky * 3 + kx) * HW;
        for (int y = 0; y < H; ++y)
          for (int xx = 0; xx < W; ++xx) {
            const int sy = y + ky - 1, sx = xx + kx - 1;
            const bool inside = sy >= 0 && sy < H && sx >= 0 && sx < W;
            cols[row + y * W + xx] = inside ? x[c * HW + sy * W + sx] : 0.0;
          }
      }
}

void col2im_3x3(int C, int H, int W, std::span<const double> cols, std::span<double> gx) {
  const int HW = H * W;
  for (int c = 0; c < C; ++c)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const int row = (c * 9 + ky * 3 + kx) * HW;
        for (int y = 0; y < H; ++y)
          for (int xx = 0; xx < W; ++xx) {
            const int sy = y + ky - 1, sx = xx + kx - 1;
            if (sy >= 0 && sy < H && sx >= 0 && sx < W)
              gx[c * HW + sy * W + sx] += cols[row + y * W + xx];
          }
      }
}

void bilinear_forward(int R, int Ch, std::span<const double> plane, int N,
                      std::span<const double> uv, std::span<double> out) {
  for (int n = 0; n < N; ++n) {
    const BilinearTap t = bilinear_tap(R, uv[2 * n], uv[2 * n + 1]);
    for (int c = 0; c < Ch; ++c) {
      const double v00 = plane[(t.i0 * R + t.j0) * Ch + c];
      const double v01 = plane[(t.i0 * R + t.j1) * Ch + c];
      const double v10 = plane[(t.i1 * R + t.j0) * Ch + c];
      const double v11 = plane[(t.i1 * R + t.j1) * Ch + c];
      out[n * Ch + c] = (1 - t.fy) * ((1 - t.fx) * v00 + t.fx * v01) +
                        t.fy * ((1 - t.fx) * v10 + t.fx * v11);
    }
  }
}

void bilinear_backward(int R, int Ch, std::span<const double> plane, int N,
                       std::span<const double> uv, std::span<const double> gout,
                       std::span<double> gplane, std::span<double> guv) {
  for (int n = 0; n < N; ++n) {
    const BilinearTap t = bilinear_tap(R, uv[2 * n], uv[2 * n + 1]);
    double gu = 0.0, gv = 0.0;
    for (int c = 0; c < Ch; ++c) {
      const double g = gout[n * Ch + c];
      if (!gplane.empty()) {
        gplane[(t.i0 * R + t.j0) * Ch + c] += g * (1 - t.fy) * (1 - t.fx);
        gplane[(t.i0 * R + t.j1) * Ch + c] += g * (1 - t.fy) * t.fx;
        gplane[(t.i1 * R + t.j0) * Ch + c] += g * t.fy * (1 - t.fx);
        gplane[(t.i1 * R + t.j1) * Ch + c] += g * t.fy * t.fx;
      }
      const double v00 = plane[(t.i0 * R + t.j0) * Ch + c];
      const double v01 = plane[(t.i0 * R + t.j1) * Ch + c];
      const double v10 = plane[(t.i1 * R + t.j0) * Ch + c];
      const double v11 = plane[(t.i1 * R + t.j1) * Ch + c];
      gu += g * ((1 - t.fy) * (v01 - v00) + t.fy * (v11 - v10));
      gv += g * ((1 - t.fx) * (v10 - v00) + t.fx * (v11 - v01));
    }
    if (!guv.empty()) {
      guv[2 * n] += gu * t.du;
      guv[2 * n + 1] += gv * t.dv;
    }
  }
}

void composite_forward(int P, int S, std::span<const double> sigma,
                       std::span<const double> delta, std::span<double> weights) {
  for (int p = 0; p < P; ++p) {
    double optical = 0.0;
    for (int s = 0; s < S; ++s) {
      const int i = p * S + s;
      const double tau = sigma[i] * delta[i];
      weights[i] = std::exp(-optical) * -std::expm1(-tau);
      optical += tau;
    }
  }
}

void composite_backward(int P, int S, std::span<const double> sigma,
                        std::span<const double> delta, std::span<const double> gweights,
                        std::span<double> gsigma) {
  std::vector<double> w(S), prefix(S + 1);
  for (int p = 0; p < P; ++p) {
    prefix[0] = 0.0;
    for (int s = 0; s < S; ++s) {
      const int i = p * S + s;
      const double tau = sigma[i] * delta[i];
      w[s] = std::exp(-prefix[s]) * -std::expm1(-tau);
      prefix[s + 1] = prefix[s] + tau;
    }
    // d w_i / d sigma_k = delta_k T_{k+1} [i == k] - delta_k w_i [i > k]
    double tail = 0.0;
    for (int s = S - 1; s >= 0; --s) {
      const int i = p * S + s;
      gsigma[i] += delta[i] * (std::exp(-prefix[s + 1]) * gweights[i] - tail);
      tail += gweights[i] * w[s];
    }
  }
}

}  // namespace tpmtl::kernels::reference
