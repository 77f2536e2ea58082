#include <algorithm>
#include <cmath>
#include <vector>

#include "tpmtl/kernels/kernels.hpp"

namespace tpmtl::kernels {

namespace {

constexpr long kParallelWork = 1L << 15;

// Register-blocked update of an RB x JB tile of C. Element (r, k) of the
// left operand lives at a[r * a_rs + k * a_ks]; row k of the right operand
// starts at b + k * ldb. Each C element sums over k in ascending order, the
// same order the reference kernels use.
template <int RB, int JB>
inline void tile(int K, const double* a, long a_rs, long a_ks, const double* b, long ldb,
                 double* c, long ldc, bool accumulate) {
  double acc[RB][JB] = {};
  for (int k = 0; k < K; ++k) {
    const double* brow = b + k * ldb;
    for (int r = 0; r < RB; ++r) {
      const double av = a[r * a_rs + k * a_ks];
#pragma omp simd
      for (int j = 0; j < JB; ++j) acc[r][j] += av * brow[j];
    }
  }
  for (int r = 0; r < RB; ++r)
    for (int j = 0; j < JB; ++j)
      c[r * ldc + j] = accumulate ? c[r * ldc + j] + acc[r][j] : acc[r][j];
}

inline void tile_generic(int rb, int jb, int K, const double* a, long a_rs, long a_ks,
                         const double* b, long ldb, double* c, long ldc, bool accumulate) {
  for (int r = 0; r < rb; ++r)
    for (int j = 0; j < jb; ++j) {
      double acc = 0.0;
      for (int k = 0; k < K; ++k) acc += a[r * a_rs + k * a_ks] * b[k * ldb + j];
      c[r * ldc + j] = accumulate ? c[r * ldc + j] + acc : acc;
    }
}

// Narrow outputs (N < 8): dot products against a transposed right operand,
// with eight explicit partial-sum lanes so the reduction vectorizes without
// reassociation.
void narrow_product(int rows, int N, int K, const double* A, long a_rs, long a_ks, const double* B,
                    double* C, bool accumulate) {
  std::vector<double> bt(static_cast<std::size_t>(N) * K);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < N; ++j) bt[static_cast<std::size_t>(j) * K + k] = B[static_cast<long>(k) * N + j];
  const long work = static_cast<long>(rows) * N * K;
#pragma omp parallel if (work > kParallelWork)
  {
    std::vector<double> arow(K);
#pragma omp for schedule(static)
    for (int r = 0; r < rows; ++r) {
      const double* a = A + r * a_rs;
      for (int k = 0; k < K; ++k) arow[k] = a[k * a_ks];
      for (int j = 0; j < N; ++j) {
        const double* b = bt.data() + static_cast<std::size_t>(j) * K;
        double lane[8] = {};
        int k = 0;
        for (; k + 8 <= K; k += 8)
#pragma omp simd
          for (int l = 0; l < 8; ++l) lane[l] += arow[k + l] * b[k + l];
        double acc = ((lane[0] + lane[1]) + (lane[2] + lane[3])) + ((lane[4] + lane[5]) + (lane[6] + lane[7]));
        for (; k < K; ++k) acc += arow[k] * b[k];
        double& c = C[static_cast<long>(r) * N + j];
        c = accumulate ? c + acc : acc;
      }
    }
  }
}

// C[rows x N] = op(A) * B where op(A)(r, k) = A[r * a_rs + k * a_ks].
// The reduction dimension is processed in panels of kPanel so the active
// slice of B stays cache resident; each C element adds panel partial sums
// in ascending order.
void blocked_product(int rows, int N, int K, const double* A, long a_rs, long a_ks,
                     const double* B, double* C, bool accumulate) {
  if (N < 8) {
    narrow_product(rows, N, K, A, a_rs, a_ks, B, C, accumulate);
    return;
  }
  constexpr int RB = 4;
  constexpr int JB = 16;
  constexpr int kPanel = 256;
  const int row_blocks = (rows + RB - 1) / RB;
  const long work = static_cast<long>(rows) * N * K;
  for (int k0 = 0; k0 < std::max(K, 1); k0 += kPanel) {
    const int kb = std::min(kPanel, K - k0);
    const bool acc_panel = accumulate || k0 > 0;
#pragma omp parallel for schedule(static) if (work > kParallelWork)
    for (int rbk = 0; rbk < row_blocks; ++rbk) {
      const int r0 = rbk * RB;
      const int rb = std::min(RB, rows - r0);
      const double* a = A + r0 * a_rs + k0 * a_ks;
      const double* b = B + static_cast<long>(k0) * N;
      for (int j0 = 0; j0 < N;) {
        const int jb = N - j0;
        double* c = C + static_cast<long>(r0) * N + j0;
        const double* bj = b + j0;
        if (rb != RB) {
          tile_generic(rb, std::min(JB, jb), kb, a, a_rs, a_ks, bj, N, c, N, acc_panel);
          j0 += std::min(JB, jb);
        } else if (jb >= JB) {
          tile<RB, JB>(kb, a, a_rs, a_ks, bj, N, c, N, acc_panel);
          j0 += JB;
        } else if (jb >= 8) {
          tile<RB, 8>(kb, a, a_rs, a_ks, bj, N, c, N, acc_panel);
          j0 += 8;
        } else if (jb >= 4) {
          tile<RB, 4>(kb, a, a_rs, a_ks, bj, N, c, N, acc_panel);
          j0 += 4;
        } else {
          tile<RB, 1>(kb, a, a_rs, a_ks, bj, N, c, N, acc_panel);
          j0 += 1;
        }
      }
    }
  }
}

}  // namespace

void gemm_nn(int M, int N, int K, std::span<const double> A, std::span<const double> B,
             std::span<double> C, bool accumulate) {
  blocked_product(M, N, K, A.data(), K, 1, B.data(), C.data(), accumulate);
}

void gemm_tn(int M, int N, int K, std::span<const double> A, std::span<const double> B,
             std::span<double> C, bool accumulate) {
  if (N < 8) {
    // stream rows of A and B once; each output still sums over rows in order
    std::vector<double> acc(static_cast<std::size_t>(K) * N, 0.0);
    for (int r = 0; r < M; ++r) {
      const double* a = A.data() + static_cast<long>(r) * K;
      const double* b = B.data() + static_cast<long>(r) * N;
      for (int k = 0; k < K; ++k)
        for (int j = 0; j < N; ++j) acc[static_cast<std::size_t>(k) * N + j] += a[k] * b[j];
    }
    for (std::size_t i = 0; i < acc.size(); ++i) C[i] = accumulate ? C[i] + acc[i] : acc[i];
    return;
  }
  // output row k reads column k of A
  blocked_product(K, N, M, A.data(), 1, K, B.data(), C.data(), accumulate);
}

void gemm_nt(int M, int N, int K, std::span<const double> A, std::span<const double> B,
             std::span<double> C, bool accumulate) {
  std::vector<double> bt(static_cast<std::size_t>(K) * N);
  for (int j = 0; j < N; ++j)
    for (int k = 0; k < K; ++k) bt[static_cast<std::size_t>(k) * N + j] = B[j * K + k];
  blocked_product(M, N, K, A.data(), K, 1, bt.data(), C.data(), accumulate);
}

void im2col_3x3(int C, int H, int W, std::span<const double> x, std::span<double> cols) {
  const int HW = H * W;
#pragma omp parallel for schedule(static) if (static_cast<long>(C) * HW * 9 > kParallelWork)
  for (int ck = 0; ck < C * 9; ++ck) {
    const int c = ck / 9, ky = (ck % 9) / 3, kx = ck % 3;
    double* dst = cols.data() + static_cast<long>(ck) * HW;
    const double* src = x.data() + static_cast<long>(c) * HW;
    for (int y = 0; y < H; ++y) {
      const int sy = y + ky - 1;
      double* drow = dst + y * W;
      if (sy < 0 || sy >= H) {
        std::fill(drow, drow + W, 0.0);
        continue;
      }
      const double* srow = src + sy * W;
      for (int xx = 0; xx < W; ++xx) {
        const int sx = xx + kx - 1;
        drow[xx] = (sx >= 0 && sx < W) ? srow[sx] : 0.0;
      }
    }
  }
}

void col2im_3x3(int C, int H, int W, std::span<const double> cols, std::span<double> gx) {
  const int HW = H * W;
  // channels own disjoint slices of gx; the 9 taps stay in reference order
#pragma omp parallel for schedule(static) if (static_cast<long>(C) * HW * 9 > kParallelWork)
  for (int c = 0; c < C; ++c) {
    double* dst = gx.data() + static_cast<long>(c) * HW;
    for (int k = 0; k < 9; ++k) {
      const int ky = k / 3, kx = k % 3;
      const double* src = cols.data() + static_cast<long>(c * 9 + k) * HW;
      for (int y = 0; y < H; ++y) {
        const int sy = y + ky - 1;
        if (sy < 0 || sy >= H) continue;
        for (int xx = 0; xx < W; ++xx) {
          const int sx = xx + kx - 1;
          if (sx >= 0 && sx < W) dst[sy * W + sx] += src[y * W + xx];
        }
      }
    }
  }
}

void bilinear_forward(int R, int Ch, std::span<const double> plane, int N,
                      std::span<const double> uv, std::span<double> out) {
#pragma omp parallel for schedule(static) if (static_cast<long>(N) * Ch > kParallelWork)
  for (int n = 0; n < N; ++n) {
    const BilinearTap t = bilinear_tap(R, uv[2 * n], uv[2 * n + 1]);
    const double* p00 = plane.data() + (t.i0 * R + t.j0) * Ch;
    const double* p01 = plane.data() + (t.i0 * R + t.j1) * Ch;
    const double* p10 = plane.data() + (t.i1 * R + t.j0) * Ch;
    const double* p11 = plane.data() + (t.i1 * R + t.j1) * Ch;
    double* o = out.data() + static_cast<long>(n) * Ch;
    const double fx = t.fx, fy = t.fy;
#pragma omp simd
    for (int c = 0; c < Ch; ++c)
      o[c] = (1 - fy) * ((1 - fx) * p00[c] + fx * p01[c]) + fy * ((1 - fx) * p10[c] + fx * p11[c]);
  }
}

void bilinear_backward(int R, int Ch, std::span<const double> plane, int N,
                       std::span<const double> uv, std::span<const double> gout,
                       std::span<double> gplane, std::span<double> guv) {
  const bool big = static_cast<long>(N) * Ch > kParallelWork;
  std::vector<BilinearTap> taps(N);
#pragma omp parallel for schedule(static) if (big)
  for (int n = 0; n < N; ++n) taps[n] = bilinear_tap(R, uv[2 * n], uv[2 * n + 1]);

  if (!gplane.empty()) {
    // Scatter is conflict-free when each thread owns a channel band; points
    // are visited in ascending order within a band.
    const int threads = big ? max_threads() : 1;
    const int band_width = std::max(8, (Ch + threads - 1) / threads);
    const int bands = (Ch + band_width - 1) / band_width;
#pragma omp parallel for schedule(static) if (big)
    for (int band = 0; band < bands; ++band) {
      const int c0 = band * band_width, c1 = std::min(Ch, c0 + band_width);
      for (int n = 0; n < N; ++n) {
        const BilinearTap& t = taps[n];
        const double w00 = (1 - t.fy) * (1 - t.fx), w01 = (1 - t.fy) * t.fx;
        const double w10 = t.fy * (1 - t.fx), w11 = t.fy * t.fx;
        double* q00 = gplane.data() + (t.i0 * R + t.j0) * Ch;
        double* q01 = gplane.data() + (t.i0 * R + t.j1) * Ch;
        double* q10 = gplane.data() + (t.i1 * R + t.j0) * Ch;
        double* q11 = gplane.data() + (t.i1 * R + t.j1) * Ch;
        const double* g = gout.data() + static_cast<long>(n) * Ch;
        for (int c = c0; c < c1; ++c) {
          q00[c] += g[c] * w00;
          q01[c] += g[c] * w01;
          q10[c] += g[c] * w10;
          q11[c] += g[c] * w11;
        }
      }
    }
  }

  if (!guv.empty()) {
#pragma omp parallel for schedule(static) if (big)
    for (int n = 0; n < N; ++n) {
      const BilinearTap& t = taps[n];
      const double* p00 = plane.data() + (t.i0 * R + t.j0) * Ch;
      const double* p01 = plane.data() + (t.i0 * R + t.j1) * Ch;
      const double* p10 = plane.data() + (t.i1 * R + t.j0) * Ch;
      const double* p11 = plane.data() + (t.i1 * R + t.j1) * Ch;
      const double* g = gout.data() + static_cast<long>(n) * Ch;
      double gu = 0.0, gv = 0.0;
      for (int c = 0; c < Ch; ++c) {
        gu += g[c] * ((1 - t.fy) * (p01[c] - p00[c]) + t.fy * (p11[c] - p10[c]));
        gv += g[c] * ((1 - t.fx) * (p10[c] - p00[c]) + t.fx * (p11[c] - p01[c]));
      }
      guv[2 * n] += gu * t.du;
      guv[2 * n + 1] += gv * t.dv;
    }
  }
}

void composite_forward(int P, int S, std::span<const double> sigma,
                       std::span<const double> delta, std::span<double> weights) {
#pragma omp parallel for schedule(static) if (static_cast<long>(P) * S > kParallelWork)
  for (int p = 0; p < P; ++p) {
    double optical = 0.0;
    for (int s = 0; s < S; ++s) {
      const long i = static_cast<long>(p) * S + s;
      const double tau = sigma[i] * delta[i];
      weights[i] = std::exp(-optical) * -std::expm1(-tau);
      optical += tau;
    }
  }
}

void composite_backward(int P, int S, std::span<const double> sigma,
                        std::span<const double> delta, std::span<const double> gweights,
                        std::span<double> gsigma) {
#pragma omp parallel if (static_cast<long>(P) * S > kParallelWork)
  {
    std::vector<double> w(S), prefix(S + 1);
#pragma omp for schedule(static)
    for (int p = 0; p < P; ++p) {
      prefix[0] = 0.0;
      for (int s = 0; s < S; ++s) {
        const long i = static_cast<long>(p) * S + s;
        const double tau = sigma[i] * delta[i];
        w[s] = std::exp(-prefix[s]) * -std::expm1(-tau);
        prefix[s + 1] = prefix[s] + tau;
      }
      double tail = 0.0;
      for (int s = S - 1; s >= 0; --s) {
        const long i = static_cast<long>(p) * S + s;
        gsigma[i] += delta[i] * (std::exp(-prefix[s + 1]) * gweights[i] - tail);
        tail += gweights[i] * w[s];
      }
    }
  }
}

}  // namespace tpmtl::kernels
