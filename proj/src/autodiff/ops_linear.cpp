#include <memory>

#include "tpmtl/autodiff/ops.hpp"
#include "tpmtl/core/error.hpp"
#include "tpmtl/kernels/kernels.hpp"

namespace tpmtl {

namespace kn = kernels;

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw DimensionError("matmul: inner dimensions differ: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  Recorder rec("matmul", {&a, &b});
  const int M = static_cast<int>(a.dim(0)), K = static_cast<int>(a.dim(1)),
            N = static_cast<int>(b.dim(1));
  std::vector<double> out(static_cast<std::size_t>(M) * N);
  kn::gemm_nn(M, N, K, a.data(), b.data(), out, false);
  return rec.emit({a.dim(0), b.dim(1)}, std::move(out), [a, b, M, N, K](Tape& t, std::span<const double> g) {
    if (auto ga = t.grad_sink(a); !ga.empty()) kn::gemm_nt(M, K, N, g, b.data(), ga, true);
    if (auto gb = t.grad_sink(b); !gb.empty()) kn::gemm_tn(M, N, K, a.data(), g, gb, true);
  });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0))
    throw DimensionError("linear: input " + shape_str(x.shape()) + " vs weight " + shape_str(w.shape()));
  if (b.numel() != w.dim(1))
    throw DimensionError("linear: bias " + shape_str(b.shape()) + " vs weight " + shape_str(w.shape()));
  Recorder rec("linear", {&x, &w, &b});
  const int N = static_cast<int>(x.dim(0)), K = static_cast<int>(x.dim(1)),
            M = static_cast<int>(w.dim(1));
  std::vector<double> out(static_cast<std::size_t>(N) * M);
  auto bd = b.data();
  for (int n = 0; n < N; ++n)
    for (int m = 0; m < M; ++m) out[static_cast<std::size_t>(n) * M + m] = bd[m];
  kn::gemm_nn(N, M, K, x.data(), w.data(), out, true);
  return rec.emit({x.dim(0), w.dim(1)}, std::move(out), [x, w, b, N, K, M](Tape& t, std::span<const double> g) {
    if (auto gx = t.grad_sink(x); !gx.empty()) kn::gemm_nt(N, K, M, g, w.data(), gx, true);
    if (auto gw = t.grad_sink(w); !gw.empty()) kn::gemm_tn(N, M, K, x.data(), g, gw, true);
    if (auto gb = t.grad_sink(b); !gb.empty())
      for (int n = 0; n < N; ++n)
        for (int m = 0; m < M; ++m) gb[m] += g[static_cast<std::size_t>(n) * M + m];
  });
}

Tensor linear_leaky_relu(const Tensor& x, const Tensor& w, const Tensor& b, double slope) {
  if (!(slope > 0.0)) throw DimensionError("linear_leaky_relu: slope must be positive");
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0))
    throw DimensionError("linear_leaky_relu: input " + shape_str(x.shape()) + " vs weight " + shape_str(w.shape()));
  if (b.numel() != w.dim(1))
    throw DimensionError("linear_leaky_relu: bias " + shape_str(b.shape()) + " vs weight " + shape_str(w.shape()));
  Recorder rec("linear_leaky_relu", {&x, &w, &b});
  const int N = static_cast<int>(x.dim(0)), K = static_cast<int>(x.dim(1)),
            M = static_cast<int>(w.dim(1));
  auto out = std::make_shared<std::vector<double>>(static_cast<std::size_t>(N) * M);
  auto bd = b.data();
  for (int n = 0; n < N; ++n)
    for (int m = 0; m < M; ++m) (*out)[static_cast<std::size_t>(n) * M + m] = bd[m];
  kn::gemm_nn(N, M, K, x.data(), w.data(), *out, true);
  for (double& v : *out) v = v >= 0 ? v : slope * v;
  Shape shape{x.dim(0), w.dim(1)};
  if (!rec) return Tensor(std::move(shape), std::move(*out));
  // a positive slope preserves sign, so the output alone fixes the derivative
  return rec.emit(std::move(shape), out, [x, w, b, out, slope, N, K, M](Tape& t, std::span<const double> g) {
    std::vector<double> gpre(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) gpre[i] = (*out)[i] >= 0 ? g[i] : slope * g[i];
    if (auto gx = t.grad_sink(x); !gx.empty()) kn::gemm_nt(N, K, M, gpre, w.data(), gx, true);
    if (auto gw = t.grad_sink(w); !gw.empty()) kn::gemm_tn(N, M, K, x.data(), gpre, gw, true);
    if (auto gb = t.grad_sink(b); !gb.empty())
      for (int n = 0; n < N; ++n)
        for (int m = 0; m < M; ++m) gb[m] += gpre[static_cast<std::size_t>(n) * M + m];
  });
}

Tensor conv2d_3x3(const Tensor& x, const Tensor& w, const Tensor& b) {
  const bool batched = x.rank() == 4;
  if (!batched && x.rank() != 3) throw DimensionError("conv2d_3x3: input must be [C,H,W] or [B,C,H,W]");
  const std::size_t off = batched ? 1 : 0;
  const int B = batched ? static_cast<int>(x.dim(0)) : 1;
  const int C = static_cast<int>(x.dim(off)), H = static_cast<int>(x.dim(off + 1)),
            W = static_cast<int>(x.dim(off + 2));
  if (w.rank() != 4 || w.dim(2) != 3 || w.dim(3) != 3)
    throw DimensionError("conv2d_3x3: weight must be [Cout,Cin,3,3], got " + shape_str(w.shape()));
  if (static_cast<int>(w.dim(1)) != C)
    throw DimensionError("conv2d_3x3: channel mismatch, input " + shape_str(x.shape()) + " weight " +
                         shape_str(w.shape()));
  const int Co = static_cast<int>(w.dim(0));
  if (static_cast<int>(b.numel()) != Co)
    throw DimensionError("conv2d_3x3: bias " + shape_str(b.shape()) + " for " + std::to_string(Co) + " outputs");

  Recorder rec("conv2d_3x3", {&x, &w, &b});
  const int HW = H * W, C9 = C * 9;
  const std::size_t col_size = static_cast<std::size_t>(C9) * HW;
  auto cols = std::make_shared<std::vector<double>>(col_size * B);
  std::vector<double> out(static_cast<std::size_t>(B) * Co * HW);
  auto bd = b.data();
  for (int n = 0; n < B; ++n) {
    std::span<double> col(cols->data() + n * col_size, col_size);
    kn::im2col_3x3(C, H, W, x.data().subspan(static_cast<std::size_t>(n) * C * HW, static_cast<std::size_t>(C) * HW), col);
    std::span<double> o(out.data() + static_cast<std::size_t>(n) * Co * HW, static_cast<std::size_t>(Co) * HW);
    for (int co = 0; co < Co; ++co) std::fill(o.begin() + co * HW, o.begin() + (co + 1) * HW, bd[co]);
    kn::gemm_nn(Co, HW, C9, w.data(), col, o, true);
  }
  Shape shape = batched ? Shape{x.dim(0), static_cast<std::size_t>(Co), x.dim(2), x.dim(3)}
                        : Shape{static_cast<std::size_t>(Co), x.dim(1), x.dim(2)};
  if (!rec) return Tensor(std::move(shape), std::move(out));
  return rec.emit(std::move(shape), std::move(out),
                  [x, w, b, cols, B, C, H, W, Co, HW, C9, col_size](Tape& t, std::span<const double> g) {
    auto gx = t.grad_sink(x);
    auto gw = t.grad_sink(w);
    auto gb = t.grad_sink(b);
    std::vector<double> gcol(gx.empty() ? 0 : col_size);
    for (int n = 0; n < B; ++n) {
      auto go = g.subspan(static_cast<std::size_t>(n) * Co * HW, static_cast<std::size_t>(Co) * HW);
      std::span<const double> col(cols->data() + n * col_size, col_size);
      if (!gw.empty()) kn::gemm_nt(Co, C9, HW, go, col, gw, true);
      if (!gb.empty())
        for (int co = 0; co < Co; ++co)
          for (int i = 0; i < HW; ++i) gb[co] += go[static_cast<std::size_t>(co) * HW + i];
      if (!gx.empty()) {
        kn::gemm_tn(Co, HW, C9, w.data(), go, gcol, false);
        kn::col2im_3x3(C, H, W, gcol, gx.subspan(static_cast<std::size_t>(n) * C * HW, static_cast<std::size_t>(C) * HW));
      }
    }
  });
}

Tensor avg_pool2x2(const Tensor& x) {
  if (x.rank() < 2) throw DimensionError("avg_pool2x2 needs at least 2 dims");
  const std::size_t H = x.shape()[x.rank() - 2], W = x.shape().back();
  if (H % 2 || W % 2) throw DimensionError("avg_pool2x2: odd spatial size " + shape_str(x.shape()));
  Recorder rec("avg_pool2x2", {&x});
  const std::size_t planes = x.numel() / (H * W), Ho = H / 2, Wo = W / 2;
  Shape shape = x.shape();
  shape[shape.size() - 2] = Ho;
  shape.back() = Wo;
  auto xd = x.data();
  std::vector<double> out(planes * Ho * Wo);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t i = 0; i < Ho; ++i)
      for (std::size_t j = 0; j < Wo; ++j) {
        const double* s = xd.data() + p * H * W + 2 * i * W + 2 * j;
        out[(p * Ho + i) * Wo + j] = 0.25 * (s[0] + s[1] + s[W] + s[W + 1]);
      }
  return rec.emit(std::move(shape), std::move(out), [x, planes, H, W, Ho, Wo](Tape& t, std::span<const double> g) {
    auto gx = t.grad_sink(x);
    for (std::size_t p = 0; p < planes; ++p)
      for (std::size_t i = 0; i < Ho; ++i)
        for (std::size_t j = 0; j < Wo; ++j) {
          const double v = 0.25 * g[(p * Ho + i) * Wo + j];
          double* d = gx.data() + p * H * W + 2 * i * W + 2 * j;
          d[0] += v;
          d[1] += v;
          d[W] += v;
          d[W + 1] += v;
        }
  });
}

Tensor upsample_nearest(const Tensor& x, int factor) {
  if (x.rank() < 2 || factor < 1) throw DimensionError("upsample_nearest: bad input or factor");
  Recorder rec("upsample_nearest", {&x});
  const std::size_t H = x.shape()[x.rank() - 2], W = x.shape().back();
  const std::size_t f = static_cast<std::size_t>(factor), Ho = H * f, Wo = W * f;
  const std::size_t planes = x.numel() / (H * W);
  Shape shape = x.shape();
  shape[shape.size() - 2] = Ho;
  shape.back() = Wo;
  auto xd = x.data();
  std::vector<double> out(planes * Ho * Wo);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t i = 0; i < Ho; ++i)
      for (std::size_t j = 0; j < Wo; ++j) out[(p * Ho + i) * Wo + j] = xd[(p * H + i / f) * W + j / f];
  return rec.emit(std::move(shape), std::move(out), [x, planes, H, W, Ho, Wo, f](Tape& t, std::span<const double> g) {
    auto gx = t.grad_sink(x);
    for (std::size_t p = 0; p < planes; ++p)
      for (std::size_t i = 0; i < Ho; ++i)
        for (std::size_t j = 0; j < Wo; ++j) gx[(p * H + i / f) * W + j / f] += g[(p * Ho + i) * Wo + j];
  });
}

}  // namespace tpmtl
