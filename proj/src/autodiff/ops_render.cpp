#include <algorithm>
#include <cmath>
#include <memory>

#include "tpmtl/autodiff/ops.hpp"
#include "tpmtl/core/error.hpp"
#include "tpmtl/kernels/kernels.hpp"

namespace tpmtl {

Tensor bilinear_sample_2d(const Tensor& plane, const Tensor& uv) {
  if (plane.rank() != 3 || plane.dim(0) != plane.dim(1))
    throw DimensionError("bilinear_sample_2d: plane must be [R,R,C], got " + shape_str(plane.shape()));
  if (uv.rank() != 2 || uv.dim(1) != 2)
    throw DimensionError("bilinear_sample_2d: uv must be [N,2], got " + shape_str(uv.shape()));
  Recorder rec("bilinear_sample_2d", {&plane, &uv});
  const int R = static_cast<int>(plane.dim(0)), Ch = static_cast<int>(plane.dim(2)),
            N = static_cast<int>(uv.dim(0));
  std::vector<double> out(static_cast<std::size_t>(N) * Ch);
  kernels::bilinear_forward(R, Ch, plane.data(), N, uv.data(), out);
  return rec.emit({uv.dim(0), plane.dim(2)}, std::move(out), [plane, uv, R, Ch, N](Tape& t, std::span<const double> g) {
    kernels::bilinear_backward(R, Ch, plane.data(), N, uv.data(), g, t.grad_sink(plane), t.grad_sink(uv));
  });
}

Tensor triplane_sample(const Tensor& xy, const Tensor& yz, const Tensor& xz, const Tensor& points) {
  if (xy.rank() != 3 || xy.dim(0) != xy.dim(1))
    throw DimensionError("triplane_sample: plane must be [R,R,C], got " + shape_str(xy.shape()));
  for (const Tensor* p : {&yz, &xz})
    if (p->shape() != xy.shape())
      throw DimensionError("triplane_sample: planes disagree: " + shape_str(xy.shape()) + " vs " + shape_str(p->shape()));
  if (points.rank() != 2 || points.dim(1) != 3)
    throw DimensionError("triplane_sample: points must be [N,3], got " + shape_str(points.shape()));
  Recorder rec("triplane_sample", {&xy, &yz, &xz, &points});
  const int R = static_cast<int>(xy.dim(0)), Ch = static_cast<int>(xy.dim(2)),
            N = static_cast<int>(points.dim(0));
  // (u, v) coordinate columns of each plane
  static constexpr int axes[3][2] = {{0, 1}, {1, 2}, {0, 2}};
  auto pd = points.data();
  auto uvs = std::make_shared<std::vector<double>>(6 * static_cast<std::size_t>(N));
  for (int p = 0; p < 3; ++p)
    for (int n = 0; n < N; ++n) {
      (*uvs)[(2 * p * N) + 2 * n] = pd[3 * n + axes[p][0]];
      (*uvs)[(2 * p * N) + 2 * n + 1] = pd[3 * n + axes[p][1]];
    }
  auto uv_of = [uvs, N](int p) { return std::span<const double>(uvs->data() + 2 * p * N, 2 * static_cast<std::size_t>(N)); };
  const std::size_t n_out = static_cast<std::size_t>(N) * Ch;
  std::vector<double> out(n_out), part(n_out);
  kernels::bilinear_forward(R, Ch, xy.data(), N, uv_of(0), out);
  kernels::bilinear_forward(R, Ch, yz.data(), N, uv_of(1), part);
  for (std::size_t i = 0; i < n_out; ++i) out[i] += part[i];
  kernels::bilinear_forward(R, Ch, xz.data(), N, uv_of(2), part);
  for (std::size_t i = 0; i < n_out; ++i) out[i] += part[i];
  Shape shape{points.dim(0), xy.dim(2)};
  if (!rec) return Tensor(std::move(shape), std::move(out));
  return rec.emit(std::move(shape), std::move(out), [xy, yz, xz, points, uv_of, R, Ch, N](Tape& t, std::span<const double> g) {
    auto gp = t.grad_sink(points);
    std::vector<double> guv(gp.empty() ? 0 : 2 * static_cast<std::size_t>(N));
    const Tensor* planes[3] = {&xy, &yz, &xz};
    for (int p = 0; p < 3; ++p) {
      std::fill(guv.begin(), guv.end(), 0.0);
      kernels::bilinear_backward(R, Ch, planes[p]->data(), N, uv_of(p), g, t.grad_sink(*planes[p]), guv);
      if (gp.empty()) continue;
      for (int n = 0; n < N; ++n) {
        gp[3 * n + axes[p][0]] += guv[2 * n];
        gp[3 * n + axes[p][1]] += guv[2 * n + 1];
      }
    }
  });
}

namespace {

void check_rays(const char* op, const Tensor& sigma, const Tensor& deltas) {
  if (sigma.rank() != 2 || sigma.shape() != deltas.shape())
    throw DimensionError(std::string(op) + ": sigma " + shape_str(sigma.shape()) + " and deltas " +
                         shape_str(deltas.shape()) + " must both be [P,S]");
}

}  // namespace

Tensor composite_weights(const Tensor& sigma, const Tensor& deltas) {
  check_rays("composite_weights", sigma, deltas);
  Recorder rec("composite_weights", {&sigma});
  const int P = static_cast<int>(sigma.dim(0)), S = static_cast<int>(sigma.dim(1));
  std::vector<double> w(sigma.numel());
  kernels::composite_forward(P, S, sigma.data(), deltas.data(), w);
  return rec.emit(sigma.shape(), std::move(w), [sigma, deltas, P, S](Tape& t, std::span<const double> g) {
    kernels::composite_backward(P, S, sigma.data(), deltas.data(), g, t.grad_sink(sigma));
  });
}

Tensor transmittance_final(const Tensor& sigma, const Tensor& deltas) {
  check_rays("transmittance_final", sigma, deltas);
  Recorder rec("transmittance_final", {&sigma});
  const std::size_t P = sigma.dim(0), S = sigma.dim(1);
  auto sd = sigma.data();
  auto dd = deltas.data();
  std::vector<double> out(P);
  for (std::size_t p = 0; p < P; ++p) {
    double optical = 0.0;
    for (std::size_t s = 0; s < S; ++s) optical += sd[p * S + s] * dd[p * S + s];
    out[p] = std::exp(-optical);
  }
  auto tf = std::make_shared<std::vector<double>>(out);
  return rec.emit({P}, std::move(out), [sigma, deltas, tf, P, S](Tape& t, std::span<const double> g) {
    auto gs = t.grad_sink(sigma);
    auto dd = deltas.data();
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t s = 0; s < S; ++s) gs[p * S + s] -= g[p] * (*tf)[p] * dd[p * S + s];
  });
}

Tensor weighted_sum_samples(const Tensor& weights, const Tensor& values) {
  if (weights.rank() != 2 || values.rank() != 3 || values.dim(0) != weights.dim(0) ||
      values.dim(1) != weights.dim(1))
    throw DimensionError("weighted_sum_samples: weights " + shape_str(weights.shape()) + " vs values " +
                         shape_str(values.shape()));
  Recorder rec("weighted_sum_samples", {&weights, &values});
  const std::size_t P = values.dim(0), S = values.dim(1), D = values.dim(2);
  auto w = weights.data();
  auto v = values.data();
  std::vector<double> out(P * D, 0.0);
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t d = 0; d < D; ++d) out[p * D + d] += w[p * S + s] * v[(p * S + s) * D + d];
  return rec.emit({P, D}, std::move(out), [weights, values, P, S, D](Tape& t, std::span<const double> g) {
    auto gw = t.grad_sink(weights);
    auto gv = t.grad_sink(values);
    auto w = weights.data();
    auto v = values.data();
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t s = 0; s < S; ++s)
        for (std::size_t d = 0; d < D; ++d) {
          const std::size_t k = (p * S + s) * D + d;
          if (!gw.empty()) gw[p * S + s] += g[p * D + d] * v[k];
          if (!gv.empty()) gv[k] += g[p * D + d] * w[p * S + s];
        }
  });
}

}  // namespace tpmtl
