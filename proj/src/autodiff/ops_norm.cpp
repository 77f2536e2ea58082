#include <cmath>
#include <memory>

#include "tpmtl/autodiff/ops.hpp"
#include "tpmtl/core/error.hpp"

namespace tpmtl {

Tensor batchnorm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   BatchNormStats& stats, Mode mode) {
  const bool batched = x.rank() == 4;
  if (!batched && x.rank() != 3) throw DimensionError("batchnorm2d: input must be [C,H,W] or [B,C,H,W]");
  const std::size_t B = batched ? x.dim(0) : 1;
  const std::size_t C = x.dim(batched ? 1 : 0);
  const std::size_t HW = x.numel() / (B * C);
  if (gamma.numel() != C || beta.numel() != C || stats.running_mean.numel() != C)
    throw DimensionError("batchnorm2d: parameter size does not match " + std::to_string(C) + " channels");

  Recorder rec("batchnorm2d", {&x, &gamma, &beta});
  const double count = static_cast<double>(B * HW);
  auto xd = x.data();
  auto gd = gamma.data();
  auto bd = beta.data();
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(C);
  std::vector<double> out(x.numel());
  auto at = [HW, C](std::size_t n, std::size_t c, std::size_t i) { return (n * C + c) * HW + i; };

  for (std::size_t c = 0; c < C; ++c) {
    double mu, var;
    if (mode == Mode::train) {
      double s = 0.0;
      for (std::size_t n = 0; n < B; ++n)
        for (std::size_t i = 0; i < HW; ++i) s += xd[at(n, c, i)];
      mu = s / count;
      double ss = 0.0;
      for (std::size_t n = 0; n < B; ++n)
        for (std::size_t i = 0; i < HW; ++i) {
          const double d = xd[at(n, c, i)] - mu;
          ss += d * d;
        }
      var = ss / count;
      auto rm = stats.running_mean.mutable_data();
      auto rv = stats.running_var.mutable_data();
      const double unbiased = count > 1 ? ss / (count - 1) : var;
      rm[c] = (1 - stats.momentum) * rm[c] + stats.momentum * mu;
      rv[c] = (1 - stats.momentum) * rv[c] + stats.momentum * unbiased;
    } else {
      mu = stats.running_mean.at(c);
      var = stats.running_var.at(c);
    }
    const double is = 1.0 / std::sqrt(var + stats.eps);
    (*inv_std)[c] = is;
    for (std::size_t n = 0; n < B; ++n)
      for (std::size_t i = 0; i < HW; ++i) {
        const std::size_t k = at(n, c, i);
        (*xhat)[k] = (xd[k] - mu) * is;
        out[k] = gd[c] * (*xhat)[k] + bd[c];
      }
  }
  const bool train = mode == Mode::train;
  return rec.emit(x.shape(), std::move(out),
                  [x, gamma, beta, xhat, inv_std, B, C, HW, count, train, at](Tape& t, std::span<const double> g) {
    auto gx = t.grad_sink(x);
    auto gg = t.grad_sink(gamma);
    auto gb = t.grad_sink(beta);
    auto gd = gamma.data();
    for (std::size_t c = 0; c < C; ++c) {
      double sum_g = 0.0, sum_gx = 0.0;
      for (std::size_t n = 0; n < B; ++n)
        for (std::size_t i = 0; i < HW; ++i) {
          const std::size_t k = at(n, c, i);
          sum_g += g[k];
          sum_gx += g[k] * (*xhat)[k];
        }
      if (!gg.empty()) gg[c] += sum_gx;
      if (!gb.empty()) gb[c] += sum_g;
      if (gx.empty()) continue;
      const double scale = gd[c] * (*inv_std)[c];
      for (std::size_t n = 0; n < B; ++n)
        for (std::size_t i = 0; i < HW; ++i) {
          const std::size_t k = at(n, c, i);
          gx[k] += train ? scale * (g[k] - sum_g / count - (*xhat)[k] * sum_gx / count) : scale * g[k];
        }
    }
  });
}

Tensor dropout(const Tensor& x, double rate, Rng& rng, Mode mode) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must lie in [0,1)");
  Recorder rec("dropout", {&x});
  if (mode == Mode::eval || rate == 0.0) {
    return rec.emit(x.shape(), std::vector<double>(x.data().begin(), x.data().end()),
                    [x](Tape& t, std::span<const double> g) {
                      auto gx = t.grad_sink(x);
                      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                    });
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<std::vector<double>>(x.numel());
  std::vector<double> out(x.numel());
  auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    (*mask)[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    out[i] = xd[i] * (*mask)[i];
  }
  return rec.emit(x.shape(), std::move(out), [x, mask](Tape& t, std::span<const double> g) {
    auto gx = t.grad_sink(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*mask)[i];
  });
}

}  // namespace tpmtl
