#include <cmath>
#include <memory>

#include "tpmtl/autodiff/ops.hpp"
#include "tpmtl/core/error.hpp"

namespace tpmtl {

namespace {

enum class Broadcast { same, scalar_a, scalar_b };

Broadcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return Broadcast::same;
  if (b.numel() == 1) return Broadcast::scalar_b;
  if (a.numel() == 1) return Broadcast::scalar_a;
  throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                       shape_str(b.shape()));
}

// Applies f elementwise; df(a, b) returns (d/da, d/db) and is evaluated in backward.
template <class F, class DF>
Tensor binary(const char* name, const Tensor& a, const Tensor& b, F f, DF df) {
  const Broadcast kind = broadcast_kind(name, a, b);
  Recorder rec(name, {&a, &b});
  const Shape shape = kind == Broadcast::scalar_a ? b.shape() : a.shape();
  const std::size_t n = shape_numel(shape);
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  std::vector<double> out(n);
  switch (kind) {
    case Broadcast::same:
      for (std::size_t i = 0; i < n; ++i) out[i] = f(ad[i], bd[i]);
      break;
    case Broadcast::scalar_a:
      for (std::size_t i = 0; i < n; ++i) out[i] = f(ad[0], bd[i]);
      break;
    case Broadcast::scalar_b:
      for (std::size_t i = 0; i < n; ++i) out[i] = f(ad[i], bd[0]);
      break;
  }
  if (!rec) return Tensor(shape, std::move(out));
  return rec.emit(shape, std::move(out), [a, b, kind, df](Tape& t, std::span<const double> g) {
    auto ga = t.grad_sink(a);
    auto gb = t.grad_sink(b);
    const double* ad = a.data().data();
    const double* bd = b.data().data();
    const std::size_t n = g.size();
    const std::size_t sa = kind == Broadcast::scalar_a ? 0 : 1;
    const std::size_t sb = kind == Broadcast::scalar_b ? 0 : 1;
    if (!ga.empty()) {
      if (sa == 1) {
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * df(ad[i], bd[i * sb]).first;
      } else {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += g[i] * df(ad[0], bd[i]).first;
        ga[0] += acc;
      }
    }
    if (!gb.empty()) {
      if (sb == 1) {
        for (std::size_t i = 0; i < n; ++i) gb[i] += g[i] * df(ad[i * sa], bd[i]).second;
      } else {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += g[i] * df(ad[i], bd[0]).second;
        gb[0] += acc;
      }
    }
  });
}

// df(x, y) receives the input and the output value.
template <class F, class DF>
Tensor unary(const char* name, const Tensor& x, F f, DF df) {
  Recorder rec(name, {&x});
  const std::size_t n = x.numel();
  const double* xd = x.data().data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(xd[i]);
  if (!rec) return Tensor(x.shape(), std::move(out));
  auto y = std::make_shared<std::vector<double>>(std::move(out));
  return rec.emit(x.shape(), y, [x, y, df](Tape& t, std::span<const double> g) {
    auto gx = t.grad_sink(x);
    const double* xd = x.data().data();
    const double* yd = y->data();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xd[i], yd[i]);
  });
}

double stable_sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary("add", a, b, [](double x, double y) { return x + y; },
                [](double, double) { return std::pair{1.0, 1.0}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary("sub", a, b, [](double x, double y) { return x - y; },
                [](double, double) { return std::pair{1.0, -1.0}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary("mul", a, b, [](double x, double y) { return x * y; },
                [](double x, double y) { return std::pair{y, x}; });
}

Tensor add(const Tensor& a, double b) {
  return unary("add_scalar", a, [b](double x) { return x + b; }, [](double, double) { return 1.0; });
}

Tensor scale(const Tensor& a, double s) {
  return unary("scale", a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  return unary("leaky_relu", x, [slope](double v) { return v >= 0 ? v : slope * v; },
               [slope](double v, double) { return v >= 0 ? 1.0 : slope; });
}

Tensor relu(const Tensor& x) {
  return unary("relu", x, [](double v) { return v > 0 ? v : 0.0; },
               [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Tensor softplus(const Tensor& x) {
  return unary(
      "softplus", x, [](double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); },
      [](double v, double) { return stable_sigmoid(v); });
}

Tensor sigmoid(const Tensor& x) {
  return unary("sigmoid", x, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& x) {
  return unary("exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary("log", x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor sum(const Tensor& x) {
  Recorder rec("sum", {&x});
  double s = 0.0;
  for (double v : x.data()) s += v;
  return rec.emit({}, {s}, [x](Tape& t, std::span<const double> g) {
    for (double& v : t.grad_sink(x)) v += g[0];
  });
}

Tensor mean(const Tensor& x) {
  Recorder rec("mean", {&x});
  double s = 0.0;
  for (double v : x.data()) s += v;
  const double n = static_cast<double>(x.numel());
  return rec.emit({}, {x.numel() ? s / n : 0.0}, [x, n](Tape& t, std::span<const double> g) {
    for (double& v : t.grad_sink(x)) v += g[0] / n;
  });
}

Tensor softmax_lastdim(const Tensor& x) {
  if (x.rank() == 0 || x.shape().back() == 0)
    throw DimensionError("softmax_lastdim needs a non-empty last dimension");
  Recorder rec("softmax_lastdim", {&x});
  const std::size_t D = x.shape().back();
  const std::size_t rows = x.numel() / D;
  auto xd = x.data();
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xd.data() + r * D;
    double* o = out.data() + r * D;
    double mx = in[0];
    for (std::size_t d = 1; d < D; ++d) mx = std::max(mx, in[d]);
    double z = 0.0;
    for (std::size_t d = 0; d < D; ++d) z += (o[d] = std::exp(in[d] - mx));
    for (std::size_t d = 0; d < D; ++d) o[d] /= z;
  }
  if (!rec) return Tensor(x.shape(), std::move(out));
  auto y = std::make_shared<std::vector<double>>(out);
  return rec.emit(x.shape(), std::move(out), [x, y, D, rows](Tape& t, std::span<const double> g) {
    auto gx = t.grad_sink(x);
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t d = 0; d < D; ++d) dot += g[r * D + d] * (*y)[r * D + d];
      for (std::size_t d = 0; d < D; ++d) gx[r * D + d] += (*y)[r * D + d] * (g[r * D + d] - dot);
    }
  });
}

Tensor l2_normalize_lastdim(const Tensor& x) {
  if (x.rank() == 0 || x.shape().back() == 0)
    throw DimensionError("l2_normalize_lastdim needs a non-empty last dimension");
  Recorder rec("l2_normalize_lastdim", {&x});
  const std::size_t D = x.shape().back();
  const std::size_t rows = x.numel() / D;
  auto xd = x.data();
  std::vector<double> out(x.numel());
  auto norms = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double n2 = 0.0;
    for (std::size_t d = 0; d < D; ++d) n2 += xd[r * D + d] * xd[r * D + d];
    const double n = std::sqrt(n2);
    (*norms)[r] = n;
    for (std::size_t d = 0; d < D; ++d) out[r * D + d] = n > 0 ? xd[r * D + d] / n : 0.0;
  }
  if (!rec) return Tensor(x.shape(), std::move(out));
  auto y = std::make_shared<std::vector<double>>(out);
  return rec.emit(x.shape(), std::move(out), [x, y, norms, D, rows](Tape& t, std::span<const double> g) {
    auto gx = t.grad_sink(x);
    for (std::size_t r = 0; r < rows; ++r) {
      const double n = (*norms)[r];
      if (n == 0.0) continue;
      double dot = 0.0;
      for (std::size_t d = 0; d < D; ++d) dot += g[r * D + d] * (*y)[r * D + d];
      for (std::size_t d = 0; d < D; ++d) gx[r * D + d] += (g[r * D + d] - (*y)[r * D + d] * dot) / n;
    }
  });
}

}  // namespace tpmtl
