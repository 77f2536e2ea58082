#include <algorithm>
#include <cmath>

#include "tpmtl/autodiff/ops.hpp"
#include "tpmtl/core/error.hpp"

namespace tpmtl {

namespace {
constexpr double kProbFloor = 1e-12;
}

Tensor l1_loss(const Tensor& pred, const Tensor& target, std::span<const std::uint8_t> mask) {
  if (pred.numel() != target.numel() || pred.rank() == 0)
    throw DimensionError("l1_loss: pred " + shape_str(pred.shape()) + " vs target " + shape_str(target.shape()));
  const std::size_t D = pred.shape().back();
  const std::size_t rows = pred.numel() / D;
  if (!mask.empty() && mask.size() != rows) throw DimensionError("l1_loss: mask length differs from row count");
  Recorder rec("l1_loss", {&pred, &target});
  auto p = pred.data();
  auto y = target.data();
  std::size_t valid = 0;
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!mask.empty() && !mask[r]) continue;
    ++valid;
    for (std::size_t d = 0; d < D; ++d) total += std::abs(p[r * D + d] - y[r * D + d]);
  }
  const double n = static_cast<double>(valid);
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  return rec.emit({}, {valid ? total / n : 0.0}, [pred, target, m, D, rows, n](Tape& t, std::span<const double> g) {
    if (n == 0) return;
    auto gp = t.grad_sink(pred);
    auto gy = t.grad_sink(target);
    auto p = pred.data();
    auto y = target.data();
    for (std::size_t r = 0; r < rows; ++r) {
      if (!m.empty() && !m[r]) continue;
      for (std::size_t d = 0; d < D; ++d) {
        const double diff = p[r * D + d] - y[r * D + d];
        const double s = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
        if (!gp.empty()) gp[r * D + d] += g[0] * s / n;
        if (!gy.empty()) gy[r * D + d] -= g[0] * s / n;
      }
    }
  });
}

Tensor nll_loss(const Tensor& probs, std::span<const int> labels, int ignore_index) {
  if (probs.rank() != 2 || probs.dim(0) != labels.size())
    throw DimensionError("nll_loss: probabilities " + shape_str(probs.shape()) + " for " +
                         std::to_string(labels.size()) + " labels");
  Recorder rec("nll_loss", {&probs});
  const std::size_t N = probs.dim(0), K = probs.dim(1);
  auto p = probs.data();
  std::size_t valid = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    if (labels[i] == ignore_index) continue;
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= K)
      throw ValidationError("nll_loss: label " + std::to_string(labels[i]) + " outside [0," + std::to_string(K) + ")");
    ++valid;
    total -= std::log(std::max(p[i * K + labels[i]], kProbFloor));
  }
  const double n = static_cast<double>(valid);
  std::vector<int> lab(labels.begin(), labels.end());
  return rec.emit({}, {valid ? total / n : 0.0}, [probs, lab, N, K, n, ignore_index](Tape& t, std::span<const double> g) {
    if (n == 0) return;
    auto gp = t.grad_sink(probs);
    auto p = probs.data();
    for (std::size_t i = 0; i < N; ++i) {
      if (lab[i] == ignore_index) continue;
      const double v = p[i * K + lab[i]];
      if (v > kProbFloor) gp[i * K + lab[i]] -= g[0] / (n * v);
    }
  });
}

Tensor bce_loss(const Tensor& prob, const Tensor& target, double pos_weight) {
  if (prob.numel() != target.numel())
    throw DimensionError("bce_loss: prob " + shape_str(prob.shape()) + " vs target " + shape_str(target.shape()));
  Recorder rec("bce_loss", {&prob});
  const std::size_t N = prob.numel();
  const double neg_weight = 1.0 - pos_weight;
  auto p = prob.data();
  auto y = target.data();
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double q = std::clamp(p[i], kProbFloor, 1.0 - kProbFloor);
    total -= pos_weight * y[i] * std::log(q) + neg_weight * (1.0 - y[i]) * std::log(1.0 - q);
  }
  const double n = static_cast<double>(N);
  return rec.emit({}, {N ? total / n : 0.0}, [prob, target, pos_weight, neg_weight, n](Tape& t, std::span<const double> g) {
    if (n == 0) return;
    auto gp = t.grad_sink(prob);
    auto p = prob.data();
    auto y = target.data();
    for (std::size_t i = 0; i < gp.size(); ++i) {
      if (p[i] <= kProbFloor || p[i] >= 1.0 - kProbFloor) continue;
      gp[i] -= g[0] * (pos_weight * y[i] / p[i] - neg_weight * (1.0 - y[i]) / (1.0 - p[i])) / n;
    }
  });
}

}  // namespace tpmtl
