#pragma once

#include <functional>
#include <string>

#include "tpmtl/autodiff/ops.hpp"

namespace tpmtl {

/// Visitor over named tensors; used for optimizer state and checkpoints.
using TensorVisitor = std::function<void(const std::string& name, Tensor& tensor)>;

struct Conv3x3 {
  Conv3x3() = default;
  Conv3x3(std::size_t in, std::size_t out, Rng& rng);
  Tensor operator()(const Tensor& x) const { return conv2d_3x3(x, weight, bias); }
  void parameters(const std::string& prefix, const TensorVisitor& fn);
  Tensor weight, bias;
};

struct Linear {
  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng);
  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }
  void parameters(const std::string& prefix, const TensorVisitor& fn);
  Tensor weight, bias;  // weight is [in, out]
};

struct BatchNorm {
  BatchNorm() = default;
  explicit BatchNorm(std::size_t channels);
  Tensor operator()(const Tensor& x, Mode mode) { return batchnorm2d(x, gamma, beta, stats, mode); }
  void parameters(const std::string& prefix, const TensorVisitor& fn);
  void buffers(const std::string& prefix, const TensorVisitor& fn);
  Tensor gamma, beta;
  BatchNormStats stats;
};

/// Zeroes every parameter reachable through `visit` (used by tests and the
/// degenerate-network examples).
void zero_parameters(const std::function<void(const TensorVisitor&)>& visit);

std::size_t count_elements(const std::function<void(const TensorVisitor&)>& visit);

}  // namespace tpmtl
