#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tpmtl/autodiff/layers.hpp"

namespace tpmtl {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamMoments {
  std::vector<double> m, v;
  long step = 0;
};

/// One bias-corrected Adam update; advances `state.step`.
void adam_step(std::span<double> param, std::span<const double> grad, AdamMoments& state, const AdamConfig& cfg);

/// Adam over named tensors with per-tensor step counts. Tensors whose
/// gradient was never materialized are left untouched.
class Adam {
 public:
  explicit Adam(const AdamConfig& cfg = {}) : cfg_(cfg) {}
  void step(const std::function<void(const TensorVisitor&)>& visit);
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::map<std::string, AdamMoments> state_;
};

}  // namespace tpmtl
