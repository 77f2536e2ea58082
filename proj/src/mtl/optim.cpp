#include "tpmtl/mtl/optim.hpp"

#include <cmath>

#include "tpmtl/core/error.hpp"

namespace tpmtl {

void adam_step(std::span<double> param, std::span<const double> grad, AdamMoments& st, const AdamConfig& cfg) {
  if (param.size() != grad.size()) {
    throw DimensionError("adam: parameter has " + std::to_string(param.size()) + " elements, gradient " +
                         std::to_string(grad.size()));
  }
  if (!(cfg.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (st.m.empty()) st.m.assign(param.size(), 0.0), st.v.assign(param.size(), 0.0);
  if (st.m.size() != param.size()) throw DimensionError("adam: state size differs from parameter size");
  const long step = ++st.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * g;
    st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * g * g;
    param[i] -= cfg.lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + cfg.eps);
  }
}

void Adam::step(const std::function<void(const TensorVisitor&)>& visit) {
  visit([this](const std::string& name, Tensor& t) {
    if (!t.has_grad()) return;
    adam_step(t.mutable_data(), t.grad(), state_[name], cfg_);
  });
}

}  // namespace tpmtl
