#include "tpmtl/autodiff/layers.hpp"

#include <cmath>

namespace tpmtl {

namespace {

// He-uniform initialization for weights feeding rectifiers.
Tensor he_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(-bound, bound);
  return Tensor(std::move(shape), std::move(v), true);
}

}  // namespace

Conv3x3::Conv3x3(std::size_t in, std::size_t out, Rng& rng)
    : weight(he_uniform({out, in, 3, 3}, in * 9, rng)), bias(Tensor::zeros({out}, true)) {}

void Conv3x3::parameters(const std::string& prefix, const TensorVisitor& fn) {
  fn(prefix + ".weight", weight);
  fn(prefix + ".bias", bias);
}

Linear::Linear(std::size_t in, std::size_t out, Rng& rng)
    : weight(he_uniform({in, out}, in, rng)), bias(Tensor::zeros({out}, true)) {}

void Linear::parameters(const std::string& prefix, const TensorVisitor& fn) {
  fn(prefix + ".weight", weight);
  fn(prefix + ".bias", bias);
}

BatchNorm::BatchNorm(std::size_t channels)
    : gamma(Tensor::full({channels}, 1.0, true)), beta(Tensor::zeros({channels}, true)), stats(channels) {}

void BatchNorm::parameters(const std::string& prefix, const TensorVisitor& fn) {
  fn(prefix + ".gamma", gamma);
  fn(prefix + ".beta", beta);
}

void BatchNorm::buffers(const std::string& prefix, const TensorVisitor& fn) {
  fn(prefix + ".running_mean", stats.running_mean);
  fn(prefix + ".running_var", stats.running_var);
}

void zero_parameters(const std::function<void(const TensorVisitor&)>& visit) {
  visit([](const std::string&, Tensor& t) {
    for (double& v : t.mutable_data()) v = 0.0;
  });
}

std::size_t count_elements(const std::function<void(const TensorVisitor&)>& visit) {
  std::size_t n = 0;
  visit([&n](const std::string&, Tensor& t) { n += t.numel(); });
  return n;
}

}  // namespace tpmtl
