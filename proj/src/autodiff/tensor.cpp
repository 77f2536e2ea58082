#include "tpmtl/autodiff/tensor.hpp"

#include <numeric>
#include <sstream>

#include "tpmtl/core/error.hpp"

namespace tpmtl {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor() : shape_{0}, data_(std::make_shared<std::vector<double>>()) {}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : shape_(std::move(shape)),
      data_(std::make_shared<std::vector<double>>(std::move(data))),
      requires_grad_(requires_grad) {
  if (shape_numel(shape_) != data_->size())
    throw DimensionError("tensor shape " + shape_str(shape_) + " does not match " +
                         std::to_string(data_->size()) + " values");
  if (requires_grad_) grad_ = std::make_shared<std::vector<double>>();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({}, {value}, requires_grad);
}

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_str(shape_));
  return (*data_)[0];
}

bool Tensor::has_grad() const { return grad_ && grad_->size() == numel(); }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw ContractError("gradient not materialized for tensor " + shape_str(shape_));
  return *grad_;
}

void Tensor::zero_grad() {
  if (grad_) grad_->assign(numel(), 0.0);
}

std::span<double> Tensor::mutable_data() {
  if (!is_leaf()) throw ContractError("mutable_data() on a recorded (non-leaf) tensor");
  return *data_;
}

std::span<double> Tensor::mutable_grad() {
  if (!requires_grad_ || !is_leaf()) throw ContractError("mutable_grad() needs a requires_grad leaf");
  if (grad_->size() != numel()) grad_->assign(numel(), 0.0);
  return *grad_;
}

Tensor Tensor::detach() const {
  Tensor t;
  t.shape_ = shape_;
  t.data_ = data_;
  return t;
}

Tensor Tensor::reshape(Shape shape) const {
  if (shape_numel(shape) != numel())
    throw DimensionError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  Tensor t = *this;
  t.shape_ = std::move(shape);
  return t;
}

}  // namespace tpmtl
