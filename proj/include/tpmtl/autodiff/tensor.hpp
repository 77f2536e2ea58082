#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tpmtl {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

enum class Mode { train, eval };

class Tape;

/// Dense row-major array of doubles.
///
/// Copies are shallow: data, the leaf gradient slot, and the tape handle are
/// shared. Values are treated as immutable once created; the only mutation
/// path is `mutable_data()` on leaves (optimizer updates, deserialization).
/// A tensor produced while a Tape is recording refers to that tape and must
/// not outlive it.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t numel() const { return data_->size(); }
  std::span<const double> data() const { return *data_; }
  double item() const;
  double at(std::size_t flat_index) const { return (*data_).at(flat_index); }

  bool requires_grad() const { return requires_grad_; }
  bool is_leaf() const { return tape_ == nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t node() const { return node_; }

  /// Leaf gradient accumulated by Tape::backward. Empty until materialized.
  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();

  std::span<double> mutable_data();
  std::span<double> mutable_grad();

  /// Same values, no gradient tracking.
  Tensor detach() const;
  /// Differentiable view with a new shape of equal element count.
  Tensor reshape(Shape shape) const;

 private:
  friend class Tape;
  friend class Recorder;

  Shape shape_;
  std::shared_ptr<std::vector<double>> data_;
  std::shared_ptr<std::vector<double>> grad_;
  Tape* tape_ = nullptr;
  std::size_t node_ = 0;
  bool requires_grad_ = false;
};

}  // namespace tpmtl
