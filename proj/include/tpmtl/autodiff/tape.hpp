#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "tpmtl/autodiff/tensor.hpp"

namespace tpmtl {

class Tape;
using BackwardFn = std::function<void(Tape&, std::span<const double> grad_out)>;

/// Reverse-mode record of one forward pass.
///
/// Operations append nodes while the tape is active on the current thread
/// (see `activate`) or when one of their inputs already lives on it.
/// `backward` walks nodes in strict reverse append order and then clears the
/// tape; a consumed tape rejects further recording and a second backward.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  class Scope {
   public:
    explicit Scope(Tape* tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* previous_;
  };

  /// Makes this tape the recording target for leaf-only operations on the
  /// calling thread until the returned scope ends.
  [[nodiscard]] Scope activate() { return Scope(this); }
  static Tape* current();

  void backward(const Tensor& loss);

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  // Recording interface used by operations.
  std::size_t append(std::string_view op, std::size_t numel, BackwardFn fn);
  /// Gradient accumulator for `input`; empty if it does not require grad.
  std::span<double> grad_sink(const Tensor& input);

 private:
  struct Node {
    std::string_view op;
    std::size_t numel;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  bool consumed_ = false;
};

/// Free-function form of Tape::backward using the loss's own tape.
void backward(const Tensor& loss);

/// Helper for writing operations: decides whether the result is recorded and
/// on which tape, and registers leaf inputs.
class Recorder {
 public:
  Recorder(std::string_view op, std::initializer_list<const Tensor*> inputs)
      : Recorder(op, std::span<const Tensor* const>(inputs.begin(), inputs.size())) {}
  Recorder(std::string_view op, std::span<const Tensor* const> inputs);
  explicit operator bool() const { return tape_ != nullptr; }
  Tensor emit(Shape shape, std::vector<double> data, BackwardFn fn) const;
  /// Same as `emit`, with storage the backward closure may also hold.
  Tensor emit(Shape shape, std::shared_ptr<std::vector<double>> data, BackwardFn fn) const;

 private:
  std::string_view op_;
  Tape* tape_ = nullptr;
};

Tensor make_constant(Shape shape, std::vector<double> data);

}  // namespace tpmtl
