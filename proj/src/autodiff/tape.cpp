#include "tpmtl/autodiff/tape.hpp"

#include "tpmtl/autodiff/op_counter.hpp"
#include "tpmtl/core/error.hpp"

namespace tpmtl {

namespace {
thread_local Tape* active_tape = nullptr;
}

Tape::Scope::Scope(Tape* tape) : previous_(active_tape) { active_tape = tape; }
Tape::Scope::~Scope() { active_tape = previous_; }

Tape* Tape::current() { return active_tape; }

std::size_t Tape::append(std::string_view op, std::size_t numel, BackwardFn fn) {
  if (consumed_) throw ContractError("recording on a tape that was already consumed by backward");
  nodes_.push_back(Node{op, numel, std::move(fn)});
  grads_.emplace_back();
  return nodes_.size() - 1;
}

std::span<double> Tape::grad_sink(const Tensor& input) {
  if (!input.requires_grad()) return {};
  if (input.is_leaf()) {
    auto& g = *input.grad_;
    if (g.size() != input.numel()) g.assign(input.numel(), 0.0);
    return g;
  }
  if (input.tape() != this) throw ContractError("tensor belongs to a different tape");
  auto& g = grads_.at(input.node());
  if (g.empty()) g.assign(nodes_[input.node()].numel, 0.0);
  return g;
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) throw ContractError("tape already consumed: backward may run once per forward pass");
  if (loss.numel() != 1)
    throw ContractError("backward needs a scalar loss, got shape " + shape_str(loss.shape()));
  if (loss.tape() != this) throw ContractError("loss was not recorded on this tape");

  grads_[loss.node()].assign(1, 1.0);
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (grads_[i].empty()) continue;
    nodes_[i].backward(*this, grads_[i]);
    std::vector<double>().swap(grads_[i]);
  }
  nodes_.clear();
  grads_.clear();
  consumed_ = true;
}

void backward(const Tensor& loss) {
  if (loss.tape() == nullptr) throw ContractError("backward on a tensor that is not on any tape");
  loss.tape()->backward(loss);
}

Recorder::Recorder(std::string_view op, std::span<const Tensor* const> inputs) : op_(op) {
  OpCounter::record(op);
  bool needs_grad = false;
  Tape* found = nullptr;
  for (const Tensor* t : inputs) {
    if (!t->requires_grad()) continue;
    needs_grad = true;
    if (t->tape() != nullptr) {
      if (found != nullptr && found != t->tape())
        throw ContractError(std::string(op) + ": inputs recorded on different tapes");
      found = t->tape();
    }
  }
  if (!needs_grad) return;
  tape_ = found != nullptr ? found : Tape::current();
  if (tape_ == nullptr) return;  // no-grad evaluation
  if (tape_->consumed())
    throw ContractError(std::string(op) + ": input tape already consumed by backward");
  for (const Tensor* t : inputs)
    if (t->requires_grad() && t->is_leaf() && t->grad_->size() != t->numel())
      t->grad_->assign(t->numel(), 0.0);
}

Tensor Recorder::emit(Shape shape, std::vector<double> data, BackwardFn fn) const {
  Tensor out(std::move(shape), std::move(data));
  if (tape_ == nullptr) return out;
  out.node_ = tape_->append(op_, out.numel(), std::move(fn));
  out.tape_ = tape_;
  out.requires_grad_ = true;
  return out;
}

Tensor Recorder::emit(Shape shape, std::shared_ptr<std::vector<double>> data, BackwardFn fn) const {
  Tensor out;
  out.shape_ = std::move(shape);
  out.data_ = std::move(data);
  if (tape_ == nullptr) return out;
  out.node_ = tape_->append(op_, out.numel(), std::move(fn));
  out.tape_ = tape_;
  out.requires_grad_ = true;
  return out;
}

Tensor make_constant(Shape shape, std::vector<double> data) {
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace tpmtl
