#include "tpmtl/autodiff/op_counter.hpp"

namespace tpmtl {

namespace {
thread_local OpCounter* active_counter = nullptr;
}

OpCounter::Scope::Scope(OpCounter* counter) : previous_(active_counter) { active_counter = counter; }
OpCounter::Scope::~Scope() { active_counter = previous_; }

void OpCounter::record(std::string_view op) {
  if (active_counter == nullptr) return;
  auto it = active_counter->counts_.find(op);
  if (it == active_counter->counts_.end())
    active_counter->counts_.emplace(std::string(op), 1);
  else
    ++it->second;
}

std::size_t OpCounter::count(std::string_view op) const {
  auto it = counts_.find(op);
  return it == counts_.end() ? 0 : it->second;
}

std::size_t OpCounter::total() const {
  std::size_t n = 0;
  for (const auto& [_, c] : counts_) n += c;
  return n;
}

}  // namespace tpmtl
