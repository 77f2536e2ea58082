#pragma once

#include <functional>
#include <vector>

#include "tpmtl/autodiff/tensor.hpp"

namespace tpmtl {

struct GradCheckResult {
  double max_rel_error = 0.0;  // max |g_a - g_fd| / (|g_fd| + 1e-8)
  double max_abs_error = 0.0;
  std::size_t checked = 0;
};

/// Compares reverse-mode gradients of a scalar function against central
/// differences. `loss_fn` must rebuild the loss from the current values of
/// `leaves` on every call and be deterministic. Every element of every leaf
/// is perturbed unless `max_elements_per_leaf` caps it, in which case an
/// evenly strided subset is checked.
GradCheckResult check_gradients(const std::function<Tensor()>& loss_fn, std::vector<Tensor> leaves,
                                double h = 1e-4, std::size_t max_elements_per_leaf = 0);

}  // namespace tpmtl
