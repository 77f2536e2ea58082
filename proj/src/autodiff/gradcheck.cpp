#include "tpmtl/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "tpmtl/autodiff/tape.hpp"
#include "tpmtl/core/error.hpp"

namespace tpmtl {

GradCheckResult check_gradients(const std::function<Tensor()>& loss_fn, std::vector<Tensor> leaves,
                                double h, std::size_t max_elements_per_leaf) {
  for (Tensor& leaf : leaves) {
    if (!leaf.is_leaf() || !leaf.requires_grad()) throw ContractError("check_gradients needs requires_grad leaves");
    leaf.zero_grad();
  }
  {
    Tape tape;
    auto scope = tape.activate();
    Tensor loss = loss_fn();
    tape.backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  for (Tensor& leaf : leaves) {
    auto g = leaf.mutable_grad();
    analytic.emplace_back(g.begin(), g.end());
  }

  GradCheckResult result;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    auto data = leaves[l].mutable_data();
    const std::size_t n = data.size();
    const std::size_t stride =
        (max_elements_per_leaf == 0 || n <= max_elements_per_leaf) ? 1 : (n + max_elements_per_leaf - 1) / max_elements_per_leaf;
    for (std::size_t i = 0; i < n; i += stride) {
      const double saved = data[i];
      data[i] = saved + h;
      const double up = loss_fn().item();
      data[i] = saved - h;
      const double down = loss_fn().item();
      data[i] = saved;
      const double fd = (up - down) / (2 * h);
      const double err = std::abs(analytic[l][i] - fd);
      result.max_abs_error = std::max(result.max_abs_error, err);
      result.max_rel_error = std::max(result.max_rel_error, err / (std::abs(fd) + 1e-8));
      ++result.checked;
    }
  }
  return result;
}

}  // namespace tpmtl
