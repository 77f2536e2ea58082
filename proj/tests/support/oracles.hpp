#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tpmtl/autodiff/tensor.hpp"

namespace tpmtl::testing {

// Bilinear interpolation written as a sum of tent functions over every grid
// node; shares no code with the library's tap computation.
inline std::vector<double> tent_sample(const Tensor& plane, double u, double v) {
  const std::size_t r = plane.dim(0), c = plane.dim(2);
  const double pu = (std::clamp(u, -1.0, 1.0) + 1.0) / 2.0 * static_cast<double>(r - 1);
  const double pv = (std::clamp(v, -1.0, 1.0) + 1.0) / 2.0 * static_cast<double>(r - 1);
  std::vector<double> out(c, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    const double wy = std::max(0.0, 1.0 - std::abs(pv - static_cast<double>(i)));
    if (wy == 0.0) continue;
    for (std::size_t j = 0; j < r; ++j) {
      const double wx = std::max(0.0, 1.0 - std::abs(pu - static_cast<double>(j)));
      if (wx == 0.0) continue;
      for (std::size_t k = 0; k < c; ++k) out[k] += wy * wx * plane.at((i * r + j) * c + k);
    }
  }
  return out;
}

}  // namespace tpmtl::testing
