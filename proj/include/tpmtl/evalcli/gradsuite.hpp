#pragma once

#include <string>
#include <vector>

namespace tpmtl {

struct GradSuiteEntry {
  std::string name;
  double max_rel_error = 0.0;  // worst over all seeds
  double tolerance = 0.0;
  int seeds = 0;
  bool passed() const { return max_rel_error < tolerance; }
};

/// Central-difference checks of every differentiable primitive and of the
/// end-to-end regularizer loss (midpoint sampling), each over `seeds` seeds.
std::vector<GradSuiteEntry> run_gradient_suite(int seeds = 20);

}  // namespace tpmtl
