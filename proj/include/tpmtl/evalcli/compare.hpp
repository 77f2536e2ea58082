#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tpmtl/evalcli/report.hpp"
#include "tpmtl/mtl/config.hpp"
#include "tpmtl/scenes/dataset.hpp"

namespace tpmtl {

struct CompareOptions {
  /// Shared training setup; alpha, baseline flag and seed are set per run.
  TrainConfig base;
  int seeds = 5;
  double alpha = 4.0;
  bool aux_heads = false;
  std::filesystem::path out_dir = "compare";
  std::optional<SampleMode> sampling;
};

struct CompareRun {
  std::string condition;  // alpha0, alpha<max>, aux
  int seed = 0;
  MetricReport report;
};

struct CompareResult {
  std::vector<std::string> conditions;
  std::vector<CompareRun> runs;
  /// Seeds where the regularized run's held-out depth RMSE is at most the
  /// alpha = 0 run's.
  int depth_wins = 0;

  /// Per-seed rows per condition, a mean row per condition, then per-seed
  /// and mean deltas against alpha0.
  std::string table() const;
  std::string csv() const;
};

/// Paired trainings over `seeds` seeds on the train split, each scored on the
/// test split. Run directories go under out_dir/<condition>_seed<k>.
CompareResult run_compare(const CompareOptions& options, const Dataset& data, std::ostream* progress = nullptr);

}  // namespace tpmtl
