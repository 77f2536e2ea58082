#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tpmtl/mtl/config.hpp"
#include "tpmtl/scenes/dataset.hpp"

namespace tpmtl {

struct LogRow {
  long iter = 0;
  double alpha = 0.0;
  double total = 0.0;
  std::map<std::string, double> main, reg, cross;
};

struct TrainResult {
  MultiTaskModel model;
  std::filesystem::path checkpoint;
  std::filesystem::path metrics;
  std::vector<LogRow> log;
};

struct TrainHooks {
  std::function<void(const LogRow&)> on_log;
  /// Override of the render sampling mode (midpoint for reproducible runs).
  std::optional<SampleMode> sampling;
};

/// Runs cfg.total_iters Adam steps on the train split. Logs a CSV row every
/// cfg.log_every iterations plus a final row at iteration total_iters
/// (evaluated without updating), checkpoints every cfg.checkpoint_every
/// iterations and at the end. A non-finite objective writes
/// diagnostic.json to the output directory and raises NumericalError.
TrainResult train(const TrainConfig& cfg, const Dataset& data, const TrainHooks& hooks = {});

/// CSV header and row formatting of the metrics log.
std::string metrics_header(const std::vector<TaskSpec>& tasks);
std::string metrics_row(const LogRow& row, const std::vector<TaskSpec>& tasks);

}  // namespace tpmtl
