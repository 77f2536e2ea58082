#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpmtl/mtl/model.hpp"
#include "tpmtl/renderer/renderer.hpp"
#include "tpmtl/scenes/scene.hpp"

namespace tpmtl {

struct MetricEntry {
  std::string task;
  std::string metric;  // miou, rmse, merr_deg, odsf_lite
  double value = 0.0;
};

struct MetricReport {
  std::string split;
  std::size_t samples = 0;
  std::string config_digest;
  std::vector<MetricEntry> entries;

  std::optional<double> value(const std::string& task) const;
  nlohmann::json to_json() const;
  /// Aligned text table, one row per task.
  std::string table() const;
};

/// Scores post-activated per-sample predictions ([H,W,D] per task) against
/// full-resolution labels.
MetricReport score_predictions(const std::vector<TaskSpec>& tasks,
                               const std::vector<std::map<std::string, Tensor>>& predictions,
                               const std::vector<const ViewLabels*>& labels);

/// Runs the main path in eval mode over `records` and scores it. The model's
/// mode is restored afterwards.
MetricReport evaluate(MultiTaskModel& model, const std::vector<const SampleRecord*>& records,
                      std::size_t batch_size = 8);

/// Short stable hash of a JSON document.
std::string config_digest(const nlohmann::json& doc);

/// Render-branch quality against labels traced at the render resolution.
struct RenderScores {
  double depth_rmse = 0.0;          // rendered depth task
  double density_depth_rmse = 0.0;  // expected termination of the density
  double seg_accuracy = 0.0;
  double normal_merr_deg = 0.0;
};

RenderScores score_render(const RenderOutput& render, const std::vector<TaskSpec>& tasks, const ViewLabels& truth);

}  // namespace tpmtl
