#pragma once

#include <map>
#include <string>
#include <vector>

#include "tpmtl/autodiff/layers.hpp"

namespace tpmtl {

enum class TaskKind { segmentation, depth, normal, boundary };
enum class PostActivation { softmax, identity, l2_normalize, sigmoid };
enum class LossKind { cross_entropy, l1, l1_normalized, binary_cross_entropy };

struct TaskSpec {
  TaskKind kind = TaskKind::depth;
  std::size_t value_dim = 1;
  PostActivation post = PostActivation::identity;
  LossKind loss = LossKind::l1;
  double loss_weight = 1.0;
  /// Positive-class weight for binary cross-entropy.
  double pos_weight = 0.95;

  std::string name() const;
  void validate() const;
};

std::string task_name(TaskKind kind);
/// Parses "segmentation", "depth", "normal" or "boundary"; ConfigError otherwise.
TaskKind parse_task_kind(const std::string& name);
/// Canonical spec for a task; `num_classes` only matters for segmentation.
TaskSpec make_task(TaskKind kind, std::size_t num_classes = 6);
/// All four tasks in canonical order.
std::vector<TaskSpec> default_tasks(std::size_t num_classes = 6);

struct TaskFieldConfig {
  std::size_t feature_dim = 64;
  std::size_t hidden = 64;
  double slope = 0.2;
  /// Ablation: each task carries its own density head.
  bool per_task_density = false;
};

struct FieldOutput {
  /// Shared raw density [N]; empty in per-task-density mode.
  Tensor sigma_raw;
  std::map<std::string, Tensor> task_sigma_raw;
  std::map<std::string, Tensor> values;

  /// Raw density that conditions `task`.
  const Tensor& sigma_for(const std::string& task) const;
};

/// Trunk MLP with one density head and per-task value heads.
class TaskFieldNet {
 public:
  TaskFieldNet() = default;
  TaskFieldNet(const TaskFieldConfig& cfg, const std::vector<TaskSpec>& tasks, Rng& rng);

  FieldOutput query(const Tensor& feats, const std::vector<TaskSpec>& tasks) const;

  const TaskFieldConfig& config() const { return cfg_; }
  bool has_head(const std::string& task) const { return heads_.count(task) != 0; }
  void parameters(const std::string& prefix, const TensorVisitor& fn);

  Linear& trunk(std::size_t i) { return i == 0 ? trunk1_ : trunk2_; }
  Linear& density_head() { return density_; }
  Linear& head(const std::string& task) { return heads_.at(task); }

 private:
  TaskFieldConfig cfg_;
  Linear trunk1_, trunk2_, density_;
  std::map<std::string, Linear> heads_;
  std::map<std::string, Linear> densities_;
};

inline FieldOutput query_field(const TaskFieldNet& net, const Tensor& feats, const std::vector<TaskSpec>& tasks) {
  return net.query(feats, tasks);
}

/// softplus(sigma_raw)
Tensor activate_density(const Tensor& sigma_raw);

}  // namespace tpmtl
