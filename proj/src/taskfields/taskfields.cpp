#include "tpmtl/taskfields/taskfields.hpp"

#include "tpmtl/core/error.hpp"

namespace tpmtl {

std::string task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::segmentation: return "segmentation";
    case TaskKind::depth: return "depth";
    case TaskKind::normal: return "normal";
    case TaskKind::boundary: return "boundary";
  }
  throw ConfigError("unknown task kind");
}

TaskKind parse_task_kind(const std::string& name) {
  if (name == "segmentation" || name == "seg") return TaskKind::segmentation;
  if (name == "depth") return TaskKind::depth;
  if (name == "normal" || name == "normals") return TaskKind::normal;
  if (name == "boundary" || name == "edge") return TaskKind::boundary;
  throw ConfigError("unknown task '" + name + "'");
}

std::string TaskSpec::name() const { return task_name(kind); }

void TaskSpec::validate() const {
  switch (post) {
    case PostActivation::softmax:
      if (value_dim < 2) throw ConfigError(name() + ": softmax needs value_dim >= 2");
      break;
    case PostActivation::l2_normalize:
      if (value_dim < 1) throw ConfigError(name() + ": normalization needs value_dim >= 1");
      break;
    case PostActivation::identity:
    case PostActivation::sigmoid:
      if (value_dim != 1) throw ConfigError(name() + ": scalar task needs value_dim 1");
      break;
  }
  if (loss == LossKind::binary_cross_entropy && !(pos_weight > 0.0 && pos_weight < 1.0)) {
    throw ConfigError(name() + ": pos_weight must lie in (0,1)");
  }
}

TaskSpec make_task(TaskKind kind, std::size_t num_classes) {
  TaskSpec s;
  s.kind = kind;
  switch (kind) {
    case TaskKind::segmentation:
      s.value_dim = num_classes, s.post = PostActivation::softmax, s.loss = LossKind::cross_entropy;
      break;
    case TaskKind::depth:
      s.value_dim = 1, s.post = PostActivation::identity, s.loss = LossKind::l1;
      break;
    case TaskKind::normal:
      s.value_dim = 3, s.post = PostActivation::l2_normalize, s.loss = LossKind::l1_normalized;
      break;
    case TaskKind::boundary:
      s.value_dim = 1, s.post = PostActivation::sigmoid, s.loss = LossKind::binary_cross_entropy;
      break;
  }
  s.validate();
  return s;
}

std::vector<TaskSpec> default_tasks(std::size_t num_classes) {
  return {make_task(TaskKind::segmentation, num_classes), make_task(TaskKind::depth),
          make_task(TaskKind::normal), make_task(TaskKind::boundary)};
}

const Tensor& FieldOutput::sigma_for(const std::string& task) const {
  if (!task_sigma_raw.empty()) return task_sigma_raw.at(task);
  return sigma_raw;
}

TaskFieldNet::TaskFieldNet(const TaskFieldConfig& cfg, const std::vector<TaskSpec>& tasks, Rng& rng)
    : cfg_(cfg),
      trunk1_(cfg.feature_dim, cfg.hidden, rng),
      trunk2_(cfg.hidden, cfg.hidden, rng),
      density_(cfg.hidden, 1, rng) {
  if (!(cfg.slope > 0.0 && cfg.slope < 1.0)) throw ConfigError("leaky slope must lie in (0,1)");
  for (const TaskSpec& t : tasks) {
    t.validate();
    heads_.emplace(t.name(), Linear(cfg.hidden, t.value_dim, rng));
    if (cfg.per_task_density) densities_.emplace(t.name(), Linear(cfg.hidden, 1, rng));
  }
}

FieldOutput TaskFieldNet::query(const Tensor& feats, const std::vector<TaskSpec>& tasks) const {
  if (feats.rank() != 2 || feats.dim(1) != cfg_.feature_dim) {
    throw DimensionError("query_field expects [N," + std::to_string(cfg_.feature_dim) + "], got " +
                         shape_str(feats.shape()));
  }
  for (const TaskSpec& t : tasks) {
    if (!heads_.count(t.name())) throw ConfigError("no field head for task '" + t.name() + "'");
  }
  const std::size_t n = feats.dim(0);
  const Tensor h = linear_leaky_relu(linear_leaky_relu(feats, trunk1_.weight, trunk1_.bias, cfg_.slope),
                                     trunk2_.weight, trunk2_.bias, cfg_.slope);
  // every output head reads h, so they run as one wide linear and are split by column
  std::vector<const Linear*> layers;
  if (cfg_.per_task_density) {
    for (const TaskSpec& t : tasks) layers.push_back(&densities_.at(t.name()));
  } else {
    layers.push_back(&density_);
  }
  for (const TaskSpec& t : tasks) layers.push_back(&heads_.at(t.name()));
  std::vector<Tensor> ws, bs;
  for (const Linear* l : layers) {
    ws.push_back(l->weight);
    bs.push_back(l->bias);
  }
  const Tensor all = linear(h, concat(ws, 1), concat(bs, 0));
  std::size_t col = 0;
  auto take = [&](const Linear* l) {
    const std::size_t width = l->weight.dim(1);
    Tensor part = slice(all, 1, col, col + width);
    col += width;
    return part;
  };
  FieldOutput out;
  std::size_t li = 0;
  if (cfg_.per_task_density) {
    for (const TaskSpec& t : tasks) out.task_sigma_raw.emplace(t.name(), take(layers[li++]).reshape({n}));
  } else {
    out.sigma_raw = take(layers[li++]).reshape({n});
  }
  for (const TaskSpec& t : tasks) out.values.emplace(t.name(), take(layers[li++]));
  return out;
}

void TaskFieldNet::parameters(const std::string& prefix, const TensorVisitor& fn) {
  trunk1_.parameters(prefix + ".trunk1", fn);
  trunk2_.parameters(prefix + ".trunk2", fn);
  if (cfg_.per_task_density) {
    for (auto& [name, d] : densities_) d.parameters(prefix + ".density." + name, fn);
  } else {
    density_.parameters(prefix + ".density", fn);
  }
  for (auto& [name, h] : heads_) h.parameters(prefix + ".head." + name, fn);
}

Tensor activate_density(const Tensor& sigma_raw) { return softplus(sigma_raw); }

}  // namespace tpmtl
