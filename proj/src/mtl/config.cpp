#include "tpmtl/mtl/config.hpp"

#include <fstream>
#include <set>

#include "tpmtl/core/error.hpp"

namespace tpmtl {

using nlohmann::json;

ModelConfig TrainConfig::effective_model() const {
  ModelConfig m = model;
  if (aux_heads_baseline) m.regularizer = false, m.aux_heads = true;
  return m;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (total_iters < 0) throw ConfigError("total_iters must be non-negative");
  if (!(adam.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (log_every < 1 || checkpoint_every < 1) throw ConfigError("log and checkpoint intervals must be positive");
  if (cross_view && aux_heads_baseline) throw ConfigError("cross-view needs the regularizer branch, not auxiliary heads");
  alpha.validate();
  effective_model().validate();
}

std::string sample_mode_name(SampleMode mode) { return mode == SampleMode::midpoint ? "midpoint" : "stratified"; }

SampleMode parse_sample_mode(const std::string& name) {
  if (name == "midpoint") return SampleMode::midpoint;
  if (name == "stratified") return SampleMode::stratified;
  throw ConfigError("unknown sampling mode '" + name + "'");
}

json to_json(const ModelConfig& c) {
  json tasks = json::array();
  for (const TaskSpec& t : c.tasks) {
    tasks.push_back({{"name", t.name()}, {"value_dim", t.value_dim}, {"loss_weight", t.loss_weight},
                     {"pos_weight", t.pos_weight}});
  }
  return {{"tasks", tasks},
          {"encoder_channels", c.encoder_channels},
          {"head_hidden", c.head_hidden},
          {"triplane", {{"in_channels", c.triplane.in_channels},
                        {"plane_channels", c.triplane.plane_channels},
                        {"dropout", c.triplane.dropout}}},
          {"field", {{"feature_dim", c.field.feature_dim},
                     {"hidden", c.field.hidden},
                     {"slope", c.field.slope},
                     {"per_task_density", c.field.per_task_density}}},
          {"render", {{"height", c.render.height},
                      {"width", c.render.width},
                      {"samples", c.render.samples},
                      {"mode", sample_mode_name(c.render.mode)},
                      {"near_offset", c.render.near_offset}}},
          {"regularizer", c.regularizer},
          {"aux_heads", c.aux_heads}};
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  try {
    reject_unknown(j, {"tasks", "encoder_channels", "head_hidden", "triplane", "field", "render", "regularizer", "aux_heads", "num_classes"},
                   "model");
    std::size_t num_classes = 6;
    read(j, "num_classes", num_classes);
    if (j.contains("tasks")) {
      c.tasks.clear();
      for (const json& t : j.at("tasks")) {
        const std::string name = t.is_string() ? t.get<std::string>() : t.at("name").get<std::string>();
        TaskSpec spec = make_task(parse_task_kind(name), num_classes);
        if (t.is_object()) {
          read(t, "value_dim", spec.value_dim);
          read(t, "loss_weight", spec.loss_weight);
          read(t, "pos_weight", spec.pos_weight);
        }
        spec.validate();
        c.tasks.push_back(spec);
      }
    } else {
      c.tasks = default_tasks(num_classes);
    }
    read(j, "encoder_channels", c.encoder_channels);
    read(j, "head_hidden", c.head_hidden);
    if (j.contains("triplane")) {
      const json& t = j.at("triplane");
      reject_unknown(t, {"in_channels", "plane_channels", "dropout"}, "model.triplane");
      read(t, "in_channels", c.triplane.in_channels);
      read(t, "plane_channels", c.triplane.plane_channels);
      read(t, "dropout", c.triplane.dropout);
    }
    if (j.contains("field")) {
      const json& f = j.at("field");
      reject_unknown(f, {"feature_dim", "hidden", "slope", "per_task_density"}, "model.field");
      read(f, "feature_dim", c.field.feature_dim);
      read(f, "hidden", c.field.hidden);
      read(f, "slope", c.field.slope);
      read(f, "per_task_density", c.field.per_task_density);
    }
    if (j.contains("render")) {
      const json& r = j.at("render");
      reject_unknown(r, {"height", "width", "samples", "mode", "near_offset", "preset"}, "model.render");
      if (r.contains("preset")) c.render = RenderConfig::preset(r.at("preset").get<std::string>());
      read(r, "height", c.render.height);
      read(r, "width", c.render.width);
      read(r, "samples", c.render.samples);
      if (r.contains("mode")) c.render.mode = parse_sample_mode(r.at("mode").get<std::string>());
      read(r, "near_offset", c.render.near_offset);
    }
    read(j, "regularizer", c.regularizer);
    read(j, "aux_heads", c.aux_heads);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad model configuration: ") + e.what());
  }
  return c;
}

json to_json(const TrainConfig& c) {
  return {{"model", to_json(c.model)},
          {"batch_size", c.batch_size},
          {"total_iters", c.total_iters},
          {"adam", {{"lr", c.adam.lr}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
          {"seed", c.seed},
          {"data_dir", c.data_dir},
          {"out_dir", c.out_dir},
          {"cross_view", c.cross_view},
          {"aux_heads_baseline", c.aux_heads_baseline},
          {"alpha", {{"alpha_max", c.alpha.alpha_max},
                     {"ramp_iters", c.alpha.ramp_iters},
                     {"total_iters", c.alpha.total_iters}}},
          {"log_every", c.log_every},
          {"checkpoint_every", c.checkpoint_every}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  try {
    reject_unknown(j, {"model", "batch_size", "total_iters", "adam", "seed", "data_dir", "out_dir", "cross_view",
                       "aux_heads_baseline", "alpha", "log_every", "checkpoint_every"},
                   "config");
    if (j.contains("model")) c.model = model_config_from_json(j.at("model"));
    read(j, "batch_size", c.batch_size);
    read(j, "total_iters", c.total_iters);
    c.alpha = AlphaSchedule::half_ramp(c.total_iters);
    if (j.contains("adam")) {
      const json& a = j.at("adam");
      reject_unknown(a, {"lr", "beta1", "beta2", "eps"}, "adam");
      read(a, "lr", c.adam.lr);
      read(a, "beta1", c.adam.beta1);
      read(a, "beta2", c.adam.beta2);
      read(a, "eps", c.adam.eps);
    }
    read(j, "seed", c.seed);
    read(j, "data_dir", c.data_dir);
    read(j, "out_dir", c.out_dir);
    read(j, "cross_view", c.cross_view);
    read(j, "aux_heads_baseline", c.aux_heads_baseline);
    if (j.contains("alpha")) {
      const json& a = j.at("alpha");
      reject_unknown(a, {"alpha_max", "ramp_iters", "total_iters"}, "alpha");
      read(a, "alpha_max", c.alpha.alpha_max);
      read(a, "ramp_iters", c.alpha.ramp_iters);
      read(a, "total_iters", c.alpha.total_iters);
    }
    read(j, "log_every", c.log_every);
    read(j, "checkpoint_every", c.checkpoint_every);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad training configuration: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return train_config_from_json(j);
}

}  // namespace tpmtl
