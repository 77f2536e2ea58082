#include "tpmtl/mtl/model.hpp"

#include "tpmtl/core/error.hpp"

namespace tpmtl {

namespace {

constexpr std::size_t kEncoderStride = 4;

}  // namespace

void ModelConfig::validate() const {
  if (tasks.empty()) throw ConfigError("model needs at least one task");
  for (const TaskSpec& t : tasks) t.validate();
  if (encoder_channels.size() != 4) throw ConfigError("encoder has exactly four conv blocks");
  for (std::size_t c : encoder_channels)
    if (c == 0) throw ConfigError("encoder widths must be positive");
  if (head_hidden == 0) throw ConfigError("head width must be positive");
  if (regularizer && triplane.in_channels != feature_channels()) {
    throw ConfigError("tri-plane input width must equal the encoder feature width");
  }
  if (regularizer && field.feature_dim != triplane.plane_channels) {
    throw ConfigError("field input width must equal the tri-plane channel width");
  }
}

void ConvBlock::parameters(const std::string& prefix, const TensorVisitor& fn) {
  conv.parameters(prefix + ".conv", fn);
  bn.parameters(prefix + ".bn", fn);
}

void ConvBlock::buffers(const std::string& prefix, const TensorVisitor& fn) { bn.buffers(prefix + ".bn", fn); }

Tensor DenseHead::operator()(const Tensor& fmap, Mode mode) {
  return upsample_nearest(out(upsample_nearest(block(fmap, mode), 2)), 2);
}

void DenseHead::parameters(const std::string& prefix, const TensorVisitor& fn) {
  block.parameters(prefix + ".block", fn);
  out.parameters(prefix + ".out", fn);
}

void DenseHead::buffers(const std::string& prefix, const TensorVisitor& fn) { block.buffers(prefix + ".block", fn); }

MultiTaskModel::MultiTaskModel(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  std::size_t in = 3;
  for (std::size_t c : cfg_.encoder_channels) {
    encoder_.emplace_back(in, c, rng);
    in = c;
  }
  for (const TaskSpec& t : cfg_.tasks) heads_.emplace(t.name(), DenseHead(in, cfg_.head_hidden, t.value_dim, rng));
  if (cfg_.aux_heads) {
    for (const TaskSpec& t : cfg_.tasks) aux_.emplace(t.name(), DenseHead(in, cfg_.head_hidden, t.value_dim, rng));
  }
  if (cfg_.regularizer) {
    triplane_ = TriPlaneEncoder(cfg_.triplane, rng);
    field_ = TaskFieldNet(cfg_.field, cfg_.tasks, rng);
  }
}

Tensor MultiTaskModel::encode(const Tensor& images) {
  if (images.rank() != 4 || images.dim(1) != 3) {
    throw DimensionError("images must be [B,3,H,W], got " + shape_str(images.shape()));
  }
  if (images.dim(2) % kEncoderStride != 0 || images.dim(3) % kEncoderStride != 0) {
    throw DimensionError("image size " + shape_str(images.shape()) + " is not divisible by the encoder stride 4");
  }
  Tensor h = encoder_[0](images, mode_);
  h = encoder_[1](avg_pool2x2(h), mode_);
  h = encoder_[2](avg_pool2x2(h), mode_);
  return encoder_[3](h, mode_);
}

std::map<std::string, Tensor> MultiTaskModel::decode(const Tensor& fmap) {
  std::map<std::string, Tensor> out;
  for (const TaskSpec& t : cfg_.tasks) out.emplace(t.name(), heads_.at(t.name())(fmap, mode_));
  return out;
}

std::map<std::string, Tensor> MultiTaskModel::decode_aux(const Tensor& fmap) {
  if (!cfg_.aux_heads) throw ContractError("model has no auxiliary heads");
  std::map<std::string, Tensor> out;
  for (const TaskSpec& t : cfg_.tasks) out.emplace(t.name(), aux_.at(t.name())(fmap, mode_));
  return out;
}

std::vector<TriPlane> MultiTaskModel::triplanes(const Tensor& fmap, Rng& rng) {
  if (!cfg_.regularizer) throw ContractError("model has no regularizer branch");
  return encode_triplanes(triplane_, center_square(fmap), mode_, rng);
}

void MultiTaskModel::main_parameters(const TensorVisitor& fn) {
  for (std::size_t i = 0; i < encoder_.size(); ++i) encoder_[i].parameters("encoder." + std::to_string(i), fn);
  for (auto& [name, h] : heads_) h.parameters("head." + name, fn);
}

void MultiTaskModel::aux_parameters(const TensorVisitor& fn) {
  for (auto& [name, h] : aux_) h.parameters("aux." + name, fn);
}

void MultiTaskModel::regularizer_parameters(const TensorVisitor& fn) {
  if (!cfg_.regularizer) return;
  triplane_.parameters("reg.triplane", fn);
  field_.parameters("reg.field", fn);
}

void MultiTaskModel::parameters(const TensorVisitor& fn) {
  main_parameters(fn);
  aux_parameters(fn);
  regularizer_parameters(fn);
}

void MultiTaskModel::buffers(const TensorVisitor& fn) {
  for (std::size_t i = 0; i < encoder_.size(); ++i) encoder_[i].buffers("encoder." + std::to_string(i), fn);
  for (auto& [name, h] : heads_) h.buffers("head." + name, fn);
  for (auto& [name, h] : aux_) h.buffers("aux." + name, fn);
  if (cfg_.regularizer) triplane_.buffers("reg.triplane", fn);
}

MultiTaskModel MultiTaskModel::clone() const {
  Rng rng(0);
  MultiTaskModel copy(cfg_, rng);
  copy.mode_ = mode_;
  MultiTaskModel shallow = *this;
  copy.copy_from(shallow);
  return copy;
}

void MultiTaskModel::copy_from(MultiTaskModel& other) {
  std::map<std::string, Tensor> source;
  auto collect = [&](const std::string& name, Tensor& t) { source.emplace(name, t); };
  other.parameters(collect);
  other.buffers(collect);
  auto assign = [&](const std::string& name, Tensor& t) {
    const auto it = source.find(name);
    if (it == source.end()) throw ValidationError("missing tensor '" + name + "'");
    if (it->second.shape() != t.shape()) {
      throw ValidationError("tensor '" + name + "' has shape " + shape_str(it->second.shape()) + ", expected " +
                            shape_str(t.shape()));
    }
    const auto src = it->second.data();
    std::copy(src.begin(), src.end(), t.mutable_data().begin());
  };
  parameters(assign);
  buffers(assign);
}

Tensor activate_dense(const TaskSpec& task, const Tensor& raw) {
  return post_activate(task, permute(raw, {0, 2, 3, 1}));
}

std::map<std::string, Tensor> forward_main_raw(MultiTaskModel& model, const Tensor& images) {
  return model.decode(model.encode(images));
}

std::map<std::string, Tensor> forward_main(MultiTaskModel& model, const Tensor& images) {
  std::map<std::string, Tensor> raw = forward_main_raw(model, images);
  std::map<std::string, Tensor> out;
  for (const TaskSpec& t : model.tasks()) out.emplace(t.name(), activate_dense(t, raw.at(t.name())));
  return out;
}

std::vector<RenderOutput> forward_regularizer(MultiTaskModel& model, const Tensor& images, const Camera& cam,
                                              Rng& rng) {
  if (model.mode() != Mode::train) throw ContractError("the regularizer branch only runs in train mode");
  const std::vector<TriPlane> tps = model.triplanes(model.encode(images), rng);
  std::vector<RenderOutput> out;
  for (const TriPlane& tp : tps) out.push_back(render_tasks(tp, model.field(), cam, model.config().render, model.tasks(), rng));
  return out;
}

std::vector<RenderOutput> inspect_regularizer(MultiTaskModel& model, const Tensor& images, const Camera& cam,
                                              std::optional<RenderConfig> render) {
  RenderConfig cfg = render.value_or(model.config().render);
  cfg.mode = SampleMode::midpoint;
  const Mode saved = model.mode();
  model.set_mode(Mode::eval);
  Rng rng(0);
  std::vector<RenderOutput> out;
  try {
    for (const TriPlane& tp : model.triplanes(model.encode(images), rng))
      out.push_back(render_tasks(tp, model.field(), cam, cfg, model.tasks(), rng));
  } catch (...) {
    model.set_mode(saved);
    throw;
  }
  model.set_mode(saved);
  return out;
}

MultiTaskModel strip_regularizer(const MultiTaskModel& model) {
  ModelConfig cfg = model.config();
  cfg.regularizer = false;
  cfg.aux_heads = false;
  Rng rng(0);
  MultiTaskModel stripped(cfg, rng);
  MultiTaskModel shallow = model;
  stripped.copy_from(shallow);
  stripped.set_mode(Mode::eval);
  return stripped;
}

std::size_t parameter_count(MultiTaskModel& model) {
  return count_elements([&](const TensorVisitor& fn) { model.parameters(fn); });
}

}  // namespace tpmtl
