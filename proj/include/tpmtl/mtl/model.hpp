#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tpmtl/renderer/renderer.hpp"

namespace tpmtl {

struct ModelConfig {
  std::vector<TaskSpec> tasks = default_tasks(6);
  /// Encoder widths of the four conv blocks; the last is the feature width C.
  std::vector<std::size_t> encoder_channels{32, 64, 64, 64};
  std::size_t head_hidden = 32;
  TriPlaneConfig triplane;
  TaskFieldConfig field;
  RenderConfig render;
  /// Build the tri-plane/field/render branch.
  bool regularizer = true;
  /// Build duplicate 2D heads (the auxiliary-heads comparison condition).
  bool aux_heads = false;

  std::size_t feature_channels() const { return encoder_channels.back(); }
  void validate() const;
};

/// Conv -> batch norm -> ReLU.
struct ConvBlock {
  ConvBlock() = default;
  ConvBlock(std::size_t in, std::size_t out, Rng& rng) : conv(in, out, rng), bn(out) {}
  Tensor operator()(const Tensor& x, Mode mode) { return relu(bn(conv(x), mode)); }
  void parameters(const std::string& prefix, const TensorVisitor& fn);
  void buffers(const std::string& prefix, const TensorVisitor& fn);
  Conv3x3 conv;
  BatchNorm bn;
};

/// Conv block at feature resolution, 2x upsample, conv to the task width,
/// 2x upsample back to input resolution.
struct DenseHead {
  DenseHead() = default;
  DenseHead(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng) : block(in, hidden, rng), out(hidden, out, rng) {}
  Tensor operator()(const Tensor& fmap, Mode mode);
  void parameters(const std::string& prefix, const TensorVisitor& fn);
  void buffers(const std::string& prefix, const TensorVisitor& fn);
  ConvBlock block;
  Conv3x3 out;
};

/// Shared encoder f, per-task decoders h_t and, in training, the regularizer
/// branch g_t (tri-plane encoder, task field, renderer).
class MultiTaskModel {
 public:
  MultiTaskModel() = default;
  MultiTaskModel(const ModelConfig& cfg, Rng& rng);

  const ModelConfig& config() const { return cfg_; }
  const std::vector<TaskSpec>& tasks() const { return cfg_.tasks; }
  Mode mode() const { return mode_; }
  void set_mode(Mode mode) { mode_ = mode; }
  bool has_regularizer() const { return cfg_.regularizer; }
  bool has_aux_heads() const { return cfg_.aux_heads; }

  /// images [B,3,H,W] -> features [B,C,H/4,W/4].
  Tensor encode(const Tensor& images);
  /// Pre-activation head outputs, [B,D,H,W] per task.
  std::map<std::string, Tensor> decode(const Tensor& fmap);
  std::map<std::string, Tensor> decode_aux(const Tensor& fmap);
  /// One tri-plane per image (square-cropped features). `rng` drives dropout.
  std::vector<TriPlane> triplanes(const Tensor& fmap, Rng& rng);
  const TaskFieldNet& field() const { return field_; }

  // Named parameter groups.
  void main_parameters(const TensorVisitor& fn);
  void aux_parameters(const TensorVisitor& fn);
  void regularizer_parameters(const TensorVisitor& fn);
  void parameters(const TensorVisitor& fn);
  /// Batch-norm running statistics.
  void buffers(const TensorVisitor& fn);

  /// Deep copy of every tensor.
  MultiTaskModel clone() const;
  /// Copies parameters and buffers by name from `other`; every name in this
  /// model must exist there with the same shape.
  void copy_from(MultiTaskModel& other);

 private:
  ModelConfig cfg_;
  Mode mode_ = Mode::train;
  std::vector<ConvBlock> encoder_;
  std::map<std::string, DenseHead> heads_;
  std::map<std::string, DenseHead> aux_;
  TriPlaneEncoder triplane_;
  TaskFieldNet field_;
};

/// Post-activated predictions [B,H,W,D] per task.
std::map<std::string, Tensor> forward_main(MultiTaskModel& model, const Tensor& images);
/// Pre-activation head outputs [B,D,H,W] per task.
std::map<std::string, Tensor> forward_main_raw(MultiTaskModel& model, const Tensor& images);

/// Applies the task's post-activation to [B,D,H,W] head output -> [B,H,W,D].
Tensor activate_dense(const TaskSpec& task, const Tensor& raw);

/// Renders every image of the batch through the regularizer branch.
/// Requires train mode.
std::vector<RenderOutput> forward_regularizer(MultiTaskModel& model, const Tensor& images, const Camera& cam, Rng& rng);

/// Deterministic look at the regularizer branch of a trained model: running
/// batch-norm statistics, no dropout, midpoint sampling.
std::vector<RenderOutput> inspect_regularizer(MultiTaskModel& model, const Tensor& images, const Camera& cam,
                                              std::optional<RenderConfig> render = std::nullopt);

/// Eval-mode copy holding only the encoder and the main heads.
MultiTaskModel strip_regularizer(const MultiTaskModel& model);

std::size_t parameter_count(MultiTaskModel& model);

}  // namespace tpmtl
