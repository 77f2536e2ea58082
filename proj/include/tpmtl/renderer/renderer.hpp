#pragma once

#include <map>
#include <string>
#include <vector>

#include "tpmtl/renderer/camera.hpp"
#include "tpmtl/taskfields/taskfields.hpp"
#include "tpmtl/triplane/triplane.hpp"

namespace tpmtl {

enum class SampleMode { stratified, midpoint };

/// One ray per pixel with sample positions along it. Ray parameter t runs
/// from 0 at the near plane to `t_far` at the far plane.
struct RayBatch {
  std::size_t height = 0, width = 0;
  Tensor origins;     // [P,3]
  Tensor directions;  // [P,3], unit norm
  Tensor t_samples;   // [P,S], strictly increasing
  Tensor deltas;      // [P,S], t_{i+1} - t_i, last = t_far - t_S
  double t_far = Camera::depth_range();

  std::size_t num_rays() const { return height * width; }
  std::size_t num_samples() const { return t_samples.rank() == 2 ? t_samples.dim(1) : 0; }
};

struct RenderConfig {
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t samples = 32;
  SampleMode mode = SampleMode::stratified;
  double near_offset = 1e-3;

  /// "nyu" (56x72) or "desk" (32x32).
  static RenderConfig preset(const std::string& name);
};

struct CompositeResult {
  Tensor rendered;             // [P,D]
  Tensor weights;              // [P,S]
  Tensor transmittance_final;  // [P]
};

struct RenderOutput {
  /// Post-activated predictions, [H,W,D] per task.
  std::map<std::string, Tensor> predictions;
  /// Composited values before post-activation, [P,D] per task.
  std::map<std::string, Tensor> raw;
  /// Weights and final transmittance of the shared density (or of the first
  /// task in per-task-density mode).
  Tensor weights;
  Tensor transmittance_final;
  RayBatch rays;
};

RayBatch make_rays(const Camera& cam, std::size_t height, std::size_t width);

/// Fills t_samples/deltas with S samples over [near_offset, t_far]: one
/// uniform draw per bin (stratified) or bin centers (midpoint).
RayBatch sample_along(const RayBatch& rays, std::size_t samples, SampleMode mode, Rng& rng,
                      double near_offset = 1e-3);

/// Sample points o + t d, [P*S,3].
Tensor ray_points(const RayBatch& rays);

/// Maps origins and directions by `delta_v`. Rigid motions preserve the ray
/// parameterization, so the sample parameters carry over unchanged.
RayBatch transform_rays(const RayBatch& rays, const RigidTransform& delta_v);

/// Alpha compositing of per-sample values [P,S,D] under densities [P,S].
CompositeResult composite(const Tensor& sigma, const Tensor& values, const Tensor& deltas);

/// Applies the task's post-activation over the last dimension.
Tensor post_activate(const TaskSpec& task, const Tensor& rendered);

/// Expected termination sum_i w_i t_i per ray, [P]. Not differentiable.
Tensor depth_from_density(const Tensor& weights, const Tensor& t_samples);

/// Renders already-sampled rays through the tri-plane and field.
RenderOutput render_rays(const TriPlane& tp, const TaskFieldNet& net, const RayBatch& rays,
                         const std::vector<TaskSpec>& tasks);

/// make_rays -> sample_along -> render_rays.
RenderOutput render_tasks(const TriPlane& tp, const TaskFieldNet& net, const Camera& cam,
                          const RenderConfig& cfg, const std::vector<TaskSpec>& tasks, Rng& rng);

}  // namespace tpmtl
