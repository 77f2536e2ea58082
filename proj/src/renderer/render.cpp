#include "tpmtl/core/error.hpp"
#include "tpmtl/renderer/renderer.hpp"

namespace tpmtl {

CompositeResult composite(const Tensor& sigma, const Tensor& values, const Tensor& deltas) {
  if (values.rank() != 3 || sigma.rank() != 2 || values.dim(0) != sigma.dim(0) || values.dim(1) != sigma.dim(1)) {
    throw DimensionError("composite expects sigma [P,S] and values [P,S,D], got " + shape_str(sigma.shape()) +
                         " and " + shape_str(values.shape()));
  }
  CompositeResult out;
  out.weights = composite_weights(sigma, deltas);
  out.transmittance_final = transmittance_final(sigma, deltas);
  out.rendered = weighted_sum_samples(out.weights, values);
  return out;
}

Tensor post_activate(const TaskSpec& task, const Tensor& rendered) {
  switch (task.post) {
    case PostActivation::softmax: return softmax_lastdim(rendered);
    case PostActivation::l2_normalize: return l2_normalize_lastdim(rendered);
    case PostActivation::sigmoid: return sigmoid(rendered);
    case PostActivation::identity: return rendered;
  }
  throw ConfigError("unknown post-activation for task " + task.name());
}

Tensor depth_from_density(const Tensor& weights, const Tensor& t_samples) {
  if (weights.shape() != t_samples.shape() || weights.rank() != 2) {
    throw DimensionError("depth_from_density expects matching [P,S], got " + shape_str(weights.shape()) + " and " +
                         shape_str(t_samples.shape()));
  }
  const std::size_t p = weights.dim(0), s = weights.dim(1);
  const auto w = weights.data(), t = t_samples.data();
  std::vector<double> d(p, 0.0);
  for (std::size_t r = 0; r < p; ++r)
    for (std::size_t i = 0; i < s; ++i) d[r] += w[r * s + i] * t[r * s + i];
  return Tensor({p}, std::move(d));
}

RenderOutput render_rays(const TriPlane& tp, const TaskFieldNet& net, const RayBatch& rays,
                         const std::vector<TaskSpec>& tasks) {
  if (tasks.empty()) throw ConfigError("render needs at least one task");
  const std::size_t p = rays.num_rays(), s = rays.num_samples();
  const Tensor feats = sample_triplane(tp, ray_points(rays));
  const FieldOutput field = net.query(feats, tasks);

  RenderOutput out;
  out.rays = rays;
  Tensor shared_sigma;
  if (!net.config().per_task_density) {
    shared_sigma = activate_density(field.sigma_raw).reshape({p, s});
    out.weights = composite_weights(shared_sigma, rays.deltas);
    out.transmittance_final = transmittance_final(shared_sigma, rays.deltas);
  }
  for (const TaskSpec& t : tasks) {
    const Tensor values = field.values.at(t.name()).reshape({p, s, t.value_dim});
    Tensor rendered;
    if (net.config().per_task_density) {
      const Tensor sigma = activate_density(field.sigma_for(t.name())).reshape({p, s});
      CompositeResult c = composite(sigma, values, rays.deltas);
      if (out.weights.numel() == 0) out.weights = c.weights, out.transmittance_final = c.transmittance_final;
      rendered = c.rendered;
    } else {
      rendered = weighted_sum_samples(out.weights, values);
    }
    out.predictions.emplace(t.name(), post_activate(t, rendered).reshape({rays.height, rays.width, t.value_dim}));
    out.raw.emplace(t.name(), rendered);
  }
  return out;
}

RenderOutput render_tasks(const TriPlane& tp, const TaskFieldNet& net, const Camera& cam, const RenderConfig& cfg,
                          const std::vector<TaskSpec>& tasks, Rng& rng) {
  const RayBatch rays = sample_along(make_rays(cam, cfg.height, cfg.width), cfg.samples, cfg.mode, rng, cfg.near_offset);
  return render_rays(tp, net, rays, tasks);
}

}  // namespace tpmtl
