#include "tpmtl/mtl/objective.hpp"

#include <algorithm>

#include "tpmtl/core/error.hpp"

namespace tpmtl {

AlphaSchedule AlphaSchedule::half_ramp(long total_iters, double alpha_max) {
  return AlphaSchedule{alpha_max, total_iters / 2, total_iters};
}

void AlphaSchedule::validate() const {
  if (alpha_max < 0.0) throw ConfigError("alpha_max must be non-negative");
  if (ramp_iters < 0 || total_iters < 0) throw ConfigError("schedule lengths must be non-negative");
}

double alpha_at(const AlphaSchedule& s, long iter) {
  if (iter < 0) throw ConfigError("iteration must be non-negative");
  if (s.ramp_iters <= 0 || iter >= s.ramp_iters) return s.alpha_max;
  return s.alpha_max * (static_cast<double>(iter) / static_cast<double>(s.ramp_iters));
}

TaskLoss task_loss(const TaskSpec& spec, const Tensor& pred, const DenseTargets& targets) {
  const std::size_t rows = targets.rows();
  if (pred.rank() != 2 || pred.dim(0) != rows || pred.dim(1) != spec.value_dim) {
    throw DimensionError(spec.name() + " loss: prediction " + shape_str(pred.shape()) + " for " +
                         std::to_string(rows) + " target pixels");
  }
  TaskLoss out;
  switch (spec.loss) {
    case LossKind::cross_entropy:
      out.value = nll_loss(pred, targets.seg, 255);
      out.all_ignored = std::all_of(targets.seg.begin(), targets.seg.end(), [](int s) { return s == 255; });
      break;
    case LossKind::l1:
      out.value = l1_loss(pred, Tensor({rows, 1}, targets.depth));
      break;
    case LossKind::l1_normalized:
      out.value = l1_loss(pred, Tensor({rows, 3}, targets.normal), targets.normal_mask);
      out.all_ignored = std::none_of(targets.normal_mask.begin(), targets.normal_mask.end(), [](std::uint8_t m) { return m; });
      break;
    case LossKind::binary_cross_entropy:
      out.value = bce_loss(pred, Tensor({rows, 1}, targets.boundary), spec.pos_weight);
      break;
  }
  if (rows == 0) out.all_ignored = true;
  return out;
}

namespace {

Tensor stack_rows(const std::vector<RenderOutput>& renders, const std::string& task, std::size_t dim) {
  std::vector<Tensor> parts;
  for (const RenderOutput& r : renders) parts.push_back(r.predictions.at(task));
  const Tensor all = parts.size() == 1 ? parts[0] : concat(parts, 0);
  return all.reshape({all.numel() / dim, dim});
}

}  // namespace

ObjectiveTerms objective(MultiTaskModel& model, const Batch& batch, long iter, const AlphaSchedule& schedule,
                         const ObjectiveOptions& options, Rng& rng) {
  if (options.cross_view && !batch.pair_render) throw ConfigError("cross-view objective needs paired views with poses");
  if (options.cross_view && !model.has_regularizer()) throw ConfigError("cross-view objective needs the regularizer branch");
  ObjectiveTerms terms;
  terms.alpha = alpha_at(schedule, iter);
  const auto& tasks = model.tasks();

  const Tensor fmap = model.encode(batch.images);
  const auto raw = model.decode(fmap);
  std::map<std::string, Tensor> main_loss, reg_loss, cross_loss;
  for (const TaskSpec& t : tasks) {
    const Tensor pred = activate_dense(t, raw.at(t.name()));
    const TaskLoss l = task_loss(t, pred.reshape({batch.main.rows(), t.value_dim}), batch.main);
    terms.any_ignored |= l.all_ignored;
    main_loss.emplace(t.name(), l.value);
  }

  if (terms.alpha > 0.0 && model.has_aux_heads()) {
    const auto aux = model.decode_aux(fmap);
    for (const TaskSpec& t : tasks) {
      const Tensor pred = activate_dense(t, aux.at(t.name()));
      reg_loss.emplace(t.name(), task_loss(t, pred.reshape({batch.main.rows(), t.value_dim}), batch.main).value);
    }
  } else if (terms.alpha > 0.0 && model.has_regularizer()) {
    RenderConfig rc = model.config().render;
    if (options.sampling) rc.mode = *options.sampling;
    if (rc.height != batch.render.height || rc.width != batch.render.width) {
      throw DimensionError("batch render targets do not match the render resolution");
    }
    const std::vector<TriPlane> tps = model.triplanes(fmap, rng);
    const RayBatch base = make_rays(Camera{}, rc.height, rc.width);
    std::vector<RenderOutput> renders, cross_renders;
    for (std::size_t b = 0; b < tps.size(); ++b) {
      const RayBatch rays = sample_along(base, rc.samples, rc.mode, rng, rc.near_offset);
      renders.push_back(render_rays(tps[b], model.field(), rays, tasks));
      if (options.cross_view) {
        cross_renders.push_back(render_rays(tps[b], model.field(), transform_rays(rays, batch.delta_v.at(b)), tasks));
      }
    }
    for (const TaskSpec& t : tasks) {
      reg_loss.emplace(t.name(), task_loss(t, stack_rows(renders, t.name(), t.value_dim), batch.render).value);
      if (options.cross_view) {
        cross_loss.emplace(t.name(),
                           task_loss(t, stack_rows(cross_renders, t.name(), t.value_dim), *batch.pair_render).value);
      }
    }
  }

  Tensor total = Tensor::scalar(0.0);
  for (const TaskSpec& t : tasks) {
    Tensor term = main_loss.at(t.name());
    terms.main[t.name()] = term.item();
    if (reg_loss.count(t.name())) {
      const Tensor& r = reg_loss.at(t.name());
      terms.reg[t.name()] = r.item();
      term = term + terms.alpha * r;
    }
    if (cross_loss.count(t.name())) {
      const Tensor& c = cross_loss.at(t.name());
      terms.cross[t.name()] = c.item();
      term = term + terms.alpha * c;
    }
    total = total + t.loss_weight * term;
  }
  terms.total = total;
  return terms;
}

}  // namespace tpmtl
