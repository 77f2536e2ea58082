#pragma once

#include <map>
#include <string>

#include "tpmtl/mtl/batch.hpp"
#include "tpmtl/mtl/model.hpp"

namespace tpmtl {

struct AlphaSchedule {
  double alpha_max = 4.0;
  long ramp_iters = 20000;
  long total_iters = 40000;

  /// Ramp over the first half of training.
  static AlphaSchedule half_ramp(long total_iters, double alpha_max = 4.0);
  void validate() const;
};

/// alpha_max * min(1, iter / ramp_iters)
double alpha_at(const AlphaSchedule& schedule, long iter);

struct TaskLoss {
  Tensor value;
  /// Every pixel was ignored; `value` is an exact zero.
  bool all_ignored = false;
};

/// Mean loss over valid pixels. `pred` holds post-activated rows
/// [targets.rows(), value_dim].
TaskLoss task_loss(const TaskSpec& spec, const Tensor& pred, const DenseTargets& targets);

struct ObjectiveTerms {
  Tensor total;
  double alpha = 0.0;
  std::map<std::string, double> main, reg, cross;
  bool any_ignored = false;
};

struct ObjectiveOptions {
  bool cross_view = false;
  /// Overrides the model's render sampling mode.
  std::optional<SampleMode> sampling;
};

/// sum_t w_t [L_t(h_t f(I)) + a L_t(g_t f(I)) + a L_t(g_t^dV f(I))], with
/// a = alpha_at(schedule, iter). With a == 0 the regularizer branch is not
/// evaluated. Models built with auxiliary heads use them in place of g_t.
ObjectiveTerms objective(MultiTaskModel& model, const Batch& batch, long iter, const AlphaSchedule& schedule,
                         const ObjectiveOptions& options, Rng& rng);

}  // namespace tpmtl
