#include "tpmtl/evalcli/gradsuite.hpp"

#include <algorithm>
#include <functional>

#include "tpmtl/autodiff/gradcheck.hpp"
#include "tpmtl/autodiff/ops.hpp"
#include "tpmtl/core/error.hpp"
#include "tpmtl/mtl/batch.hpp"
#include "tpmtl/mtl/model.hpp"
#include "tpmtl/mtl/objective.hpp"
#include "tpmtl/scenes/dataset.hpp"

namespace tpmtl {

namespace {

constexpr double kTol = 1e-4;
constexpr double kEndToEndTol = 1e-3;

Tensor uniform(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0, bool grad = true) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v), grad);
}

// Magnitudes in [margin, 1] with random sign, keeping kinks at 0 outside the stencil.
Tensor away_from_zero(Shape shape, Rng& rng, double margin = 0.05) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) {
    const double m = rng.uniform(margin, 1.0);
    x = rng.bernoulli(0.5) ? m : -m;
  }
  return Tensor(std::move(shape), std::move(v), true);
}

// Random linear functional of y, so the checked scalar has a generic gradient.
Tensor project(const Tensor& y, const Tensor& r) { return sum(mul(y, r)); }

using Case = std::function<double(Rng&, int seed)>;

double check(const std::function<Tensor()>& f, const std::vector<Tensor>& leaves, double h = 1e-4, std::size_t cap = 0) {
  return check_gradients(f, leaves, h, cap).max_rel_error;
}

double unary_case(Tensor (*op)(const Tensor&), Tensor x, Rng& rng) {
  const Tensor r = uniform(op(x.detach()).shape(), rng, -1, 1, false);
  return check([&] { return project(op(x), r); }, {x});
}

struct Named {
  const char* name;
  double tol;
  Case run;
};

// Regularizer loss of a tiny model on one synthetic scene, differentiated
// with respect to a strided subset of encoder, tri-plane and field weights.
double end_to_end_case(Rng& rng, int seed) {
  DatasetSpec ds;
  ds.scene.num_classes = 3;
  ds.height = ds.width = 16;
  ds.train = 1;
  ds.test = 0;
  ds.seed = static_cast<std::uint64_t>(seed) + 1000;
  const Dataset data = generate_dataset(ds);

  ModelConfig cfg;
  cfg.tasks = default_tasks(3);
  cfg.encoder_channels = {3, 4, 4, 4};
  cfg.head_hidden = 2;
  cfg.triplane.in_channels = 4;
  cfg.triplane.plane_channels = 3;
  cfg.field.feature_dim = 3;
  cfg.field.hidden = 6;
  cfg.render.height = cfg.render.width = 4;
  cfg.render.samples = 6;
  cfg.render.mode = SampleMode::midpoint;
  Rng model_rng = rng.split();
  MultiTaskModel model(cfg, model_rng);
  const Batch batch = make_batch(data.split("train"), cfg.render.height, cfg.render.width);

  std::vector<Tensor> leaves;
  auto pick = [&](const std::string& name, Tensor& t) {
    if (name == "encoder.0.conv.weight" || name == "encoder.3.bn.gamma" || name == "reg.triplane.conv1.weight" ||
        name == "reg.triplane.conv2.bias" || name == "reg.field.trunk1.weight" || name == "reg.field.density.weight")
      leaves.push_back(t);
  };
  model.parameters(pick);
  if (leaves.size() != 6) throw ContractError("end-to-end gradient check could not find its parameters");

  auto loss = [&] {
    Rng dropout_rng(static_cast<std::uint64_t>(seed));
    const Tensor fmap = model.encode(batch.images);
    const std::vector<TriPlane> tps = model.triplanes(fmap, dropout_rng);
    const RayBatch rays = sample_along(make_rays(Camera{}, cfg.render.height, cfg.render.width), cfg.render.samples,
                                       SampleMode::midpoint, dropout_rng, cfg.render.near_offset);
    const RenderOutput out = render_rays(tps[0], model.field(), rays, model.tasks());
    Tensor total = Tensor::scalar(0.0);
    for (const TaskSpec& t : model.tasks()) {
      const Tensor& p = out.predictions.at(t.name());
      total = total + task_loss(t, p.reshape({p.numel() / t.value_dim, t.value_dim}), batch.render).value;
    }
    return total;
  };
  return check(loss, leaves, 1e-5, 8);
}

std::vector<Named> cases() {
  std::vector<Named> c;
  c.push_back({"add", kTol, [](Rng& rng, int) {
                 Tensor a = uniform({3, 4}, rng), b = uniform({3, 4}, rng), s = Tensor::scalar(0.3, true);
                 const Tensor r = uniform({3, 4}, rng, -1, 1, false);
                 return std::max(check([&] { return project(add(a, b), r); }, {a, b}),
                                 check([&] { return project(add(a, s), r); }, {a, s}));
               }});
  c.push_back({"sub", kTol, [](Rng& rng, int) {
                 Tensor a = uniform({3, 4}, rng), b = uniform({3, 4}, rng);
                 const Tensor r = uniform({3, 4}, rng, -1, 1, false);
                 return check([&] { return project(sub(a, b), r); }, {a, b});
               }});
  c.push_back({"mul", kTol, [](Rng& rng, int) {
                 Tensor a = uniform({3, 4}, rng), b = uniform({3, 4}, rng), s = Tensor::scalar(0.7, true);
                 const Tensor r = uniform({3, 4}, rng, -1, 1, false);
                 return std::max(check([&] { return project(mul(a, b), r); }, {a, b}),
                                 check([&] { return project(mul(s, a), r); }, {a, s}));
               }});
  c.push_back({"add_scalar", kTol, [](Rng& rng, int) { return unary_case([](const Tensor& x) { return add(x, 0.4); }, uniform({5}, rng), rng); }});
  c.push_back({"scale", kTol, [](Rng& rng, int) { return unary_case([](const Tensor& x) { return scale(x, -1.7); }, uniform({5}, rng), rng); }});
  c.push_back({"matmul", kTol, [](Rng& rng, int) {
                 Tensor a = uniform({3, 4}, rng), b = uniform({4, 2}, rng);
                 const Tensor r = uniform({3, 2}, rng, -1, 1, false);
                 return check([&] { return project(matmul(a, b), r); }, {a, b});
               }});
  c.push_back({"linear", kTol, [](Rng& rng, int) {
                 Tensor x = uniform({9, 5}, rng), w = uniform({5, 3}, rng), b = uniform({3}, rng);
                 const Tensor r = uniform({9, 3}, rng, -1, 1, false);
                 return check([&] { return project(linear(x, w, b), r); }, {x, w, b});
               }});
  c.push_back({"linear_leaky_relu", kTol, [](Rng& rng, int) {
                 Tensor x = uniform({9, 5}, rng), w = uniform({5, 12}, rng), b = uniform({12}, rng);
                 const Tensor r = uniform({9, 12}, rng, -1, 1, false);
                 return check([&] { return project(linear_leaky_relu(x, w, b, 0.2), r); }, {x, w, b});
               }});
  c.push_back({"conv2d_3x3", kTol, [](Rng& rng, int) {
                 Tensor x = uniform({2, 2, 5, 5}, rng), w = uniform({3, 2, 3, 3}, rng), b = uniform({3}, rng);
                 const Tensor r = uniform({2, 3, 5, 5}, rng, -1, 1, false);
                 return check([&] { return project(conv2d_3x3(x, w, b), r); }, {x, w, b});
               }});
  c.push_back({"avg_pool2x2", kTol, [](Rng& rng, int) { return unary_case(avg_pool2x2, uniform({2, 4, 6}, rng), rng); }});
  c.push_back({"upsample_nearest", kTol, [](Rng& rng, int) {
                 return unary_case([](const Tensor& x) { return upsample_nearest(x, 2); }, uniform({2, 3, 2}, rng), rng);
               }});
  c.push_back({"relu", kTol, [](Rng& rng, int) { return unary_case(relu, away_from_zero({4, 3}, rng), rng); }});
  c.push_back({"leaky_relu", kTol, [](Rng& rng, int) {
                 return unary_case([](const Tensor& x) { return leaky_relu(x, 0.2); }, away_from_zero({4, 3}, rng), rng);
               }});
  c.push_back({"softplus", kTol, [](Rng& rng, int) { return unary_case(softplus, uniform({4, 3}, rng, -5, 5), rng); }});
  c.push_back({"sigmoid", kTol, [](Rng& rng, int) { return unary_case(sigmoid, uniform({4, 3}, rng, -5, 5), rng); }});
  c.push_back({"exp", kTol, [](Rng& rng, int) { return unary_case(exp, uniform({4, 3}, rng, -2, 2), rng); }});
  c.push_back({"log", kTol, [](Rng& rng, int) { return unary_case(log, uniform({4, 3}, rng, 0.2, 3), rng); }});
  c.push_back({"softmax_lastdim", kTol, [](Rng& rng, int) { return unary_case(softmax_lastdim, uniform({4, 5}, rng, -3, 3), rng); }});
  c.push_back({"l2_normalize_lastdim", kTol, [](Rng& rng, int) { return unary_case(l2_normalize_lastdim, uniform({4, 3}, rng, -2, 2), rng); }});
  c.push_back({"sum", kTol, [](Rng& rng, int) { return unary_case(sum, uniform({4, 3}, rng), rng); }});
  c.push_back({"mean", kTol, [](Rng& rng, int) { return unary_case(mean, uniform({4, 3}, rng), rng); }});
  c.push_back({"permute", kTol, [](Rng& rng, int) {
                 return unary_case([](const Tensor& x) { return permute(x, {2, 0, 1}); }, uniform({2, 3, 4}, rng), rng);
               }});
  c.push_back({"slice", kTol, [](Rng& rng, int) {
                 return unary_case([](const Tensor& x) { return slice(x, 1, 1, 3); }, uniform({2, 3, 4}, rng), rng);
               }});
  c.push_back({"concat", kTol, [](Rng& rng, int) {
                 Tensor x = uniform({2, 3, 4}, rng), y = uniform({2, 1, 4}, rng);
                 const Tensor r = uniform({2, 4, 4}, rng, -1, 1, false);
                 return check([&] { return project(concat({x, y}, 1), r); }, {x, y});
               }});
  c.push_back({"reshape", kTol, [](Rng& rng, int) {
                 return unary_case([](const Tensor& x) { return x.reshape({6, 2}); }, uniform({3, 4}, rng), rng);
               }});
  c.push_back({"batchnorm2d", 1e-4, [](Rng& rng, int) {
                 Tensor x = uniform({2, 3, 4, 4}, rng, -2, 2), g = uniform({3}, rng, 0.5, 1.5), b = uniform({3}, rng);
                 const Tensor r = uniform({2, 3, 4, 4}, rng, -1, 1, false);
                 BatchNormStats stats(3);
                 return std::max(check([&] { return project(batchnorm2d(x, g, b, stats, Mode::train), r); }, {x, g, b}),
                                 check([&] { return project(batchnorm2d(x, g, b, stats, Mode::eval), r); }, {x, g, b}));
               }});
  c.push_back({"dropout", kTol, [](Rng& rng, int seed) {
                 Tensor x = uniform({50}, rng);
                 const Tensor r = uniform({50}, rng, -1, 1, false);
                 return check([&] {
                   Rng mask(static_cast<std::uint64_t>(seed));
                   return project(dropout(x, 0.15, mask, Mode::train), r);
                 }, {x});
               }});
  c.push_back({"bilinear_sample_2d", kTol, [](Rng& rng, int) {
                 Tensor plane = uniform({5, 5, 3}, rng), uv = uniform({20, 2}, rng, -0.95, 0.95);
                 const Tensor r = uniform({20, 3}, rng, -1, 1, false);
                 return check([&] { return project(bilinear_sample_2d(plane, uv), r); }, {plane, uv}, 1e-6);
               }});
  c.push_back({"triplane_sample", kTol, [](Rng& rng, int) {
                 Tensor xy = uniform({4, 4, 3}, rng), yz = uniform({4, 4, 3}, rng), xz = uniform({4, 4, 3}, rng);
                 Tensor pts = uniform({15, 3}, rng, -0.95, 0.95);
                 const Tensor r = uniform({15, 3}, rng, -1, 1, false);
                 return check([&] { return project(triplane_sample(xy, yz, xz, pts), r); }, {xy, yz, xz, pts}, 1e-6);
               }});
  c.push_back({"composite_weights", kTol, [](Rng& rng, int) {
                 Tensor sigma = uniform({6, 8}, rng, 0.0, 5.0);
                 const Tensor deltas = uniform({6, 8}, rng, 0.05, 0.3, false), r = uniform({6, 8}, rng, -1, 1, false);
                 return check([&] { return project(composite_weights(sigma, deltas), r); }, {sigma});
               }});
  c.push_back({"transmittance_final", kTol, [](Rng& rng, int) {
                 Tensor sigma = uniform({6, 8}, rng, 0.0, 5.0);
                 const Tensor deltas = uniform({6, 8}, rng, 0.05, 0.3, false), r = uniform({6}, rng, -1, 1, false);
                 return check([&] { return project(transmittance_final(sigma, deltas), r); }, {sigma});
               }});
  c.push_back({"weighted_sum_samples", kTol, [](Rng& rng, int) {
                 Tensor w = uniform({6, 8}, rng, 0.0, 1.0), v = uniform({6, 8, 3}, rng);
                 const Tensor r = uniform({6, 3}, rng, -1, 1, false);
                 return check([&] { return project(weighted_sum_samples(w, v), r); }, {w, v});
               }});
  c.push_back({"l1_loss", kTol, [](Rng& rng, int) {
                 Tensor pred = uniform({10, 3}, rng);
                 const Tensor target = sub(pred.detach(), away_from_zero({10, 3}, rng)).detach();
                 const std::vector<std::uint8_t> mask{1, 1, 0, 1, 1, 1, 0, 1, 1, 1};
                 return check([&] { return l1_loss(pred, target, mask); }, {pred});
               }});
  c.push_back({"nll_loss", kTol, [](Rng& rng, int) {
                 Tensor logits = uniform({10, 4}, rng, -2, 2);
                 const std::vector<int> labels{0, 1, 2, 3, 255, 1, 2, 0, 3, 1};
                 return check([&] { return nll_loss(softmax_lastdim(logits), labels); }, {logits});
               }});
  c.push_back({"bce_loss", kTol, [](Rng& rng, int) {
                 Tensor z = uniform({10}, rng, -3, 3);
                 const Tensor y({10}, {1, 0, 0, 1, 0, 0, 0, 1, 0, 0});
                 return check([&] { return bce_loss(sigmoid(z), y, 0.95); }, {z});
               }});
  c.push_back({"end_to_end_regularizer", kEndToEndTol, end_to_end_case});
  return c;
}

}  // namespace

std::vector<GradSuiteEntry> run_gradient_suite(int seeds) {
  if (seeds <= 0) throw ConfigError("gradient suite needs at least one seed");
  std::vector<GradSuiteEntry> out;
  std::uint64_t base = 0;
  for (const Named& c : cases()) {
    GradSuiteEntry e{c.name, 0.0, c.tol, seeds};
    for (int s = 0; s < seeds; ++s) {
      Rng rng(base + static_cast<std::uint64_t>(s));
      e.max_rel_error = std::max(e.max_rel_error, c.run(rng, s));
    }
    base += 1000;
    out.push_back(e);
  }
  return out;
}

}  // namespace tpmtl
