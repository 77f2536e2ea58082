#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support/random_tensor.hpp"
#include "tpmtl/autodiff/gradcheck.hpp"
#include "tpmtl/core/error.hpp"
#include "tpmtl/renderer/renderer.hpp"

namespace tpmtl {
namespace {

using testing::random_tensor;

// Rays with explicit parameters, bypassing make_rays.
Tensor uniform_deltas(std::size_t p, std::size_t s, double d) { return Tensor::full({p, s}, d); }

TEST(CameraTest, RotationValidation) {
  RigidTransform t = RigidTransform::axis_angle({0, 1, 0}, 0.7);
  EXPECT_NO_THROW(t.validate());
  t.rotation[0] += 1e-6;
  EXPECT_THROW(t.validate(), ValidationError);
  RigidTransform mirror;
  mirror.rotation[0] = -1.0;
  EXPECT_THROW(mirror.validate(), ValidationError);
}

TEST(CameraTest, RelativeTransformComposes) {
  Camera a, b;
  a.pose = compose(RigidTransform::translate(0.1, -0.2, 0.3), RigidTransform::axis_angle({1, 1, 0}, 0.4));
  b.pose = compose(RigidTransform::translate(-0.3, 0.0, 0.2), RigidTransform::axis_angle({0, 0, 1}, -0.9));
  const RigidTransform dv = relative_transform(a, b);
  EXPECT_LT(max_abs_diff(compose(dv, a.pose), b.pose), 1e-12);
  EXPECT_LT(max_abs_diff(compose(dv, dv.inverse()), RigidTransform::identity()), 1e-12);
}

TEST(MakeRaysTest, SinglePixelIsCenterRay) {
  const RayBatch r = make_rays(Camera{}, 1, 1);
  EXPECT_EQ(std::vector<double>(r.origins.data().begin(), r.origins.data().end()), (std::vector<double>{0, 0, -1}));
  EXPECT_EQ(std::vector<double>(r.directions.data().begin(), r.directions.data().end()),
            (std::vector<double>{0, 0, 1}));
}

TEST(MakeRaysTest, HalfTurnAboutYReversesDirection) {
  Camera cam;
  cam.pose = RigidTransform::axis_angle({0, 1, 0}, std::numbers::pi);
  const RayBatch r = make_rays(cam, 1, 1);
  EXPECT_NEAR(r.directions.at(0), 0.0, 1e-15);
  EXPECT_NEAR(r.directions.at(1), 0.0, 1e-15);
  EXPECT_NEAR(r.directions.at(2), -1.0, 1e-15);
}

TEST(MakeRaysTest, NyuPresetAndUnitDirections) {
  const RenderConfig cfg = RenderConfig::preset("nyu");
  EXPECT_EQ(cfg.height, 56u);
  EXPECT_EQ(cfg.width, 72u);
  Camera cam;
  cam.pose = RigidTransform::axis_angle({0.3, -1, 0.2}, 0.5);
  const RayBatch r = make_rays(cam, cfg.height, cfg.width);
  EXPECT_EQ(r.num_rays(), 56u * 72u);
  for (std::size_t i = 0; i < r.num_rays(); ++i) {
    const double* d = r.directions.data().data() + 3 * i;
    EXPECT_NEAR(std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]), 1.0, 1e-12);
  }
  EXPECT_THROW(RenderConfig::preset("imagenet"), ConfigError);
}

TEST(SampleAlongTest, MidpointTwoSamples) {
  Rng rng(0);
  const RayBatch r = sample_along(make_rays(Camera{}, 1, 1), 2, SampleMode::midpoint, rng, 0.0);
  EXPECT_DOUBLE_EQ(r.t_samples.at(0), 0.5);
  EXPECT_DOUBLE_EQ(r.t_samples.at(1), 1.5);
  EXPECT_DOUBLE_EQ(r.deltas.at(0), 1.0);
  EXPECT_DOUBLE_EQ(r.deltas.at(1), 0.5);
}

TEST(SampleAlongTest, StratifiedSamplesStayInBins) {
  Rng rng(1);
  const std::size_t s = 16;
  const double off = 1e-3, width = (2.0 - off) / s;
  const RayBatch r = sample_along(make_rays(Camera{}, 4, 5), s, SampleMode::stratified, rng, off);
  for (std::size_t p = 0; p < r.num_rays(); ++p) {
    for (std::size_t i = 0; i < s; ++i) {
      const double t = r.t_samples.at(p * s + i);
      EXPECT_GE(t, off + i * width - 1e-15);
      EXPECT_LE(t, off + (i + 1) * width + 1e-15);
      EXPECT_GT(r.deltas.at(p * s + i), 0.0);
      if (i > 0) {
        EXPECT_GT(t, r.t_samples.at(p * s + i - 1));
      }
    }
  }
}

TEST(SampleAlongTest, DoublingSamplesHalvesBinWidth) {
  Rng rng(2);
  auto max_delta = [&](std::size_t s) {
    const RayBatch r = sample_along(make_rays(Camera{}, 1, 1), s, SampleMode::midpoint, rng, 1e-3);
    double m = 0.0;
    for (double d : r.deltas.data()) m = std::max(m, d);
    return m;
  };
  EXPECT_NEAR(max_delta(32), 0.5 * max_delta(16), 1e-14);
}

TEST(CompositeTest, EmptySpace) {
  const CompositeResult c = composite(Tensor::zeros({2, 4}), Tensor::full({2, 4, 3}, 5.0), uniform_deltas(2, 4, 0.5));
  for (double w : c.weights.data()) EXPECT_EQ(w, 0.0);
  for (double v : c.rendered.data()) EXPECT_EQ(v, 0.0);
  for (double t : c.transmittance_final.data()) EXPECT_EQ(t, 1.0);
}

TEST(CompositeTest, OpaqueFirstSample) {
  const CompositeResult c =
      composite(Tensor({1, 3}, {1e6, 1.0, 1.0}), Tensor({1, 3, 1}, {2.0, 7.0, 9.0}), uniform_deltas(1, 3, 1.0));
  EXPECT_NEAR(c.weights.at(0), 1.0, 1e-12);
  EXPECT_NEAR(c.weights.at(1), 0.0, 1e-12);
  EXPECT_NEAR(c.weights.at(2), 0.0, 1e-12);
  EXPECT_NEAR(c.rendered.at(0), 2.0, 1e-12);
}

TEST(CompositeTest, HalfOpacitySample) {
  const CompositeResult c = composite(Tensor({1, 1}, {std::log(2.0)}), Tensor({1, 1, 1}, {1.0}), uniform_deltas(1, 1, 1.0));
  EXPECT_NEAR(c.weights.at(0), 0.5, 1e-15);
}

TEST(CompositeTest, ConservationAndConstantValues) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t p = 8, s = 24;
    const Tensor sigma = random_tensor({p, s}, rng, 0.0, rng.uniform(0.1, 50.0));
    const Tensor deltas = random_tensor({p, s}, rng, 0.001, 0.2);
    const double cval = rng.uniform(-3, 3);
    const CompositeResult c = composite(sigma, Tensor::full({p, s, 1}, cval), deltas);
    for (std::size_t r = 0; r < p; ++r) {
      double sw = 0.0;
      for (std::size_t i = 0; i < s; ++i) {
        const double w = c.weights.at(r * s + i);
        EXPECT_GE(w, 0.0);
        EXPECT_LE(w, 1.0);
        sw += w;
      }
      EXPECT_NEAR(sw + c.transmittance_final.at(r), 1.0, 1e-9);
      EXPECT_NEAR(c.rendered.at(r), cval * (1.0 - c.transmittance_final.at(r)), 1e-9);
    }
  }
}

TEST(CompositeTest, RaisingOneDensityIsMonotone) {
  Rng rng(4);
  const std::size_t s = 12;
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor sigma = random_tensor({1, s}, rng, 0.0, 5.0);
    const Tensor deltas = random_tensor({1, s}, rng, 0.01, 0.3);
    const Tensor values = Tensor::zeros({1, s, 1});
    const std::size_t k = rng.uniform_int(0, s - 1);
    std::vector<double> raised(sigma.data().begin(), sigma.data().end());
    raised[k] += rng.uniform(0.01, 3.0);
    const CompositeResult a = composite(sigma, values, deltas);
    const CompositeResult b = composite(Tensor({1, s}, raised), values, deltas);
    EXPECT_GE(b.weights.at(k), a.weights.at(k));
    EXPECT_LE(b.transmittance_final.at(0), a.transmittance_final.at(0));
  }
}

double analytic_field_error(std::size_t s) {
  // sigma(t) = 2, v(t) = t on [0,1]: integral of 2 t exp(-2t) dt.
  const double exact = 0.5 - 1.5 * std::exp(-2.0);
  std::vector<double> t(s), d(s);
  for (std::size_t i = 0; i < s; ++i) t[i] = (i + 0.5) / static_cast<double>(s);
  for (std::size_t i = 0; i + 1 < s; ++i) d[i] = t[i + 1] - t[i];
  d[s - 1] = 1.0 - t[s - 1];
  const CompositeResult c = composite(Tensor::full({1, s}, 2.0), Tensor({1, s, 1}, t), Tensor({1, s}, d));
  return std::abs(c.rendered.item() - exact);
}

TEST(CompositeTest, AnalyticFieldConverges) {
  EXPECT_LT(analytic_field_error(256), 1e-3);
  double prev = analytic_field_error(16);
  for (std::size_t s = 32; s <= 256; s *= 2) {
    const double e = analytic_field_error(s);
    EXPECT_LT(e, prev) << "S=" << s;
    prev = e;
  }
}

TEST(PostActivateTest, PerTaskActivations) {
  const Tensor seg = post_activate(make_task(TaskKind::segmentation, 3), Tensor({1, 3}, {0, 0, 0}));
  for (double v : seg.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  const Tensor n = post_activate(make_task(TaskKind::normal), Tensor({1, 3}, {0.3, 0.4, 0}));
  EXPECT_NEAR(n.at(0), 0.6, 1e-15);
  EXPECT_NEAR(n.at(1), 0.8, 1e-15);
  EXPECT_EQ(post_activate(make_task(TaskKind::depth), Tensor({1, 1}, {0.7})).at(0), 0.7);
  EXPECT_EQ(post_activate(make_task(TaskKind::boundary), Tensor({1, 1}, {0.0})).at(0), 0.5);
}

TEST(DepthFromDensityTest, ExpectedTermination) {
  const Tensor t({1, 3}, {0.5, 1.0, 1.5});
  const CompositeResult opaque = composite(Tensor({1, 3}, {1e9, 0, 0}), Tensor::zeros({1, 3, 1}), uniform_deltas(1, 3, 0.5));
  EXPECT_NEAR(depth_from_density(opaque.weights, t).item(), 0.5, 1e-12);
  const CompositeResult empty = composite(Tensor::zeros({1, 3}), Tensor::zeros({1, 3, 1}), uniform_deltas(1, 3, 0.5));
  EXPECT_EQ(depth_from_density(empty.weights, t).item(), 0.0);
}

// Opaque slab from t* onward, sampled through the ray batch.
double plane_depth(double t_star, std::size_t s) {
  Rng rng(0);
  const RayBatch r = sample_along(make_rays(Camera{}, 1, 1), s, SampleMode::midpoint, rng);
  std::vector<double> sigma(s);
  for (std::size_t i = 0; i < s; ++i) sigma[i] = r.t_samples.at(i) >= t_star ? 1e4 : 0.0;
  const CompositeResult c = composite(Tensor({1, s}, sigma), Tensor::zeros({1, s, 1}), r.deltas);
  return depth_from_density(c.weights, r.t_samples).item();
}

TEST(DepthFromDensityTest, AnalyticPlaneWithinOneBin) {
  const double t_star = 1.23;
  const double bin = 2.0 / 128;
  EXPECT_LT(std::abs(plane_depth(t_star, 128) - t_star), bin);
  // Refinement changes the estimate by at most a bin width.
  EXPECT_LT(std::abs(plane_depth(t_star, 256) - plane_depth(t_star, 128)), bin);
}

TEST(TransformRaysTest, IdentityIsBitIdentical) {
  Rng rng(5);
  const RayBatch r = sample_along(make_rays(Camera{}, 3, 4), 5, SampleMode::stratified, rng);
  const RayBatch t = transform_rays(r, RigidTransform::identity());
  for (std::size_t i = 0; i < r.origins.numel(); ++i) EXPECT_EQ(r.origins.at(i), t.origins.at(i));
  for (std::size_t i = 0; i < r.directions.numel(); ++i) EXPECT_EQ(r.directions.at(i), t.directions.at(i));
  for (std::size_t i = 0; i < r.t_samples.numel(); ++i) EXPECT_EQ(r.t_samples.at(i), t.t_samples.at(i));
}

TEST(TransformRaysTest, TranslationShiftsOrigins) {
  const RayBatch r = make_rays(Camera{}, 2, 2);
  const RayBatch t = transform_rays(r, RigidTransform::translate(0.2, 0, 0));
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(t.origins.at(3 * i), r.origins.at(3 * i) + 0.2);
    EXPECT_EQ(t.origins.at(3 * i + 1), r.origins.at(3 * i + 1));
    EXPECT_EQ(t.directions.at(3 * i + 2), 1.0);
  }
}

TEST(TransformRaysTest, InverseRestoresRays) {
  const RayBatch r = make_rays(Camera{}, 3, 3);
  const RigidTransform dv = compose(RigidTransform::translate(0.1, 0.3, -0.2), RigidTransform::axis_angle({1, 2, 3}, 0.8));
  const RayBatch back = transform_rays(transform_rays(r, dv), dv.inverse());
  EXPECT_LT(testing::max_abs_diff(back.origins.data(), r.origins.data()), 1e-12);
  EXPECT_LT(testing::max_abs_diff(back.directions.data(), r.directions.data()), 1e-12);
}

TEST(TransformRaysTest, NonOrthonormalRejected) {
  RigidTransform bad;
  bad.rotation[4] = 1.1;
  EXPECT_THROW(transform_rays(make_rays(Camera{}, 1, 1), bad), ValidationError);
}

struct SmallPipeline {
  std::vector<TaskSpec> tasks = default_tasks(3);
  TaskFieldNet net;
  TriPlane tp;
  RenderConfig cfg;

  explicit SmallPipeline(Rng& rng, std::size_t r = 4, std::size_t c = 4)
      : net(TaskFieldConfig{c, 8, 0.2, false}, tasks, rng),
        tp{random_tensor({r, r, c}, rng, -1, 1, true), random_tensor({r, r, c}, rng, -1, 1, true),
           random_tensor({r, r, c}, rng, -1, 1, true)} {
    cfg.height = 3, cfg.width = 2, cfg.samples = 5, cfg.mode = SampleMode::midpoint;
  }
};

TEST(RenderTasksTest, ZeroWeightFieldGivesBiasTimesWeightSum) {
  Rng rng(6);
  SmallPipeline pl(rng);
  pl.net.parameters("f", [](const std::string&, Tensor& t) {
    for (double& v : t.mutable_data()) v = 0.0;
  });
  pl.net.density_head().bias.mutable_data()[0] = 0.4;
  for (double& b : pl.net.head("depth").bias.mutable_data()) b = 0.8;
  const RenderOutput out = render_tasks(pl.tp, pl.net, Camera{}, pl.cfg, pl.tasks, rng);
  const double sigma = std::log1p(std::exp(0.4));
  const std::size_t s = pl.cfg.samples;
  for (std::size_t r = 0; r < 6; ++r) {
    double sw = 0.0, optical = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
      const double d = out.rays.deltas.at(r * s + i);
      EXPECT_NEAR(out.weights.at(r * s + i), std::exp(-optical) * (1.0 - std::exp(-sigma * d)), 1e-12);
      optical += sigma * d;
      sw += out.weights.at(r * s + i);
    }
    EXPECT_NEAR(out.raw.at("depth").at(r), 0.8 * sw, 1e-12);
  }
}

TEST(RenderTasksTest, OutputInvariants) {
  Rng rng(7);
  SmallPipeline pl(rng);
  pl.cfg.height = 5, pl.cfg.width = 4;
  const RenderOutput out = render_tasks(pl.tp, pl.net, Camera{}, pl.cfg, pl.tasks, rng);
  EXPECT_EQ(out.predictions.at("segmentation").shape(), (Shape{5, 4, 3}));
  EXPECT_EQ(out.predictions.at("depth").shape(), (Shape{5, 4, 1}));
  const Tensor& seg = out.predictions.at("segmentation");
  const Tensor& nrm = out.predictions.at("normal");
  for (std::size_t p = 0; p < 20; ++p) {
    EXPECT_NEAR(seg.at(3 * p) + seg.at(3 * p + 1) + seg.at(3 * p + 2), 1.0, 1e-9);
    const double n2 = nrm.at(3 * p) * nrm.at(3 * p) + nrm.at(3 * p + 1) * nrm.at(3 * p + 1) + nrm.at(3 * p + 2) * nrm.at(3 * p + 2);
    EXPECT_TRUE(std::abs(n2 - 1.0) < 1e-9 || n2 == 0.0);
    double sw = 0.0;
    for (std::size_t i = 0; i < pl.cfg.samples; ++i) sw += out.weights.at(p * pl.cfg.samples + i);
    EXPECT_NEAR(sw + out.transmittance_final.at(p), 1.0, 1e-9);
  }
}

TEST(RenderTasksTest, NyuPresetShape) {
  Rng rng(8);
  SmallPipeline pl(rng);
  RenderConfig cfg = RenderConfig::preset("nyu");
  cfg.samples = 4;
  const RenderOutput out = render_tasks(pl.tp, pl.net, Camera{}, cfg, {make_task(TaskKind::depth)}, rng);
  EXPECT_EQ(out.predictions.at("depth").shape(), (Shape{56, 72, 1}));
}

TEST(RenderTasksTest, PerTaskDensityRenders) {
  Rng rng(9);
  const auto tasks = default_tasks(3);
  TaskFieldNet net(TaskFieldConfig{4, 8, 0.2, true}, tasks, rng);
  const TriPlane tp{random_tensor({4, 4, 4}, rng), random_tensor({4, 4, 4}, rng), random_tensor({4, 4, 4}, rng)};
  RenderConfig cfg;
  cfg.height = cfg.width = 2, cfg.samples = 6;
  const RenderOutput out = render_tasks(tp, net, Camera{}, cfg, tasks, rng);
  EXPECT_EQ(out.predictions.size(), 4u);
  EXPECT_EQ(out.weights.shape(), (Shape{4, 6}));
}

TEST(RenderTasksTest, EndToEndGradientWrtTriPlane) {
  for (int seed = 0; seed < 5; ++seed) {
    Rng rng(100 + seed);
    SmallPipeline pl(rng);
    Rng sample_rng(0);
    std::map<std::string, Tensor> proj;
    for (const TaskSpec& t : pl.tasks) proj[t.name()] = random_tensor({pl.cfg.height, pl.cfg.width, t.value_dim}, rng);
    auto loss = [&] {
      const RenderOutput out = render_tasks(pl.tp, pl.net, Camera{}, pl.cfg, pl.tasks, sample_rng);
      Tensor total = Tensor::scalar(0.0);
      for (const TaskSpec& t : pl.tasks) total = total + sum(mul(out.predictions.at(t.name()), proj.at(t.name())));
      return total;
    };
    const auto res = check_gradients(loss, {pl.tp.xy, pl.tp.yz, pl.tp.xz});
    EXPECT_LT(res.max_rel_error, 1e-3) << "seed " << seed;
  }
}

}  // namespace
}  // namespace tpmtl
