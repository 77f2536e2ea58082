#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "support/fixtures.hpp"
#include "support/random_tensor.hpp"
#include "tpmtl/autodiff/op_counter.hpp"
#include "tpmtl/autodiff/tape.hpp"
#include "tpmtl/core/error.hpp"
#include "tpmtl/mtl/batch.hpp"
#include "tpmtl/mtl/checkpoint.hpp"
#include "tpmtl/mtl/config.hpp"
#include "tpmtl/mtl/model.hpp"
#include "tpmtl/mtl/objective.hpp"
#include "tpmtl/mtl/optim.hpp"
#include "tpmtl/mtl/train.hpp"

namespace tpmtl {
namespace {

using testing::random_tensor;
using testing::scratch_dir;
using testing::slurp;
using testing::small_dataset;
using testing::small_model;

double grad_norm(const std::function<void(const TensorVisitor&)>& visit) {
  double s = 0.0;
  visit([&](const std::string&, Tensor& t) {
    if (!t.has_grad()) return;
    for (double g : t.grad()) s += g * g;
  });
  return std::sqrt(s);
}

std::size_t group_size(const std::function<void(const TensorVisitor&)>& visit) {
  std::size_t n = 0;
  visit([&](const std::string&, Tensor& t) { n += t.numel(); });
  return n;
}

void expect_bit_identical(const Tensor& a, const Tensor& b) {
  ASSERT_EQ(a.shape(), b.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) ASSERT_EQ(a.at(i), b.at(i)) << "element " << i;
}

DenseTargets row_targets(std::size_t rows) {
  DenseTargets t;
  t.batch = 1;
  t.height = 1;
  t.width = rows;
  t.seg.assign(rows, 0);
  t.depth.assign(rows, 0.0);
  t.normal.assign(3 * rows, 0.0);
  t.normal_mask.assign(rows, 1);
  t.boundary.assign(rows, 0.0);
  return t;
}

// ---------------------------------------------------------------- model

TEST(ModelTest, OutputsMatchInputResolution) {
  Rng rng(1);
  MultiTaskModel model(small_model(), rng);
  const auto out = forward_main(model, random_tensor({2, 3, 16, 16}, rng));
  for (const TaskSpec& t : model.tasks()) {
    EXPECT_EQ(out.at(t.name()).shape(), (Shape{2, 16, 16, t.value_dim})) << t.name();
  }
}

TEST(ModelTest, NonDivisibleInputIsDimensionError) {
  Rng rng(2);
  MultiTaskModel model(small_model(), rng);
  EXPECT_THROW(forward_main(model, random_tensor({1, 3, 18, 16}, rng)), DimensionError);
}

TEST(ModelTest, ZeroWeightsPredictHeadBiases) {
  Rng rng(3);
  MultiTaskModel model(small_model(), rng);
  model.parameters([](const std::string&, Tensor& t) { std::fill(t.mutable_data().begin(), t.mutable_data().end(), 0.0); });
  std::map<std::string, std::vector<double>> bias;
  model.main_parameters([&](const std::string& name, Tensor& t) {
    if (name.rfind("head.", 0) != 0 || name.size() < 9 || name.substr(name.size() - 9) != ".out.bias") return;
    auto d = t.mutable_data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = 0.25 + 0.5 * static_cast<double>(i);
    bias[name.substr(5, name.size() - 14)] = {d.begin(), d.end()};
  });
  ASSERT_EQ(bias.size(), model.tasks().size());
  for (Mode mode : {Mode::train, Mode::eval}) {
    model.set_mode(mode);
    const auto raw = forward_main_raw(model, random_tensor({1, 3, 16, 16}, rng));
    for (const TaskSpec& t : model.tasks()) {
      const Tensor& r = raw.at(t.name());
      const std::vector<double>& b = bias.at(t.name());
      for (std::size_t d = 0; d < t.value_dim; ++d)
        for (std::size_t p = 0; p < 256; ++p) ASSERT_EQ(r.at(d * 256 + p), b[d]) << t.name();
    }
  }
}

TEST(ModelTest, EvalModeIsDeterministic) {
  Rng rng(4);
  MultiTaskModel model(small_model(), rng);
  model.set_mode(Mode::eval);
  const Tensor x = random_tensor({2, 3, 16, 16}, rng);
  const auto a = forward_main(model, x), b = forward_main(model, x);
  for (const TaskSpec& t : model.tasks()) expect_bit_identical(a.at(t.name()), b.at(t.name()));
}

TEST(ModelTest, RegularizerRequiresTrainMode) {
  Rng rng(5);
  MultiTaskModel model(small_model(), rng);
  model.set_mode(Mode::eval);
  EXPECT_THROW(forward_regularizer(model, random_tensor({1, 3, 16, 16}, rng), Camera{}, rng), ContractError);
}

TEST(ModelTest, RegularizerRendersAtRenderResolutionAndReachesEncoder) {
  Rng rng(6);
  MultiTaskModel model(small_model(), rng);
  Tape tape;
  const auto scope = tape.activate();
  const auto renders = forward_regularizer(model, random_tensor({1, 3, 16, 16}, rng), Camera{}, rng);
  ASSERT_EQ(renders.size(), 1u);
  Tensor loss = Tensor::scalar(0.0);
  for (const TaskSpec& t : model.tasks()) {
    const Tensor& p = renders[0].predictions.at(t.name());
    EXPECT_EQ(p.shape(), (Shape{8, 8, t.value_dim}));
    loss = loss + sum(mul(p, p));
  }
  tape.backward(loss);
  double enc = 0.0;
  model.main_parameters([&](const std::string& name, Tensor& t) {
    if (name.rfind("encoder.", 0) == 0 && t.has_grad())
      for (double g : t.grad()) enc += g * g;
  });
  EXPECT_GT(enc, 0.0);
}

TEST(ModelTest, NyuRenderPreset) {
  const RenderConfig rc = RenderConfig::preset("nyu");
  EXPECT_EQ(rc.height, 56u);
  EXPECT_EQ(rc.width, 72u);
}

TEST(ModelTest, InvalidConfigRejected) {
  ModelConfig m = small_model();
  m.triplane.in_channels = 5;
  EXPECT_THROW(m.validate(), ConfigError);
  m = small_model();
  m.encoder_channels = {4, 8, 8};
  EXPECT_THROW(m.validate(), ConfigError);
}

// ---------------------------------------------------------------- losses

TEST(TaskLossTest, DepthEqualToLabelIsZero) {
  DenseTargets t = row_targets(4);
  t.depth = {0.1, 0.5, 1.2, 1.9};
  const TaskLoss l = task_loss(make_task(TaskKind::depth), Tensor({4, 1}, t.depth), t);
  EXPECT_EQ(l.value.item(), 0.0);
  EXPECT_FALSE(l.all_ignored);
}

TEST(TaskLossTest, UniformTwoClassCrossEntropyIsLn2) {
  DenseTargets t = row_targets(5);
  t.seg = {0, 1, 1, 0, 1};
  const TaskSpec seg = make_task(TaskKind::segmentation, 2);
  const Tensor logits = Tensor::zeros({1, 2, 1, 5});
  const Tensor pred = activate_dense(seg, logits).reshape({5, 2});
  EXPECT_NEAR(task_loss(seg, pred, t).value.item(), std::numbers::ln2, 1e-15);
}

TEST(TaskLossTest, WeightedBinaryCrossEntropy) {
  DenseTargets t = row_targets(3);
  t.boundary = {1.0, 1.0, 1.0};
  const TaskSpec b = make_task(TaskKind::boundary);
  const Tensor pred = Tensor::full({3, 1}, 0.5);
  EXPECT_NEAR(task_loss(b, pred, t).value.item(), 0.95 * std::numbers::ln2, 1e-15);
}

TEST(TaskLossTest, AllIgnoredGivesZeroAndFlag) {
  DenseTargets t = row_targets(3);
  t.seg = {255, 255, 255};
  const TaskSpec seg = make_task(TaskKind::segmentation, 3);
  Rng rng(7);
  const Tensor pred = activate_dense(seg, random_tensor({1, 3, 1, 3}, rng)).reshape({3, 3});
  const TaskLoss l = task_loss(seg, pred, t);
  EXPECT_TRUE(l.all_ignored);
  EXPECT_EQ(l.value.item(), 0.0);

  t.normal_mask.assign(3, 0);
  const TaskLoss n = task_loss(make_task(TaskKind::normal), Tensor::full({3, 3}, 0.5), t);
  EXPECT_TRUE(n.all_ignored);
  EXPECT_EQ(n.value.item(), 0.0);
}

TEST(TaskLossTest, ShapeMismatchIsDimensionError) {
  DenseTargets t = row_targets(4);
  EXPECT_THROW(task_loss(make_task(TaskKind::depth), Tensor::zeros({3, 1}), t), DimensionError);
}

// ---------------------------------------------------------------- schedule

TEST(AlphaScheduleTest, RampEndpointsAndPlateau) {
  const AlphaSchedule s{4.0, 20000, 40000};
  EXPECT_EQ(alpha_at(s, 0), 0.0);
  EXPECT_EQ(alpha_at(s, 10000), 2.0);
  EXPECT_EQ(alpha_at(s, 20000), 4.0);
  EXPECT_EQ(alpha_at(s, 35000), 4.0);
  EXPECT_EQ(alpha_at(s, 40000), 4.0);
}

TEST(AlphaScheduleTest, NonDecreasing) {
  const AlphaSchedule s = AlphaSchedule::half_ramp(1000, 3.0);
  EXPECT_EQ(s.ramp_iters, 500);
  double prev = 0.0;
  for (long i = 0; i <= 1000; ++i) {
    const double a = alpha_at(s, i);
    EXPECT_GE(a, prev);
    prev = a;
  }
  EXPECT_EQ(prev, 3.0);
}

// ---------------------------------------------------------------- objective

struct ObjectiveFixture : ::testing::Test {
  void SetUp() override {
    data = generate_dataset(small_dataset(2, 0, true));
    batch = make_batch(data.split("train"), 8, 8);
    Rng rng(21);
    model = MultiTaskModel(small_model(), rng);
  }
  ObjectiveTerms run(long iter, bool cross = false, std::uint64_t seed = 5) {
    ObjectiveOptions opt;
    opt.cross_view = cross;
    opt.sampling = SampleMode::midpoint;
    Rng rng(seed);
    return objective(model, batch, iter, schedule, opt, rng);
  }
  Dataset data;
  Batch batch;
  MultiTaskModel model;
  AlphaSchedule schedule{4.0, 10, 20};
};

TEST_F(ObjectiveFixture, ZeroAlphaIsMainLossOnly) {
  OpCounter probe;
  ObjectiveTerms t;
  {
    const auto installed = probe.install();
    t = run(0);
  }
  EXPECT_EQ(t.alpha, 0.0);
  EXPECT_TRUE(t.reg.empty());
  double main = 0.0;
  for (const auto& [name, v] : t.main) main += v;
  EXPECT_DOUBLE_EQ(t.total.item(), main);
  EXPECT_EQ(probe.count("triplane_sample"), 0u);
  EXPECT_EQ(probe.count("composite_weights"), 0u);
}

TEST_F(ObjectiveFixture, DecomposesLinearlyInAlpha) {
  const ObjectiveTerms base = run(0);
  for (long iter : {3L, 10L}) {
    const ObjectiveTerms t = run(iter);
    double reg = 0.0;
    for (const auto& [name, v] : t.reg) reg += v;
    ASSERT_EQ(t.reg.size(), model.tasks().size());
    for (const auto& [name, v] : t.main) EXPECT_EQ(v, base.main.at(name));
    EXPECT_NEAR(t.total.item() - base.total.item(), t.alpha * reg, 1e-12 * (1.0 + t.total.item()));
  }
}

TEST_F(ObjectiveFixture, IdentityCrossViewEqualsSingleView) {
  batch.pair_render = batch.render;
  batch.delta_v.assign(batch.size(), RigidTransform::identity());
  const ObjectiveTerms t = run(10, true);
  ASSERT_EQ(t.cross.size(), model.tasks().size());
  for (const auto& [name, v] : t.reg) EXPECT_EQ(t.cross.at(name), v) << name;
}

TEST_F(ObjectiveFixture, CrossViewNeedsPairs) {
  batch.pair_render.reset();
  EXPECT_THROW(run(10, true), ConfigError);
}

TEST_F(ObjectiveFixture, GradientIsolation) {
  {
    Tape tape;
    const auto scope = tape.activate();
    tape.backward(run(0).total);
  }
  EXPECT_EQ(grad_norm([&](const TensorVisitor& f) { model.regularizer_parameters(f); }), 0.0);
  const double main_only = grad_norm([&](const TensorVisitor& f) { model.main_parameters(f); });
  model.parameters([](const std::string&, Tensor& t) {
    if (t.has_grad()) t.zero_grad();
  });
  {
    Tape tape;
    const auto scope = tape.activate();
    tape.backward(run(10).total);
  }
  EXPECT_GT(grad_norm([&](const TensorVisitor& f) { model.regularizer_parameters(f); }), 0.0);
  EXPECT_GT(grad_norm([&](const TensorVisitor& f) { model.main_parameters(f); }), main_only);
}

TEST_F(ObjectiveFixture, AuxHeadsReplaceRegularizer) {
  ModelConfig cfg = small_model();
  cfg.regularizer = false;
  cfg.aux_heads = true;
  Rng rng(22);
  model = MultiTaskModel(cfg, rng);
  OpCounter probe;
  ObjectiveTerms t;
  {
    const auto installed = probe.install();
    t = run(10);
  }
  EXPECT_EQ(t.reg.size(), model.tasks().size());
  EXPECT_EQ(probe.count("triplane_sample"), 0u);
}

// ---------------------------------------------------------------- optimizer

TEST(AdamTest, ZeroGradientLeavesParameter) {
  std::vector<double> p{1.0, -2.0}, g{0.0, 0.0};
  AdamMoments m;
  adam_step(p, g, m, {});
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
  EXPECT_EQ(m.step, 1);
}

TEST(AdamTest, FirstStepIsLearningRateTimesSign) {
  std::vector<double> p{0.0, 0.0, 0.0}, g{3.0, -0.02, 1e-3};
  AdamMoments m;
  const AdamConfig cfg{0.01};
  adam_step(p, g, m, cfg);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], -cfg.lr * (g[i] > 0 ? 1.0 : -1.0), 1e-7);
}

TEST(AdamTest, QuadraticBowl) {
  std::vector<double> x{3.0};
  AdamMoments m;
  const AdamConfig cfg{0.1};
  for (int i = 0; i < 500; ++i) {
    const std::vector<double> g{2.0 * x[0]};
    adam_step(x, g, m, cfg);
  }
  EXPECT_LT(std::abs(x[0]), 1e-2);
}

TEST(AdamTest, ShapeMismatchIsDimensionError) {
  std::vector<double> p{1.0, 2.0}, g{1.0};
  AdamMoments m;
  EXPECT_THROW(adam_step(p, g, m, {}), DimensionError);
}

TEST(AdamTest, SkipsTensorsWithoutGradient) {
  Tensor a = Tensor::full({2}, 1.0, true), b = Tensor::full({2}, 1.0, true);
  a.mutable_grad()[0] = 1.0;
  Adam adam(AdamConfig{0.1});
  adam.step([&](const TensorVisitor& fn) {
    fn("a", a);
    fn("b", b);
  });
  EXPECT_LT(a.at(0), 1.0);
  EXPECT_EQ(b.at(0), 1.0);
  EXPECT_EQ(b.at(1), 1.0);
}

// ---------------------------------------------------------------- strip

TEST(StripTest, RemovesExactlyTheRegularizerParameters) {
  Rng rng(30);
  MultiTaskModel model(small_model(), rng);
  MultiTaskModel stripped = strip_regularizer(model);
  const std::size_t reg = group_size([&](const TensorVisitor& f) { model.regularizer_parameters(f); });
  EXPECT_GT(reg, 0u);
  EXPECT_EQ(parameter_count(model) - parameter_count(stripped), reg);
  EXPECT_EQ(stripped.mode(), Mode::eval);
  EXPECT_FALSE(stripped.has_regularizer());
}

TEST(StripTest, OutputsBitIdenticalAndNoRegularizerOps) {
  Rng rng(31);
  MultiTaskModel model(small_model(), rng);
  // nontrivial running statistics
  forward_main(model, random_tensor({2, 3, 16, 16}, rng));
  MultiTaskModel stripped = strip_regularizer(model);
  model.set_mode(Mode::eval);
  for (int i = 0; i < 10; ++i) {
    const Tensor x = random_tensor({1, 3, 16, 16}, rng);
    const auto full = forward_main(model, x);
    OpCounter probe;
    std::map<std::string, Tensor> lean;
    {
      const auto installed = probe.install();
      lean = forward_main(stripped, x);
    }
    for (const char* op : {"triplane_sample", "linear", "linear_leaky_relu", "composite_weights", "dropout"})
      EXPECT_EQ(probe.count(op), 0u) << op;
    for (const TaskSpec& t : model.tasks()) expect_bit_identical(full.at(t.name()), lean.at(t.name()));
  }
}

TEST(StripTest, StrippedCheckpointRoundTrips) {
  Rng rng(32);
  MultiTaskModel model(small_model(), rng);
  forward_main(model, random_tensor({2, 3, 16, 16}, rng));
  MultiTaskModel stripped = strip_regularizer(model);
  const auto path = scratch_dir() / "stripped.json";
  save_checkpoint(stripped, path);
  MultiTaskModel loaded = load_checkpoint(path);
  EXPECT_FALSE(loaded.has_regularizer());
  const Tensor x = random_tensor({1, 3, 16, 16}, rng);
  const auto a = forward_main(stripped, x), b = forward_main(loaded, x);
  for (const TaskSpec& t : model.tasks()) expect_bit_identical(a.at(t.name()), b.at(t.name()));
}

// ---------------------------------------------------------------- checkpoint

struct CheckpointFixture : ::testing::Test {
  void SetUp() override {
    dir = scratch_dir();
    Rng rng(40);
    model = MultiTaskModel(small_model(), rng);
    index = dir / "model.json";
    save_checkpoint(model, index, {{"note", "x"}});
  }
  nlohmann::json read_index() { return nlohmann::json::parse(slurp(index)); }
  void write_index(const nlohmann::json& j) { std::ofstream(index) << j.dump(); }
  std::filesystem::path dir, index;
  MultiTaskModel model;
};

TEST_F(CheckpointFixture, IndexLayout) {
  const auto j = read_index();
  EXPECT_EQ(j.at("format"), "tpmtl-v1");
  EXPECT_EQ(j.at("extra").at("note"), "x");
  const auto blob = dir / j.at("blob").get<std::string>();
  EXPECT_EQ(std::filesystem::file_size(blob), j.at("blob_bytes").get<std::size_t>());
  std::size_t expect = 0;
  model.parameters([&](const std::string&, Tensor& t) { expect += t.numel() * 8; });
  model.buffers([&](const std::string&, Tensor& t) { expect += t.numel() * 8; });
  EXPECT_EQ(j.at("blob_bytes").get<std::size_t>(), expect);
}

TEST_F(CheckpointFixture, RoundTripRestoresEveryTensor) {
  MultiTaskModel loaded = load_checkpoint(index);
  std::map<std::string, std::vector<double>> before;
  model.parameters([&](const std::string& n, Tensor& t) { before[n] = {t.data().begin(), t.data().end()}; });
  model.buffers([&](const std::string& n, Tensor& t) { before[n] = {t.data().begin(), t.data().end()}; });
  std::size_t seen = 0;
  auto check = [&](const std::string& n, Tensor& t) {
    ++seen;
    EXPECT_EQ(before.at(n), std::vector<double>(t.data().begin(), t.data().end())) << n;
  };
  loaded.parameters(check);
  loaded.buffers(check);
  EXPECT_EQ(seen, before.size());
  EXPECT_EQ(loaded.mode(), Mode::eval);
}

TEST_F(CheckpointFixture, TruncatedBlobIsCorruption) {
  const auto blob = dir / "model.bin";
  std::filesystem::resize_file(blob, std::filesystem::file_size(blob) - 8);
  EXPECT_THROW(load_checkpoint(index), CorruptionError);
}

TEST_F(CheckpointFixture, MissingBlobIsCorruption) {
  std::filesystem::remove(dir / "model.bin");
  EXPECT_THROW(load_checkpoint(index), CorruptionError);
}

TEST_F(CheckpointFixture, WrongFormatIsCorruption) {
  auto j = read_index();
  j["format"] = "tpmtl-v0";
  write_index(j);
  EXPECT_THROW(load_checkpoint(index), CorruptionError);
}

TEST_F(CheckpointFixture, MalformedIndexIsCorruption) {
  auto j = read_index();
  j["tensors"].erase(j["tensors"].begin());
  write_index(j);
  EXPECT_THROW(load_checkpoint(index), CorruptionError);

  j = read_index();
  j["blob_bytes"] = "many";
  write_index(j);
  EXPECT_THROW(load_checkpoint(index), CorruptionError);

  std::ofstream(index) << "{not json";
  EXPECT_THROW(load_checkpoint(index), CorruptionError);
}

TEST_F(CheckpointFixture, ShapeMismatchIsCorruption) {
  auto j = read_index();
  auto& first = *j["tensors"].begin();
  first["shape"] = Shape{first["shape"][0].get<std::size_t>() + 1};
  write_index(j);
  EXPECT_THROW(load_checkpoint(index), CorruptionError);
}

TEST(CheckpointTest, MissingIndexIsValidationError) {
  EXPECT_THROW(load_checkpoint(scratch_dir() / "absent.json"), ValidationError);
}

// ---------------------------------------------------------------- config

TEST(ConfigTest, JsonRoundTrip) {
  TrainConfig cfg;
  cfg.model = small_model();
  cfg.model.field.per_task_density = true;
  cfg.model.render.mode = SampleMode::midpoint;
  cfg.total_iters = 123;
  cfg.seed = 9;
  cfg.cross_view = true;
  cfg.adam.lr = 5e-4;
  cfg.alpha = AlphaSchedule{2.0, 40, 123};
  const nlohmann::json j = to_json(cfg);
  EXPECT_EQ(to_json(train_config_from_json(j)), j);
}

TEST(ConfigTest, UnknownKeysAndBadValuesRejected) {
  EXPECT_THROW(train_config_from_json({{"iterations", 5}}), ConfigError);
  EXPECT_THROW(train_config_from_json({{"model", {{"width", 5}}}}), ConfigError);
  EXPECT_THROW(train_config_from_json({{"batch_size", 0}}), ConfigError);
  EXPECT_THROW(parse_sample_mode("jittered"), ConfigError);
  TrainConfig cfg;
  cfg.adam.lr = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(ConfigTest, AuxBaselineSwapsBranches) {
  TrainConfig cfg;
  cfg.aux_heads_baseline = true;
  const ModelConfig m = cfg.effective_model();
  EXPECT_TRUE(m.aux_heads);
  EXPECT_FALSE(m.regularizer);
}

// ---------------------------------------------------------------- training

TrainConfig small_train(const std::filesystem::path& out, long iters) {
  TrainConfig cfg;
  cfg.model = small_model();
  cfg.total_iters = iters;
  cfg.alpha = AlphaSchedule::half_ramp(iters);
  cfg.out_dir = out.string();
  cfg.log_every = 50;
  cfg.checkpoint_every = 100;
  cfg.seed = 3;
  cfg.adam.lr = 3e-3;
  return cfg;
}

TEST(TrainTest, ObjectiveDecreasesOnOneScene) {
  const Dataset data = generate_dataset(small_dataset(1, 0));
  const auto dir = scratch_dir();
  const TrainResult r = train(small_train(dir, 200), data);
  ASSERT_EQ(r.log.front().iter, 0);
  ASSERT_EQ(r.log.back().iter, 200);
  EXPECT_LT(r.log.back().total, r.log.front().total);
  for (const auto& [task, v] : r.log.front().main) EXPECT_LT(r.log.back().main.at(task), v) << task;
  EXPECT_TRUE(std::filesystem::exists(dir / "ckpt_000100.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "final.json"));
  EXPECT_EQ(r.checkpoint, dir / "final.json");
}

TEST(TrainTest, MetricsCsvLayout) {
  const Dataset data = generate_dataset(small_dataset(1, 0));
  const auto dir = scratch_dir();
  const TrainResult r = train(small_train(dir, 60), data);
  std::ifstream in(r.metrics);
  std::string header, line;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("iter,alpha,total,segmentation_main_loss,segmentation_reg_loss,segmentation_crossview_loss", 0), 0u);
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3u);  // iterations 0, 50 and the final 60
}

TEST(TrainTest, ZeroAlphaNeverTouchesRegularizer) {
  const Dataset data = generate_dataset(small_dataset(1, 0));
  TrainConfig cfg = small_train(scratch_dir(), 20);
  cfg.alpha = AlphaSchedule{0.0, 10, 20};
  const TrainResult r = train(cfg, data);
  Rng rng(cfg.seed);
  Rng model_rng = rng.split();
  MultiTaskModel fresh(cfg.effective_model(), model_rng);
  std::map<std::string, std::vector<double>> init;
  fresh.regularizer_parameters([&](const std::string& n, Tensor& t) { init[n] = {t.data().begin(), t.data().end()}; });
  MultiTaskModel trained = r.model;
  trained.regularizer_parameters([&](const std::string& n, Tensor& t) {
    EXPECT_EQ(init.at(n), std::vector<double>(t.data().begin(), t.data().end())) << n;
  });
  for (const LogRow& row : r.log) EXPECT_TRUE(row.reg.empty());
}

TEST(TrainTest, AuxHeadsBaselineTrainsDuplicateHeads) {
  const Dataset data = generate_dataset(small_dataset(1, 0));
  TrainConfig cfg = small_train(scratch_dir(), 20);
  cfg.aux_heads_baseline = true;
  cfg.log_every = 10;
  const TrainResult r = train(cfg, data);
  MultiTaskModel m = r.model;
  EXPECT_FALSE(m.has_regularizer());
  EXPECT_GT(group_size([&](const TensorVisitor& f) { m.aux_parameters(f); }), 0u);
  EXPECT_EQ(r.log.back().reg.size(), m.tasks().size());
}

TEST(TrainTest, SeededRunsAreBitIdentical) {
  const Dataset data = generate_dataset(small_dataset(2, 0));
  const auto root = scratch_dir();
  TrainHooks hooks;
  hooks.sampling = SampleMode::midpoint;
  const TrainResult a = train(small_train(root / "a", 30), data, hooks);
  const TrainResult b = train(small_train(root / "b", 30), data, hooks);
  EXPECT_EQ(slurp(root / "a" / "final.bin"), slurp(root / "b" / "final.bin"));
  EXPECT_EQ(slurp(a.metrics), slurp(b.metrics));
}

TEST(TrainTest, CrossViewWithoutPairsIsConfigError) {
  const Dataset data = generate_dataset(small_dataset(1, 0));
  TrainConfig cfg = small_train(scratch_dir(), 5);
  cfg.cross_view = true;
  EXPECT_THROW(train(cfg, data), ConfigError);
}

TEST(TrainTest, NonFiniteObjectiveWritesDiagnostic) {
  Dataset data = generate_dataset(small_dataset(1, 0));
  data.records[0].view.depth[0] = std::numeric_limits<float>::quiet_NaN();
  const auto dir = scratch_dir();
  EXPECT_THROW(train(small_train(dir, 5), data), NumericalError);
  EXPECT_TRUE(std::filesystem::exists(dir / "diagnostic.json"));
}

}  // namespace
}  // namespace tpmtl
