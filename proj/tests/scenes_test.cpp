#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "tpmtl/core/error.hpp"
#include "tpmtl/renderer/renderer.hpp"
#include "tpmtl/scenes/dataset.hpp"

namespace tpmtl {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("tpmtl_scenes_" + name);
  fs::remove_all(dir);
  return dir;
}

Scene empty_scene() {
  Scene s;
  s.primitives.push_back(back_plane());
  return s;
}

TEST(TraceTest, CenteredSphere) {
  Scene s = empty_scene();
  s.primitives.push_back(Primitive::sphere({0, 0, 0}, 0.5, 3, {1, 1, 1}));
  const ViewLabels v = trace_labels(s, Camera{}, 1, 1);
  EXPECT_FLOAT_EQ(v.depth[0], 0.5f);
  EXPECT_FLOAT_EQ(v.normal[0], 0.0f);
  EXPECT_FLOAT_EQ(v.normal[1], 0.0f);
  EXPECT_FLOAT_EQ(v.normal[2], -1.0f);
  EXPECT_EQ(v.seg[0], 3.0f);
}

TEST(TraceTest, EmptySceneHitsBackPlane) {
  const ViewLabels v = trace_labels(empty_scene(), Camera{}, 6, 5);
  for (std::size_t i = 0; i < 30; ++i) {
    EXPECT_EQ(v.depth[i], 2.0f);
    EXPECT_EQ(v.seg[i], 0.0f);
    EXPECT_EQ(v.normal[3 * i + 2], -1.0f);
    EXPECT_EQ(v.boundary[i], 0.0f);
  }
}

TEST(TraceTest, HalfSplitGivesOnePixelEdge) {
  const std::size_t h = 6, w = 8;
  std::vector<float> seg(h * w);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) seg[i * w + j] = j < w / 2 ? 0.0f : 2.0f;
  const auto b = boundary_from_seg(seg, h, w);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) EXPECT_EQ(b[i * w + j], j == w / 2 ? 1.0f : 0.0f);
}

TEST(TraceTest, BoxNormalsFaceCamera) {
  Scene s = empty_scene();
  s.primitives.push_back(Primitive::box({-0.5, -0.5, -0.2}, {0.5, 0.5, 0.4}, 1, {1, 0, 0}));
  const RayHit hit = trace_ray(s, {0, 0, -1}, {0, 0, 1});
  EXPECT_DOUBLE_EQ(hit.t, 0.8);
  EXPECT_EQ(hit.normal, (Vec3{0, 0, -1}));
  EXPECT_EQ(hit.primitive->class_id, 1);
}

TEST(GenerateSceneTest, ZeroObjectsLeavesBackPlane) {
  Rng rng(1);
  SceneParams p;
  p.min_objects = p.max_objects = 0;
  const Scene s = generate_scene(rng, p);
  ASSERT_EQ(s.primitives.size(), 1u);
  const ViewLabels v = trace_labels(s, Camera{}, 4, 4);
  for (float c : v.seg) EXPECT_EQ(c, 0.0f);
}

TEST(GenerateSceneTest, ObjectsContainedAndClassesInRange) {
  Rng rng(2);
  SceneParams p;
  for (int trial = 0; trial < 200; ++trial) {
    const Scene s = generate_scene(rng, p);
    for (std::size_t i = 1; i < s.primitives.size(); ++i) {
      EXPECT_TRUE(s.primitives[i].contained());
      EXPECT_GE(s.primitives[i].class_id, 1);
      EXPECT_LT(s.primitives[i].class_id, p.num_classes);
    }
  }
  p.num_classes = 1;
  EXPECT_THROW(generate_scene(rng, p), ConfigError);
}

TEST(GenerateSceneTest, SeedDeterminesScene) {
  Rng a(7), b(7);
  const Scene sa = generate_scene(a, SceneParams{}), sb = generate_scene(b, SceneParams{});
  ASSERT_EQ(sa.primitives.size(), sb.primitives.size());
  for (std::size_t i = 0; i < sa.primitives.size(); ++i) {
    EXPECT_EQ(sa.primitives[i].a, sb.primitives[i].a);
    EXPECT_EQ(sa.primitives[i].b, sb.primitives[i].b);
    EXPECT_EQ(sa.primitives[i].radius, sb.primitives[i].radius);
  }
}

TEST(TracePropertyTest, SegDepthNormalCoherence) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Scene s = generate_scene(rng, SceneParams{});
    const RayBatch rays = make_rays(Camera{}, 16, 16);
    const ViewLabels v = trace_labels(s, Camera{}, 16, 16);
    for (std::size_t r = 0; r < 256; ++r) {
      const Vec3 o{rays.origins.at(3 * r), rays.origins.at(3 * r + 1), rays.origins.at(3 * r + 2)};
      const Vec3 d{0, 0, 1};
      const RayHit hit = trace_ray(s, o, d);
      const Vec3& n = hit.normal;
      EXPECT_NEAR(std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]), 1.0, 1e-12);
      EXPECT_LE(n[2], 0.0);
      // Brute-force occlusion: depth is the minimum over primitives, and the
      // labelled class belongs to a primitive hit at that depth.
      double min_t = INFINITY;
      bool class_matches = false;
      for (const Primitive& p : s.primitives) {
        const auto h = p.intersect(o, d);
        if (h) min_t = std::min(min_t, h->t);
      }
      for (const Primitive& p : s.primitives) {
        const auto h = p.intersect(o, d);
        if (h && h->t == min_t && p.class_id == static_cast<int>(v.seg[r])) class_matches = true;
      }
      EXPECT_EQ(hit.t, min_t);
      EXPECT_TRUE(class_matches);
      EXPECT_EQ(v.depth[r], static_cast<float>(min_t));
      EXPECT_GE(v.depth[r], 0.0f);
      EXPECT_LE(v.depth[r], 2.0f);
    }
    // Every boundary pixel sits on a class discontinuity.
    for (std::size_t i = 0; i < 16; ++i)
      for (std::size_t j = 0; j < 16; ++j) {
        if (v.boundary[i * 16 + j] == 0.0f) continue;
        const float c = v.seg[i * 16 + j];
        EXPECT_TRUE((j > 0 && v.seg[i * 16 + j - 1] != c) || (i > 0 && v.seg[(i - 1) * 16 + j] != c));
      }
  }
}

TEST(MakePairTest, IdentityGivesIdenticalViews) {
  Rng rng(4);
  const Scene s = generate_scene(rng, SceneParams{});
  const SampleRecord r = make_pair(s, Camera{}, RigidTransform::identity(), 8, 8);
  ASSERT_TRUE(r.pair.has_value());
  EXPECT_EQ(r.view.seg, r.pair->seg);
  EXPECT_EQ(r.view.depth, r.pair->depth);
}

TEST(MakePairTest, TranslationShiftsSegmentation) {
  Rng rng(5);
  const std::size_t w = 20;  // 0.2 * (20 / 2) = 2 pixels
  for (int trial = 0; trial < 5; ++trial) {
    const Scene s = generate_scene(rng, SceneParams{});
    const SampleRecord r = make_pair(s, Camera{}, RigidTransform::translate(0.2, 0, 0), w, w);
    std::size_t agree = 0, total = 0;
    for (std::size_t i = 0; i < w; ++i)
      for (std::size_t j = 0; j + 2 < w; ++j, ++total) agree += r.pair->seg[i * w + j] == r.view.seg[i * w + j + 2];
    EXPECT_GE(static_cast<double>(agree) / total, 0.99);
  }
}

TEST(MakePairTest, StoredDeltaIsRelativePose) {
  Rng rng(6);
  const Scene s = generate_scene(rng, SceneParams{});
  Camera cam;
  cam.pose = compose(RigidTransform::translate(0.05, 0, 0), RigidTransform::axis_angle({0, 1, 0}, 0.1));
  const RigidTransform dv = compose(RigidTransform::translate(0, 0.1, 0), RigidTransform::axis_angle({1, 0, 0}, 0.05));
  const SampleRecord r = make_pair(s, cam, dv, 4, 4);
  Camera second;
  second.pose = r.pair->pose;
  EXPECT_LT(max_abs_diff(r.delta_v, compose(second.pose, cam.pose.inverse())), 1e-12);
  EXPECT_LT(max_abs_diff(r.delta_v, dv), 1e-12);
}

TEST(MakePairTest, FrustumViolationReported) {
  Scene s = empty_scene();
  s.primitives.push_back(Primitive::sphere({0.7, 0, 0}, 0.25, 1, {1, 1, 1}));
  bool ok = true;
  make_pair(s, Camera{}, RigidTransform::translate(0.2, 0, 0), 4, 4, &ok);
  EXPECT_TRUE(ok);
  // Moving the camera left pushes the sphere past the right image edge.
  make_pair(s, Camera{}, RigidTransform::translate(-0.2, 0, 0), 4, 4, &ok);
  EXPECT_FALSE(ok);
}

TEST(PerturbTest, NoiseRatesAndLabelsStayValid) {
  Rng rng(8);
  SampleRecord r;
  r.view = trace_labels(empty_scene(), Camera{}, 100, 100);
  const std::vector<float> depth = r.view.depth;
  perturb_labels(r, 0.1, 0.05, 6, rng);
  std::size_t changed = 0;
  double sq = 0.0;
  for (std::size_t i = 0; i < r.view.seg.size(); ++i) {
    changed += r.view.seg[i] != 0.0f;
    EXPECT_GE(r.view.seg[i], 0.0f);
    EXPECT_LT(r.view.seg[i], 6.0f);
    sq += (r.view.depth[i] - depth[i]) * (r.view.depth[i] - depth[i]);
  }
  EXPECT_NEAR(static_cast<double>(changed) / 1e4, 0.1, 0.01);
  EXPECT_NEAR(std::sqrt(sq / 1e4), 0.05, 0.003);
}

DatasetSpec small_spec() {
  DatasetSpec spec;
  spec.height = spec.width = 8;
  spec.train = 3, spec.test = 2;
  spec.paired = true;
  spec.seed = 11;
  spec.seg_noise = 0.1;
  return spec;
}

TEST(DatasetTest, WriteReadRoundTrip) {
  const Dataset d = generate_dataset(small_spec());
  const fs::path dir = scratch_dir("roundtrip");
  write_dataset(d, dir);
  const Dataset back = read_dataset(dir);
  EXPECT_EQ(back.spec.scene.num_classes, d.spec.scene.num_classes);
  EXPECT_EQ(back.spec.seed, 11u);
  ASSERT_EQ(back.records.size(), 5u);
  EXPECT_EQ(back.split("train").size(), 3u);
  for (std::size_t i = 0; i < 5; ++i) {
    const SampleRecord &a = d.records[i], &b = back.records[i];
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(a.view.image, b.view.image);
    EXPECT_EQ(a.view.seg, b.view.seg);
    EXPECT_EQ(a.view.depth, b.view.depth);
    EXPECT_EQ(a.view.normal, b.view.normal);
    EXPECT_EQ(a.view.boundary, b.view.boundary);
    ASSERT_TRUE(b.pair.has_value());
    EXPECT_EQ(a.pair->depth, b.pair->depth);
    EXPECT_EQ(a.delta_v.rotation, b.delta_v.rotation);
    EXPECT_EQ(a.delta_v.translation, b.delta_v.translation);
  }
  const auto manifest = nlohmann::json::parse(std::ifstream(dir / "manifest.json"));
  EXPECT_EQ(manifest.at("num_classes").get<int>(), 6);
  fs::remove_all(dir);
}

TEST(DatasetTest, GenerationIsSeeded) {
  const Dataset a = generate_dataset(small_spec()), b = generate_dataset(small_spec());
  for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_EQ(a.records[i].view.image, b.records[i].view.image);
}

TEST(DatasetTest, TruncatedBlobIsCorruption) {
  const fs::path dir = scratch_dir("truncated");
  write_dataset(generate_dataset(small_spec()), dir);
  fs::resize_file(dir / "test_0001" / "depth.f32", 10);
  try {
    read_dataset(dir);
    FAIL() << "expected CorruptionError";
  } catch (const CorruptionError& e) {
    EXPECT_NE(std::string(e.what()).find("test_0001"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(DatasetTest, ManifestShapeMismatchIsCorruption) {
  const fs::path dir = scratch_dir("shape");
  write_dataset(generate_dataset(small_spec()), dir);
  auto manifest = nlohmann::json::parse(std::ifstream(dir / "manifest.json"));
  manifest["samples"][1]["view"]["files"]["seg"]["shape"] = {8, 9};
  std::ofstream(dir / "manifest.json") << manifest.dump();
  try {
    read_dataset(dir);
    FAIL() << "expected CorruptionError";
  } catch (const CorruptionError& e) {
    EXPECT_NE(std::string(e.what()).find("train_0001"), std::string::npos);
  }
  std::ofstream(dir / "manifest.json") << "{not json";
  EXPECT_THROW(read_dataset(dir), CorruptionError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace tpmtl
