#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tpmtl/core/rng.hpp"
#include "tpmtl/renderer/camera.hpp"

namespace tpmtl {

enum class PrimitiveKind { sphere, box, plane };

struct SurfaceHit {
  double t;
  Vec3 normal;  // outward unit normal
};

struct Primitive {
  PrimitiveKind kind = PrimitiveKind::sphere;
  /// sphere: center; box: min corner; plane: a point on it.
  Vec3 a{0, 0, 0};
  /// box: max corner; plane: unit normal.
  Vec3 b{0, 0, 0};
  double radius = 0.0;
  int class_id = 1;
  Vec3 albedo{1, 1, 1};

  static Primitive sphere(Vec3 center, double radius, int class_id, Vec3 albedo);
  static Primitive box(Vec3 lo, Vec3 hi, int class_id, Vec3 albedo);
  static Primitive plane(Vec3 point, Vec3 normal, int class_id, Vec3 albedo);

  /// Nearest intersection with t >= t_min. Planes are unbounded.
  std::optional<SurfaceHit> intersect(const Vec3& origin, const Vec3& dir, double t_min = 0.0) const;
  /// Whether the primitive lies in [-1,1]^3 (planes always do once clipped).
  bool contained() const;
};

/// Primitives in order; index 0 is the back plane z = +1 with class 0.
struct Scene {
  std::vector<Primitive> primitives;
  Vec3 light_dir{0, 0, -1};
  int num_classes = 6;
};

struct SceneParams {
  int min_objects = 2;
  int max_objects = 5;
  double min_size = 0.25;
  double max_size = 0.55;
  int num_classes = 6;
};

Primitive back_plane();
Scene generate_scene(Rng& rng, const SceneParams& params);

/// Labels of one view. Layouts: image [3,H,W]; seg, depth, boundary [H,W];
/// normal [H,W,3] in world coordinates.
struct ViewLabels {
  std::size_t height = 0, width = 0;
  RigidTransform pose;
  std::vector<float> image, seg, depth, normal, boundary;
};

struct SampleRecord {
  std::string id;
  std::string split = "train";
  ViewLabels view;
  /// Second view with delta_v = pose' ∘ pose^-1, when paired.
  std::optional<ViewLabels> pair;
  RigidTransform delta_v;
};

struct RayHit {
  double t;
  Vec3 normal;  // unit, facing against the ray
  const Primitive* primitive;
};

/// Nearest hit along one ray, in double precision.
RayHit trace_ray(const Scene& scene, const Vec3& origin, const Vec3& dir);

/// Labels are stored as float32; `trace_ray` gives the exact values.
ViewLabels trace_labels(const Scene& scene, const Camera& cam, std::size_t height, std::size_t width);

/// Boundary map: a pixel is an edge when its class differs from its left or
/// upper neighbour, so every class discontinuity yields a 1-pixel edge.
std::vector<float> boundary_from_seg(const std::vector<float>& seg, std::size_t height, std::size_t width);

/// True when every object stays inside the camera's view volume.
bool in_frustum(const Scene& scene, const Camera& cam);

/// Traces both views. `frustum_ok` reports whether the second camera keeps
/// every object in view.
SampleRecord make_pair(const Scene& scene, const Camera& cam, const RigidTransform& delta_v, std::size_t height,
                       std::size_t width, bool* frustum_ok = nullptr);

/// Replaces a `seg_noise` fraction of class labels with a different random
/// class and adds N(0, depth_noise) to depth, in both views. Boundary maps
/// stay as traced.
void perturb_labels(SampleRecord& record, double seg_noise, double depth_noise, int num_classes, Rng& rng);

}  // namespace tpmtl
