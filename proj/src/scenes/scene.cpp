#include <algorithm>
#include <cmath>
#include <limits>

#include "tpmtl/core/error.hpp"
#include "tpmtl/scenes/scene.hpp"

namespace tpmtl {

namespace {

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 normalized(const Vec3& v) {
  const double n = std::sqrt(dot(v, v));
  if (!(n > 0.0)) throw ValidationError("cannot normalize a zero vector");
  return {v[0] / n, v[1] / n, v[2] / n};
}

Vec3 random_albedo(Rng& rng) { return {rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0)}; }

}  // namespace

Primitive Primitive::sphere(Vec3 center, double radius, int class_id, Vec3 albedo) {
  if (!(radius > 0.0)) throw ValidationError("sphere radius must be positive");
  Primitive p;
  p.kind = PrimitiveKind::sphere, p.a = center, p.radius = radius, p.class_id = class_id, p.albedo = albedo;
  return p;
}

Primitive Primitive::box(Vec3 lo, Vec3 hi, int class_id, Vec3 albedo) {
  for (int k = 0; k < 3; ++k)
    if (!(hi[k] > lo[k])) throw ValidationError("box max corner must exceed min corner");
  Primitive p;
  p.kind = PrimitiveKind::box, p.a = lo, p.b = hi, p.class_id = class_id, p.albedo = albedo;
  return p;
}

Primitive Primitive::plane(Vec3 point, Vec3 normal, int class_id, Vec3 albedo) {
  Primitive p;
  p.kind = PrimitiveKind::plane, p.a = point, p.b = normalized(normal), p.class_id = class_id, p.albedo = albedo;
  return p;
}

std::optional<SurfaceHit> Primitive::intersect(const Vec3& o, const Vec3& d, double t_min) const {
  switch (kind) {
    case PrimitiveKind::sphere: {
      const Vec3 oc{o[0] - a[0], o[1] - a[1], o[2] - a[2]};
      const double bb = dot(oc, d), cc = dot(oc, oc) - radius * radius, dd = dot(d, d);
      const double disc = bb * bb - dd * cc;
      if (disc < 0.0) return std::nullopt;
      const double root = std::sqrt(disc);
      double t = (-bb - root) / dd;
      if (t < t_min) t = (-bb + root) / dd;
      if (t < t_min) return std::nullopt;
      const Vec3 n{(oc[0] + t * d[0]) / radius, (oc[1] + t * d[1]) / radius, (oc[2] + t * d[2]) / radius};
      return SurfaceHit{t, normalized(n)};
    }
    case PrimitiveKind::box: {
      double t0 = -std::numeric_limits<double>::infinity(), t1 = std::numeric_limits<double>::infinity();
      int axis0 = -1, axis1 = -1;
      for (int k = 0; k < 3; ++k) {
        if (d[k] == 0.0) {
          if (o[k] < a[k] || o[k] > b[k]) return std::nullopt;
          continue;
        }
        double ta = (a[k] - o[k]) / d[k], tb = (b[k] - o[k]) / d[k];
        if (ta > tb) std::swap(ta, tb);
        if (ta > t0) t0 = ta, axis0 = k;
        if (tb < t1) t1 = tb, axis1 = k;
      }
      if (t0 > t1) return std::nullopt;
      double t = t0;
      int axis = axis0;
      if (t < t_min) t = t1, axis = axis1;
      if (t < t_min || axis < 0) return std::nullopt;
      Vec3 n{0, 0, 0};
      const double center = 0.5 * (a[axis] + b[axis]);
      n[axis] = o[axis] + t * d[axis] > center ? 1.0 : -1.0;
      return SurfaceHit{t, n};
    }
    case PrimitiveKind::plane: {
      const double denom = dot(b, d);
      if (std::abs(denom) < 1e-12) return std::nullopt;
      const double t = (dot(b, a) - dot(b, o)) / denom;
      if (t < t_min) return std::nullopt;
      return SurfaceHit{t, b};
    }
  }
  return std::nullopt;
}

bool Primitive::contained() const {
  switch (kind) {
    case PrimitiveKind::sphere:
      for (int k = 0; k < 3; ++k)
        if (a[k] - radius < -1.0 || a[k] + radius > 1.0) return false;
      return true;
    case PrimitiveKind::box:
      for (int k = 0; k < 3; ++k)
        if (a[k] < -1.0 || b[k] > 1.0) return false;
      return true;
    case PrimitiveKind::plane:
      return true;
  }
  return false;
}

Primitive back_plane() { return Primitive::plane({0, 0, 1}, {0, 0, -1}, 0, {0.6, 0.6, 0.6}); }

Scene generate_scene(Rng& rng, const SceneParams& params) {
  if (params.num_classes < 2) throw ConfigError("scenes need at least 2 classes");
  if (params.min_objects < 0 || params.max_objects < params.min_objects) throw ConfigError("bad object count range");
  if (!(params.min_size > 0.0) || params.max_size < params.min_size || params.max_size >= 1.0) {
    throw ConfigError("object sizes must satisfy 0 < min <= max < 1");
  }
  Scene scene;
  scene.num_classes = params.num_classes;
  scene.primitives.push_back(back_plane());
  const int n = static_cast<int>(rng.uniform_int(params.min_objects, params.max_objects));
  for (int i = 0; i < n; ++i) {
    const int cls = static_cast<int>(rng.uniform_int(1, params.num_classes - 1));
    const double size = rng.uniform(params.min_size, params.max_size);
    Primitive p;
    // Rejection sampling keeps every object inside the cube.
    do {
      if (rng.bernoulli(0.5)) {
        const Vec3 c{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        p = Primitive::sphere(c, size, cls, random_albedo(rng));
      } else {
        Vec3 lo, hi;
        for (int k = 0; k < 3; ++k) {
          const double half = size * rng.uniform(0.5, 1.0);
          const double c = rng.uniform(-1, 1);
          lo[k] = c - half, hi[k] = c + half;
        }
        p = Primitive::box(lo, hi, cls, random_albedo(rng));
      }
    } while (!p.contained());
    scene.primitives.push_back(p);
  }
  scene.light_dir = normalized({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), -1.0});
  return scene;
}

}  // namespace tpmtl
