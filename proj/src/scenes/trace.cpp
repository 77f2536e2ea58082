#include <algorithm>
#include <cmath>
#include <limits>

#include "tpmtl/core/error.hpp"
#include "tpmtl/renderer/renderer.hpp"
#include "tpmtl/scenes/scene.hpp"

namespace tpmtl {

RayHit trace_ray(const Scene& scene, const Vec3& o, const Vec3& d) {
  RayHit best{std::numeric_limits<double>::infinity(), {0, 0, 0}, nullptr};
  for (const Primitive& prim : scene.primitives) {
    const auto hit = prim.intersect(o, d);
    if (hit && hit->t < best.t) best = {hit->t, hit->normal, &prim};
  }
  if (!best.primitive) throw ValidationError("ray escaped the scene; the back plane is missing");
  Vec3& n = best.normal;
  if (n[0] * d[0] + n[1] * d[1] + n[2] * d[2] > 0.0) n = {-n[0], -n[1], -n[2]};
  return best;
}

ViewLabels trace_labels(const Scene& scene, const Camera& cam, std::size_t height, std::size_t width) {
  const RayBatch rays = make_rays(cam, height, width);
  const std::size_t p = height * width;
  ViewLabels out;
  out.height = height, out.width = width, out.pose = cam.pose;
  out.image.assign(3 * p, 0.0f);
  out.seg.assign(p, 0.0f);
  out.depth.assign(p, 0.0f);
  out.normal.assign(3 * p, 0.0f);
  const auto org = rays.origins.data(), dir = rays.directions.data();
  const Vec3& l = scene.light_dir;
  for (std::size_t r = 0; r < p; ++r) {
    const RayHit hit = trace_ray(scene, {org[3 * r], org[3 * r + 1], org[3 * r + 2]},
                                 {dir[3 * r], dir[3 * r + 1], dir[3 * r + 2]});
    const Vec3& n = hit.normal;
    const double lambert = std::max(0.0, n[0] * l[0] + n[1] * l[1] + n[2] * l[2]);
    for (int c = 0; c < 3; ++c) {
      out.image[c * p + r] = static_cast<float>(hit.primitive->albedo[c] * lambert + 0.1);
      out.normal[3 * r + c] = static_cast<float>(n[c]);
    }
    // Origins sit on the near plane, so the ray parameter is the depth.
    out.depth[r] = static_cast<float>(hit.t);
    out.seg[r] = static_cast<float>(hit.primitive->class_id);
  }
  out.boundary = boundary_from_seg(out.seg, height, width);
  return out;
}

std::vector<float> boundary_from_seg(const std::vector<float>& seg, std::size_t height, std::size_t width) {
  if (seg.size() != height * width) throw DimensionError("segmentation map size does not match its shape");
  std::vector<float> b(seg.size(), 0.0f);
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      const float s = seg[i * width + j];
      if ((j > 0 && seg[i * width + j - 1] != s) || (i > 0 && seg[(i - 1) * width + j] != s)) b[i * width + j] = 1.0f;
    }
  }
  return b;
}

bool in_frustum(const Scene& scene, const Camera& cam) {
  const RigidTransform to_cam = cam.pose.inverse();
  for (const Primitive& prim : scene.primitives) {
    Vec3 lo, hi;
    if (prim.kind == PrimitiveKind::plane) continue;
    if (prim.kind == PrimitiveKind::sphere) {
      for (int k = 0; k < 3; ++k) lo[k] = prim.a[k] - prim.radius, hi[k] = prim.a[k] + prim.radius;
    } else {
      lo = prim.a, hi = prim.b;
    }
    for (int corner = 0; corner < 8; ++corner) {
      const Vec3 p{corner & 1 ? hi[0] : lo[0], corner & 2 ? hi[1] : lo[1], corner & 4 ? hi[2] : lo[2]};
      const Vec3 q = to_cam.apply_point(p);
      for (int k = 0; k < 3; ++k)
        if (q[k] < -1.0 || q[k] > 1.0) return false;
    }
  }
  return true;
}

SampleRecord make_pair(const Scene& scene, const Camera& cam, const RigidTransform& delta_v, std::size_t height,
                       std::size_t width, bool* frustum_ok) {
  delta_v.validate();
  Camera second;
  second.pose = compose(delta_v, cam.pose);
  SampleRecord rec;
  rec.view = trace_labels(scene, cam, height, width);
  rec.pair = trace_labels(scene, second, height, width);
  rec.delta_v = relative_transform(cam, second);
  if (frustum_ok) *frustum_ok = in_frustum(scene, cam) && in_frustum(scene, second);
  return rec;
}

namespace {

void perturb_view(ViewLabels& v, double seg_noise, double depth_noise, int num_classes, Rng& rng) {
  if (seg_noise > 0.0) {
    for (float& s : v.seg) {
      if (!rng.bernoulli(seg_noise)) continue;
      const int old = static_cast<int>(s);
      int c = static_cast<int>(rng.uniform_int(0, num_classes - 2));
      if (c >= old) ++c;
      s = static_cast<float>(c);
    }
  }
  if (depth_noise > 0.0)
    for (float& d : v.depth) d = static_cast<float>(d + rng.normal(0.0, depth_noise));
}

}  // namespace

void perturb_labels(SampleRecord& record, double seg_noise, double depth_noise, int num_classes, Rng& rng) {
  if (seg_noise < 0.0 || seg_noise > 1.0 || depth_noise < 0.0) throw ConfigError("noise levels must be non-negative");
  perturb_view(record.view, seg_noise, depth_noise, num_classes, rng);
  if (record.pair) perturb_view(*record.pair, seg_noise, depth_noise, num_classes, rng);
}

}  // namespace tpmtl
