#include "tpmtl/core/error.hpp"
#include "tpmtl/renderer/renderer.hpp"

namespace tpmtl {

RenderConfig RenderConfig::preset(const std::string& name) {
  RenderConfig cfg;
  if (name == "nyu") {
    cfg.height = 56, cfg.width = 72;
  } else if (name == "desk") {
    cfg.height = 32, cfg.width = 32;
  } else {
    throw ConfigError("unknown render preset '" + name + "'");
  }
  return cfg;
}

RayBatch make_rays(const Camera& cam, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw ConfigError("render size must be at least 1x1");
  cam.pose.validate();
  const std::size_t p = height * width;
  std::vector<double> o(3 * p), d(3 * p);
  const Vec3 dir = cam.pose.apply_dir({0.0, 0.0, 1.0});
  for (std::size_t i = 0; i < height; ++i) {
    const double y = -1.0 + (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(height);
    for (std::size_t j = 0; j < width; ++j) {
      const double x = -1.0 + (2.0 * static_cast<double>(j) + 1.0) / static_cast<double>(width);
      const Vec3 org = cam.pose.apply_point({x, y, Camera::near_z});
      const std::size_t r = i * width + j;
      for (int k = 0; k < 3; ++k) o[3 * r + k] = org[k], d[3 * r + k] = dir[k];
    }
  }
  RayBatch rays;
  rays.height = height, rays.width = width;
  rays.origins = Tensor({p, 3}, std::move(o));
  rays.directions = Tensor({p, 3}, std::move(d));
  return rays;
}

RayBatch sample_along(const RayBatch& rays, std::size_t samples, SampleMode mode, Rng& rng, double near_offset) {
  if (samples == 0) throw ConfigError("samples per ray must be at least 1");
  if (!(near_offset >= 0.0 && near_offset < rays.t_far)) throw ConfigError("near offset outside the ray span");
  const std::size_t p = rays.num_rays(), s = samples;
  const double lo = near_offset, width = (rays.t_far - lo) / static_cast<double>(s);
  std::vector<double> t(p * s), dl(p * s);
  for (std::size_t r = 0; r < p; ++r) {
    double* tr = t.data() + r * s;
    for (std::size_t i = 0; i < s; ++i) {
      const double u = mode == SampleMode::midpoint ? 0.5 : rng.uniform();
      tr[i] = lo + (static_cast<double>(i) + u) * width;
    }
    double* dr = dl.data() + r * s;
    for (std::size_t i = 0; i + 1 < s; ++i) dr[i] = tr[i + 1] - tr[i];
    dr[s - 1] = rays.t_far - tr[s - 1];
  }
  RayBatch out = rays;
  out.t_samples = Tensor({p, s}, std::move(t));
  out.deltas = Tensor({p, s}, std::move(dl));
  return out;
}

Tensor ray_points(const RayBatch& rays) {
  const std::size_t p = rays.num_rays(), s = rays.num_samples();
  if (s == 0) throw ContractError("ray_points needs sampled rays");
  const auto o = rays.origins.data(), d = rays.directions.data(), t = rays.t_samples.data();
  std::vector<double> pts(3 * p * s);
  for (std::size_t r = 0; r < p; ++r) {
    for (std::size_t i = 0; i < s; ++i) {
      const double ti = t[r * s + i];
      double* q = pts.data() + 3 * (r * s + i);
      for (int k = 0; k < 3; ++k) q[k] = o[3 * r + k] + ti * d[3 * r + k];
    }
  }
  return Tensor({p * s, 3}, std::move(pts));
}

RayBatch transform_rays(const RayBatch& rays, const RigidTransform& delta_v) {
  delta_v.validate();
  if (delta_v.is_identity()) return rays;
  const std::size_t p = rays.num_rays();
  std::vector<double> o(3 * p), d(3 * p);
  const auto so = rays.origins.data(), sd = rays.directions.data();
  for (std::size_t r = 0; r < p; ++r) {
    const Vec3 org = delta_v.apply_point({so[3 * r], so[3 * r + 1], so[3 * r + 2]});
    const Vec3 dir = delta_v.apply_dir({sd[3 * r], sd[3 * r + 1], sd[3 * r + 2]});
    for (int k = 0; k < 3; ++k) o[3 * r + k] = org[k], d[3 * r + k] = dir[k];
  }
  RayBatch out = rays;
  out.origins = Tensor({p, 3}, std::move(o));
  out.directions = Tensor({p, 3}, std::move(d));
  return out;
}

}  // namespace tpmtl
