#include "tpmtl/renderer/camera.hpp"

#include <cmath>
#include <string>

#include "tpmtl/core/error.hpp"

namespace tpmtl {

RigidTransform RigidTransform::translate(double x, double y, double z) {
  RigidTransform t;
  t.translation = {x, y, z};
  return t;
}

RigidTransform RigidTransform::axis_angle(Vec3 axis, double angle) {
  const double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  if (!(n > 0.0)) throw ValidationError("rotation axis must be nonzero");
  const double x = axis[0] / n, y = axis[1] / n, z = axis[2] / n;
  const double c = std::cos(angle), s = std::sin(angle), k = 1.0 - c;
  RigidTransform t;
  t.rotation = {c + x * x * k,     x * y * k - z * s, x * z * k + y * s,
                y * x * k + z * s, c + y * y * k,     y * z * k - x * s,
                z * x * k - y * s, z * y * k + x * s, c + z * z * k};
  return t;
}

Vec3 RigidTransform::apply_dir(const Vec3& d) const {
  const auto& r = rotation;
  return {r[0] * d[0] + r[1] * d[1] + r[2] * d[2], r[3] * d[0] + r[4] * d[1] + r[5] * d[2],
          r[6] * d[0] + r[7] * d[1] + r[8] * d[2]};
}

Vec3 RigidTransform::apply_point(const Vec3& p) const {
  Vec3 q = apply_dir(p);
  for (int i = 0; i < 3; ++i) q[i] += translation[i];
  return q;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) inv.rotation[3 * i + j] = rotation[3 * j + i];
  const Vec3 rt = inv.apply_dir(translation);
  inv.translation = {-rt[0], -rt[1], -rt[2]};
  return inv;
}

bool RigidTransform::is_identity() const {
  const RigidTransform id;
  return rotation == id.rotation && translation == id.translation;
}

void RigidTransform::validate(double tol) const {
  for (double v : rotation)
    if (!std::isfinite(v)) throw ValidationError("rotation has non-finite entries");
  for (double v : translation)
    if (!std::isfinite(v)) throw ValidationError("translation has non-finite entries");
  const auto& r = rotation;
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += r[3 * k + i] * r[3 * k + j];
      worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
    }
  }
  const double det = r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
                     r[2] * (r[3] * r[7] - r[4] * r[6]);
  if (worst > tol) throw ValidationError("rotation is not orthonormal (deviation " + std::to_string(worst) + ")");
  if (std::abs(det - 1.0) > tol) throw ValidationError("rotation determinant is " + std::to_string(det) + ", expected +1");
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform c;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a.rotation[3 * i + k] * b.rotation[3 * k + j];
      c.rotation[3 * i + j] = s;
    }
  }
  c.translation = a.apply_point(b.translation);
  return c;
}

double max_abs_diff(const RigidTransform& a, const RigidTransform& b) {
  double m = 0.0;
  for (int i = 0; i < 9; ++i) m = std::max(m, std::abs(a.rotation[i] - b.rotation[i]));
  for (int i = 0; i < 3; ++i) m = std::max(m, std::abs(a.translation[i] - b.translation[i]));
  return m;
}

RigidTransform relative_transform(const Camera& from, const Camera& to) {
  return compose(to.pose, from.pose.inverse());
}

}  // namespace tpmtl
