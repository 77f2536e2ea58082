#pragma once

#include <array>

namespace tpmtl {

using Vec3 = std::array<double, 3>;

/// x -> R x + t with R a proper rotation (row-major).
struct RigidTransform {
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};
  Vec3 translation{0, 0, 0};

  static RigidTransform identity() { return {}; }
  static RigidTransform translate(double x, double y, double z);
  /// Right-handed rotation by `angle` radians about a (normalized) axis.
  static RigidTransform axis_angle(Vec3 axis, double angle);

  Vec3 apply_point(const Vec3& p) const;
  Vec3 apply_dir(const Vec3& d) const;
  RigidTransform inverse() const;
  bool is_identity() const;

  /// Throws ValidationError unless the rotation is orthonormal with
  /// determinant +1 within `tol` and all entries are finite.
  void validate(double tol = 1e-9) const;
};

/// a ∘ b: applies b first.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

double max_abs_diff(const RigidTransform& a, const RigidTransform& b);

/// Orthographic camera looking along +z through the image square [-1,1]^2,
/// from z = -1 to z = +1 in its own frame. `pose` maps camera to world.
struct Camera {
  RigidTransform pose;

  static constexpr double near_z = -1.0;
  static constexpr double far_z = 1.0;
  /// Ray parameter span between the near and far planes.
  static constexpr double depth_range() { return far_z - near_z; }
};

/// Pose of `to` relative to `from`: to.pose ∘ from.pose^-1.
RigidTransform relative_transform(const Camera& from, const Camera& to);

}  // namespace tpmtl
