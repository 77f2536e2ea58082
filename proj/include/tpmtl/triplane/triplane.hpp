#pragma once

#include "tpmtl/autodiff/layers.hpp"

namespace tpmtl {

/// Three axis-aligned feature planes over the cube [-1,1]^3, each [R,R,C'].
/// Plane (u,v) axes are (x,y), (y,z) and (x,z); rows follow v, columns u.
struct TriPlane {
  Tensor xy, yz, xz;

  std::size_t resolution() const { return xy.dim(0); }
  std::size_t channels() const { return xy.dim(2); }
};

struct TriPlaneConfig {
  std::size_t in_channels = 64;
  std::size_t plane_channels = 64;
  double dropout = 0.15;
};

/// conv -> BN -> ReLU -> dropout -> conv, producing 3*C' channels that are
/// split into the xy, yz and xz planes.
class TriPlaneEncoder {
 public:
  TriPlaneEncoder() = default;
  TriPlaneEncoder(const TriPlaneConfig& cfg, Rng& rng);

  /// fmap is [C,H,W] or [B,C,H,W]; returns [3C',H,W] or [B,3C',H,W].
  Tensor features(const Tensor& fmap, Mode mode, Rng& rng);

  const TriPlaneConfig& config() const { return cfg_; }
  void parameters(const std::string& prefix, const TensorVisitor& fn);
  void buffers(const std::string& prefix, const TensorVisitor& fn);

 private:
  TriPlaneConfig cfg_;
  Conv3x3 conv1_;
  BatchNorm bn1_;
  Conv3x3 conv2_;
};

/// Encodes one square feature map [C,R,R] into a tri-plane.
TriPlane encode_triplane(TriPlaneEncoder& enc, const Tensor& fmap, Mode mode, Rng& rng);

/// Encodes a batch [B,C,R,R]; batch norm statistics span the whole batch.
std::vector<TriPlane> encode_triplanes(TriPlaneEncoder& enc, const Tensor& fmaps, Mode mode, Rng& rng);

/// Splits a [3C',R,R] feature map into the three planes, permuted to [R,R,C'].
TriPlane split_planes(const Tensor& features);

/// Center-crops the last two dims of [C,H,W] or [B,C,H,W] to a square.
Tensor center_square(const Tensor& fmap);

/// e_xy(x,y) + e_yz(y,z) + e_xz(x,z) for points [N,3] -> [N,C'].
Tensor sample_triplane(const TriPlane& tp, const Tensor& points);

}  // namespace tpmtl
