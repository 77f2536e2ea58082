#include "tpmtl/triplane/triplane.hpp"

#include "tpmtl/core/error.hpp"

namespace tpmtl {

TriPlaneEncoder::TriPlaneEncoder(const TriPlaneConfig& cfg, Rng& rng)
    : cfg_(cfg),
      conv1_(cfg.in_channels, cfg.plane_channels, rng),
      bn1_(cfg.plane_channels),
      conv2_(cfg.plane_channels, 3 * cfg.plane_channels, rng) {
  if (cfg.in_channels == 0 || cfg.plane_channels == 0) throw ConfigError("tri-plane channel counts must be positive");
}

Tensor TriPlaneEncoder::features(const Tensor& fmap, Mode mode, Rng& rng) {
  Tensor h = relu(bn1_(conv1_(fmap), mode));
  h = dropout(h, cfg_.dropout, rng, mode);
  return conv2_(h);
}

void TriPlaneEncoder::parameters(const std::string& prefix, const TensorVisitor& fn) {
  conv1_.parameters(prefix + ".conv1", fn);
  bn1_.parameters(prefix + ".bn1", fn);
  conv2_.parameters(prefix + ".conv2", fn);
}

void TriPlaneEncoder::buffers(const std::string& prefix, const TensorVisitor& fn) {
  bn1_.buffers(prefix + ".bn1", fn);
}

namespace {

void require_square(const Tensor& fmap) {
  if (fmap.rank() < 3) throw DimensionError("tri-plane input must be [C,H,W] or [B,C,H,W], got " + shape_str(fmap.shape()));
  const std::size_t h = fmap.dim(fmap.rank() - 2);
  const std::size_t w = fmap.dim(fmap.rank() - 1);
  if (h != w) throw DimensionError("tri-plane input must be square, got " + shape_str(fmap.shape()));
}

}  // namespace

TriPlane encode_triplane(TriPlaneEncoder& enc, const Tensor& fmap, Mode mode, Rng& rng) {
  if (fmap.rank() != 3) throw DimensionError("encode_triplane expects [C,H,W], got " + shape_str(fmap.shape()));
  require_square(fmap);
  return split_planes(enc.features(fmap, mode, rng));
}

std::vector<TriPlane> encode_triplanes(TriPlaneEncoder& enc, const Tensor& fmaps, Mode mode, Rng& rng) {
  if (fmaps.rank() != 4) throw DimensionError("encode_triplanes expects [B,C,H,W], got " + shape_str(fmaps.shape()));
  require_square(fmaps);
  const Tensor all = enc.features(fmaps, mode, rng);
  const std::size_t b = all.dim(0);
  std::vector<TriPlane> out;
  out.reserve(b);
  for (std::size_t i = 0; i < b; ++i) {
    const Tensor one = slice(all, 0, i, i + 1);
    out.push_back(split_planes(one.reshape({one.dim(1), one.dim(2), one.dim(3)})));
  }
  return out;
}

TriPlane split_planes(const Tensor& features) {
  if (features.rank() != 3 || features.dim(0) % 3 != 0) {
    throw DimensionError("split_planes expects [3C',R,R], got " + shape_str(features.shape()));
  }
  require_square(features);
  const std::size_t c = features.dim(0) / 3;
  auto plane = [&](std::size_t k) { return permute(slice(features, 0, k * c, (k + 1) * c), {1, 2, 0}); };
  return TriPlane{plane(0), plane(1), plane(2)};
}

Tensor center_square(const Tensor& fmap) {
  if (fmap.rank() < 2) throw DimensionError("center_square needs two spatial dims, got " + shape_str(fmap.shape()));
  const std::size_t ha = fmap.rank() - 2, wa = fmap.rank() - 1;
  const std::size_t h = fmap.dim(ha), w = fmap.dim(wa);
  if (h == w) return fmap;
  if (h > w) {
    const std::size_t off = (h - w) / 2;
    return slice(fmap, ha, off, off + w);
  }
  const std::size_t off = (w - h) / 2;
  return slice(fmap, wa, off, off + h);
}

Tensor sample_triplane(const TriPlane& tp, const Tensor& points) {
  if (points.rank() != 2 || points.dim(1) != 3) {
    throw DimensionError("sample_triplane expects points [N,3], got " + shape_str(points.shape()));
  }
  const std::size_t r = tp.resolution(), c = tp.channels();
  for (const Tensor* p : {&tp.yz, &tp.xz}) {
    if (p->rank() != 3 || p->dim(0) != r || p->dim(1) != r || p->dim(2) != c) {
      throw DimensionError("tri-plane planes disagree: " + shape_str(tp.xy.shape()) + " vs " + shape_str(p->shape()));
    }
  }
  return triplane_sample(tp.xy, tp.yz, tp.xz, points);
}

}  // namespace tpmtl
