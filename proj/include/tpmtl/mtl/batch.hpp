#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tpmtl/autodiff/tensor.hpp"
#include "tpmtl/scenes/scene.hpp"

namespace tpmtl {

/// Stacked per-pixel targets of a batch at one resolution. Pixel rows run
/// over (b, i, j) in row-major order.
struct DenseTargets {
  std::size_t batch = 0, height = 0, width = 0;
  std::vector<int> seg;                  // 255 = ignored
  std::vector<double> depth;             // [rows]
  std::vector<double> normal;            // [rows, 3]
  std::vector<std::uint8_t> normal_mask; // 0 where no unit normal is defined
  std::vector<double> boundary;          // [rows]

  std::size_t rows() const { return batch * height * width; }
};

/// Resamples labels to (height, width): area mean for depth and normals
/// (normals renormalized), nearest for class maps, block maximum for
/// boundaries so thin edges survive. Same-size requests copy exactly.
DenseTargets resample_targets(const std::vector<const ViewLabels*>& views, std::size_t height, std::size_t width);

struct Batch {
  Tensor images;                   // [B,3,H,W]
  DenseTargets main;               // input resolution
  DenseTargets render;             // render resolution
  std::optional<DenseTargets> pair_render;
  std::vector<RigidTransform> delta_v;

  std::size_t size() const { return main.batch; }
};

/// `render_height/width` pick the regularizer target resolution; paired
/// targets are included when every record has a second view.
Batch make_batch(const std::vector<const SampleRecord*>& records, std::size_t render_height, std::size_t render_width);

}  // namespace tpmtl
