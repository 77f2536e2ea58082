#include "tpmtl/mtl/batch.hpp"

#include <algorithm>
#include <cmath>

#include "tpmtl/core/error.hpp"

namespace tpmtl {

namespace {

struct Span {
  std::size_t lo, hi;
};

// Source rows covered by target row i when resizing n -> m.
Span cover(std::size_t i, std::size_t n, std::size_t m) {
  const std::size_t lo = i * n / m;
  const std::size_t hi = std::max(lo + 1, ((i + 1) * n + m - 1) / m);
  return {lo, std::min(hi, n)};
}

std::size_t nearest(std::size_t i, std::size_t n, std::size_t m) {
  return std::min(n - 1, static_cast<std::size_t>((static_cast<double>(i) + 0.5) * static_cast<double>(n) / static_cast<double>(m)));
}

}  // namespace

DenseTargets resample_targets(const std::vector<const ViewLabels*>& views, std::size_t height, std::size_t width) {
  if (views.empty()) throw ContractError("resample_targets needs at least one view");
  if (height == 0 || width == 0) throw ConfigError("target size must be positive");
  DenseTargets t;
  t.batch = views.size(), t.height = height, t.width = width;
  const std::size_t rows = t.rows();
  t.seg.resize(rows);
  t.depth.resize(rows);
  t.normal.resize(3 * rows);
  t.normal_mask.resize(rows);
  t.boundary.resize(rows);
  for (std::size_t b = 0; b < views.size(); ++b) {
    const ViewLabels& v = *views[b];
    const std::size_t H = v.height, W = v.width;
    if (v.seg.size() != H * W || v.depth.size() != H * W || v.normal.size() != 3 * H * W || v.boundary.size() != H * W) {
      throw DimensionError("label maps disagree with their view size");
    }
    for (std::size_t i = 0; i < height; ++i) {
      const Span ri = cover(i, H, height);
      for (std::size_t j = 0; j < width; ++j) {
        const Span cj = cover(j, W, width);
        const std::size_t r = (b * height + i) * width + j;
        t.seg[r] = static_cast<int>(v.seg[nearest(i, H, height) * W + nearest(j, W, width)]);
        double d = 0.0, edge = 0.0, n[3] = {0, 0, 0};
        for (std::size_t y = ri.lo; y < ri.hi; ++y) {
          for (std::size_t x = cj.lo; x < cj.hi; ++x) {
            const std::size_t s = y * W + x;
            d += v.depth[s];
            edge = std::max(edge, static_cast<double>(v.boundary[s]));
            for (int k = 0; k < 3; ++k) n[k] += v.normal[3 * s + k];
          }
        }
        const double count = static_cast<double>((ri.hi - ri.lo) * (cj.hi - cj.lo));
        t.depth[r] = d / count;
        t.boundary[r] = edge;
        const double norm = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
        t.normal_mask[r] = norm > 1e-9;
        for (int k = 0; k < 3; ++k) t.normal[3 * r + k] = norm > 1e-9 ? n[k] / norm : 0.0;
      }
    }
  }
  return t;
}

Batch make_batch(const std::vector<const SampleRecord*>& records, std::size_t render_height, std::size_t render_width) {
  if (records.empty()) throw ConfigError("batch size must be at least 1");
  const std::size_t H = records[0]->view.height, W = records[0]->view.width;
  std::vector<double> pixels;
  pixels.reserve(records.size() * 3 * H * W);
  std::vector<const ViewLabels*> views, pairs;
  bool all_paired = true;
  Batch batch;
  for (const SampleRecord* r : records) {
    if (r->view.height != H || r->view.width != W) throw DimensionError("batch mixes image sizes");
    if (r->view.image.size() != 3 * H * W) throw DimensionError("sample " + r->id + " has a malformed image");
    pixels.insert(pixels.end(), r->view.image.begin(), r->view.image.end());
    views.push_back(&r->view);
    if (r->pair) {
      pairs.push_back(&*r->pair);
      batch.delta_v.push_back(r->delta_v);
    } else {
      all_paired = false;
    }
  }
  batch.images = Tensor({records.size(), 3, H, W}, std::move(pixels));
  batch.main = resample_targets(views, H, W);
  batch.render = resample_targets(views, render_height, render_width);
  if (all_paired) {
    batch.pair_render = resample_targets(pairs, render_height, render_width);
  } else {
    batch.delta_v.clear();
  }
  return batch;
}

}  // namespace tpmtl
