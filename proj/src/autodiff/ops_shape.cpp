#include <memory>
#include <numeric>

#include "tpmtl/autodiff/ops.hpp"
#include "tpmtl/core/error.hpp"

namespace tpmtl {

namespace {

std::vector<std::size_t> strides_of(const Shape& s) {
  std::vector<std::size_t> st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

}  // namespace

Tensor permute(const Tensor& x, const std::vector<std::size_t>& order) {
  const std::size_t r = x.rank();
  if (order.size() != r) throw DimensionError("permute: order length differs from rank");
  std::vector<bool> seen(r, false);
  for (std::size_t a : order) {
    if (a >= r || seen[a]) throw DimensionError("permute: invalid axis order");
    seen[a] = true;
  }
  Recorder rec("permute", {&x});
  Shape shape(r);
  for (std::size_t i = 0; i < r; ++i) shape[i] = x.dim(order[i]);
  const auto in_strides = strides_of(x.shape());
  // source offset for each output element
  auto src = std::make_shared<std::vector<std::size_t>>(x.numel());
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t o = 0; o < x.numel(); ++o) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < r; ++i) off += idx[i] * in_strides[order[i]];
    (*src)[o] = off;
    for (std::size_t i = r; i-- > 0;) {
      if (++idx[i] < shape[i]) break;
      idx[i] = 0;
    }
  }
  auto xd = x.data();
  std::vector<double> out(x.numel());
  for (std::size_t o = 0; o < out.size(); ++o) out[o] = xd[(*src)[o]];
  return rec.emit(std::move(shape), std::move(out), [x, src](Tape& t, std::span<const double> g) {
    auto gx = t.grad_sink(x);
    for (std::size_t o = 0; o < g.size(); ++o) gx[(*src)[o]] += g[o];
  });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
  if (axis >= x.rank() || begin > end || end > x.dim(axis))
    throw DimensionError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") invalid for axis " + std::to_string(axis) + " of " + shape_str(x.shape()));
  Recorder rec("slice", {&x});
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const std::size_t len = end - begin, full = x.dim(axis);
  Shape shape = x.shape();
  shape[axis] = len;
  auto xd = x.data();
  std::vector<double> out(outer * len * inner);
  for (std::size_t o = 0; o < outer; ++o)
    std::copy_n(xd.data() + (o * full + begin) * inner, len * inner, out.data() + o * len * inner);
  return rec.emit(std::move(shape), std::move(out), [x, outer, inner, len, full, begin](Tape& t, std::span<const double> g) {
    auto gx = t.grad_sink(x);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t k = 0; k < len * inner; ++k) gx[(o * full + begin) * inner + k] += g[o * len * inner + k];
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const Shape& ref = parts[0].shape();
  if (axis >= ref.size()) throw DimensionError("concat: axis out of range");
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != ref.size()) throw DimensionError("concat: rank mismatch");
    for (std::size_t i = 0; i < ref.size(); ++i)
      if (i != axis && p.dim(i) != ref[i])
        throw DimensionError("concat: shape mismatch " + shape_str(p.shape()) + " vs " + shape_str(ref));
    total += p.dim(axis);
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= ref[i];
  for (std::size_t i = axis + 1; i < ref.size(); ++i) inner *= ref[i];
  Shape shape = ref;
  shape[axis] = total;
  std::vector<double> out(outer * total * inner);
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    const std::size_t len = p.dim(axis);
    auto pd = p.data();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(pd.data() + o * len * inner, len * inner, out.data() + (o * total + offset) * inner);
    offset += len;
  }
  std::vector<const Tensor*> inputs;
  for (const Tensor& p : parts) inputs.push_back(&p);
  Recorder rec("concat", inputs);
  return rec.emit(std::move(shape), std::move(out), [parts, axis, outer, inner, total](Tape& t, std::span<const double> g) {
    std::size_t offset = 0;
    for (const Tensor& p : parts) {
      const std::size_t len = p.dim(axis);
      auto gp = t.grad_sink(p);
      if (!gp.empty())
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t k = 0; k < len * inner; ++k) gp[o * len * inner + k] += g[(o * total + offset) * inner + k];
      offset += len;
    }
  });
}

}  // namespace tpmtl
