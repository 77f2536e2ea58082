#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tpmtl/autodiff/tape.hpp"
#include "tpmtl/autodiff/tensor.hpp"
#include "tpmtl/core/rng.hpp"

namespace tpmtl {

// Elementwise arithmetic. Broadcasting is limited to exact shape match or a
// single-element operand; anything else raises DimensionError.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double b);
Tensor scale(const Tensor& a, double s);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }

Tensor matmul(const Tensor& a, const Tensor& b);
/// x[N x K] * w[K x M] + b[M]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
/// leaky_relu(linear(x, w, b), slope) as one node; slope must be positive.
Tensor linear_leaky_relu(const Tensor& x, const Tensor& w, const Tensor& b, double slope);

/// 3x3 cross-correlation, stride 1, zero padding 1. x is [C,H,W] or [B,C,H,W],
/// w is [Cout,C,3,3], b is [Cout].
Tensor conv2d_3x3(const Tensor& x, const Tensor& w, const Tensor& b);
/// 2x2 mean pooling with stride 2 over the last two dims (even sizes).
Tensor avg_pool2x2(const Tensor& x);
/// Nearest-neighbour upsampling of the last two dims by an integer factor.
Tensor upsample_nearest(const Tensor& x, int factor);

Tensor leaky_relu(const Tensor& x, double slope);
Tensor relu(const Tensor& x);
/// ln(1 + e^x), returning x itself above 30.
Tensor softplus(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor softmax_lastdim(const Tensor& x);
/// Unit-normalizes each row of the last dim; zero rows stay zero.
Tensor l2_normalize_lastdim(const Tensor& x);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

Tensor permute(const Tensor& x, const std::vector<std::size_t>& order);
/// Keeps indices [begin, end) of `axis`.
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);

struct BatchNormStats {
  explicit BatchNormStats(std::size_t channels = 0)
      : running_mean(Tensor::zeros({channels})), running_var(Tensor::full({channels}, 1.0)) {}
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Per-channel normalization over batch and spatial axes of [C,H,W] or
/// [B,C,H,W]. Train mode uses batch statistics and updates the running
/// estimates; eval mode uses the running estimates.
Tensor batchnorm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   BatchNormStats& stats, Mode mode);

/// Inverted dropout: train mode zeroes with probability `rate` and rescales
/// survivors by 1/(1-rate); eval mode is the identity.
Tensor dropout(const Tensor& x, double rate, Rng& rng, Mode mode);

/// plane [R,R,C], uv [N,2] -> [N,C]; align-corners with border clamping.
Tensor bilinear_sample_2d(const Tensor& plane, const Tensor& uv);
/// Sum of bilinear lookups of points [N,3] into the xy, yz and xz planes,
/// each [R,R,C] -> [N,C].
Tensor triplane_sample(const Tensor& xy, const Tensor& yz, const Tensor& xz, const Tensor& points);

/// Quadrature weights for rays [P,S] of densities and spacings.
Tensor composite_weights(const Tensor& sigma, const Tensor& deltas);
/// exp(-sum_i sigma_i delta_i) per ray, [P].
Tensor transmittance_final(const Tensor& sigma, const Tensor& deltas);
/// weights [P,S], values [P,S,D] -> [P,D]
Tensor weighted_sum_samples(const Tensor& weights, const Tensor& values);

// Loss primitives. Each returns the mean over valid rows; with no valid row
// the result is an exact zero with no gradient contribution.

/// Sum over the last dim of |pred - target|, averaged over rows with mask != 0.
/// An empty mask means every row is valid.
Tensor l1_loss(const Tensor& pred, const Tensor& target, std::span<const std::uint8_t> mask = {});
/// -log p[label] for probability rows [N,K]; rows whose label equals ignore_index are skipped.
Tensor nll_loss(const Tensor& probs, std::span<const int> labels, int ignore_index = 255);
/// Weighted binary cross-entropy on probabilities: positives weighted by
/// pos_weight, negatives by 1 - pos_weight.
Tensor bce_loss(const Tensor& prob, const Tensor& target, double pos_weight);

}  // namespace tpmtl
