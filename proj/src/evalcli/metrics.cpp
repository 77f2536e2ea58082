#include "tpmtl/evalcli/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tpmtl/core/error.hpp"

namespace tpmtl {

namespace {

void check_sizes(const char* what, std::size_t a, std::size_t b) {
  if (a != b)
    throw ValidationError(std::string(what) + ": prediction has " + std::to_string(a) + " values, ground truth " +
                          std::to_string(b));
}

bool selected(std::span<const std::uint8_t> mask, std::size_t i) { return mask.empty() || mask[i] != 0; }

// Binary map of pixels within Chebyshev distance tol of a set pixel.
std::vector<std::uint8_t> dilate(const std::vector<std::uint8_t>& m, std::size_t h, std::size_t w, int tol) {
  std::vector<std::uint8_t> out(m.size(), 0);
  const long H = static_cast<long>(h), W = static_cast<long>(w);
  for (long i = 0; i < H; ++i)
    for (long j = 0; j < W; ++j) {
      if (!m[i * W + j]) continue;
      for (long di = std::max(0L, i - tol); di <= std::min(H - 1, i + tol); ++di)
        for (long dj = std::max(0L, j - tol); dj <= std::min(W - 1, j + tol); ++dj) out[di * W + dj] = 1;
    }
  return out;
}

}  // namespace

double miou(std::span<const int> pred, std::span<const int> gt, int num_classes, int ignore_index) {
  check_sizes("miou", pred.size(), gt.size());
  if (num_classes <= 0) throw ValidationError("miou: class count must be positive");
  std::vector<std::size_t> inter(num_classes, 0), pred_n(num_classes, 0), gt_n(num_classes, 0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == ignore_index) continue;
    if (gt[i] < 0 || gt[i] >= num_classes || pred[i] < 0 || pred[i] >= num_classes)
      throw ValidationError("miou: label outside [0," + std::to_string(num_classes) + ") at pixel " + std::to_string(i));
    ++gt_n[gt[i]];
    ++pred_n[pred[i]];
    if (pred[i] == gt[i]) ++inter[gt[i]];
  }
  double total = 0.0;
  int present = 0;
  for (int k = 0; k < num_classes; ++k) {
    if (gt_n[k] == 0) continue;
    total += static_cast<double>(inter[k]) / static_cast<double>(gt_n[k] + pred_n[k] - inter[k]);
    ++present;
  }
  return present == 0 ? 0.0 : total / present;
}

double pixel_accuracy(std::span<const int> pred, std::span<const int> gt, int ignore_index) {
  check_sizes("pixel_accuracy", pred.size(), gt.size());
  std::size_t hit = 0, n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == ignore_index) continue;
    ++n;
    hit += pred[i] == gt[i];
  }
  return n == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(n);
}

double rmse_depth(std::span<const double> pred, std::span<const double> gt, std::span<const std::uint8_t> mask) {
  check_sizes("rmse_depth", pred.size(), gt.size());
  if (!mask.empty()) check_sizes("rmse_depth mask", mask.size(), gt.size());
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!selected(mask, i)) continue;
    const double d = pred[i] - gt[i];
    s += d * d;
    ++n;
  }
  return n == 0 ? 0.0 : std::sqrt(s / static_cast<double>(n));
}

double mean_angular_error(std::span<const double> pred, std::span<const double> gt, std::span<const std::uint8_t> mask) {
  check_sizes("mean_angular_error", pred.size(), gt.size());
  if (gt.size() % 3 != 0) throw ValidationError("mean_angular_error: fields must be [N,3]");
  const std::size_t n = gt.size() / 3;
  if (!mask.empty()) check_sizes("mean_angular_error mask", mask.size(), n);
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!selected(mask, i)) continue;
    const double* p = pred.data() + 3 * i;
    const double* g = gt.data() + 3 * i;
    const double pn = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    const double gn = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
    double angle = 90.0;
    if (pn > 0.0 && gn > 0.0) {
      const double c = std::clamp((p[0] * g[0] + p[1] * g[1] + p[2] * g[2]) / (pn * gn), -1.0, 1.0);
      angle = std::acos(c) * 180.0 / std::numbers::pi;
    }
    s += angle;
    ++count;
  }
  return count == 0 ? 0.0 : s / static_cast<double>(count);
}

double boundary_f1(const std::vector<BoundaryMap>& maps, int tol) {
  if (tol < 0) throw ValidationError("boundary_f1: tolerance must be non-negative");
  struct Prepared {
    std::vector<std::uint8_t> gt_near;
    std::vector<std::uint8_t> gt;
  };
  std::vector<Prepared> prep;
  for (const BoundaryMap& m : maps) {
    check_sizes("boundary_f1", m.prob.size(), m.height * m.width);
    check_sizes("boundary_f1", m.gt.size(), m.height * m.width);
    Prepared p;
    p.gt.resize(m.gt.size());
    for (std::size_t i = 0; i < m.gt.size(); ++i) p.gt[i] = m.gt[i] >= 0.5;
    p.gt_near = dilate(p.gt, m.height, m.width, tol);
    prep.push_back(std::move(p));
  }
  double best = 0.0;
  for (int k = 1; k <= 19; ++k) {
    const double thr = k / 20.0;
    std::size_t pred_n = 0, pred_hit = 0, gt_n = 0, gt_hit = 0;
    for (std::size_t m = 0; m < maps.size(); ++m) {
      const BoundaryMap& bm = maps[m];
      std::vector<std::uint8_t> pred(bm.prob.size());
      for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = bm.prob[i] >= thr;
      const std::vector<std::uint8_t> pred_near = dilate(pred, bm.height, bm.width, tol);
      for (std::size_t i = 0; i < pred.size(); ++i) {
        pred_n += pred[i];
        pred_hit += pred[i] && prep[m].gt_near[i];
        gt_n += prep[m].gt[i];
        gt_hit += prep[m].gt[i] && pred_near[i];
      }
    }
    if (pred_n == 0 || gt_n == 0) continue;
    const double precision = static_cast<double>(pred_hit) / static_cast<double>(pred_n);
    const double recall = static_cast<double>(gt_hit) / static_cast<double>(gt_n);
    if (precision + recall > 0.0) best = std::max(best, 2.0 * precision * recall / (precision + recall));
  }
  return best;
}

}  // namespace tpmtl
