#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tpmtl {

/// Mean over classes present in gt of |pred ∩ gt| / |pred ∪ gt|. Pixels whose
/// gt equals `ignore_index` are skipped. Labels outside [0, K) raise
/// ValidationError.
double miou(std::span<const int> pred, std::span<const int> gt, int num_classes, int ignore_index = 255);

/// Fraction of non-ignored pixels where pred == gt.
double pixel_accuracy(std::span<const int> pred, std::span<const int> gt, int ignore_index = 255);

/// sqrt(mean (pred - gt)^2) over pixels with a nonzero mask entry (all
/// pixels when the mask is empty).
double rmse_depth(std::span<const double> pred, std::span<const double> gt, std::span<const std::uint8_t> mask = {});

/// Mean angle in degrees between [N,3] normal fields. Predictions are
/// normalized first; a zero prediction counts as 90 degrees.
double mean_angular_error(std::span<const double> pred, std::span<const double> gt,
                          std::span<const std::uint8_t> mask = {});

/// One image of boundary probabilities and binary ground truth, row-major.
struct BoundaryMap {
  std::size_t height = 0, width = 0;
  std::vector<double> prob;
  std::vector<double> gt;
};

/// Dataset-level max-F1 over thresholds 0.05, 0.10, ..., 0.95. A predicted
/// edge pixel is a hit when a gt edge lies within Chebyshev distance `tol`,
/// and likewise for recall. F1 is 0 when nothing is predicted.
double boundary_f1(const std::vector<BoundaryMap>& maps, int tol = 1);

}  // namespace tpmtl
