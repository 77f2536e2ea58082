#include "tpmtl/kernels/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tpmtl::kernels {

namespace {

void clamp_axis(int R, double coord, int& lo, int& hi, double& frac, double& dcoord) {
  const double scale = 0.5 * (R - 1);
  double p = (coord + 1.0) * scale;
  dcoord = scale;
  if (p <= 0.0) {
    p = 0.0;
    if (coord < -1.0) dcoord = 0.0;
  } else if (p >= R - 1) {
    p = R - 1;
    if (coord > 1.0) dcoord = 0.0;
  }
  if (R == 1) {
    lo = hi = 0;
    frac = 0.0;
    dcoord = 0.0;
    return;
  }
  lo = std::min(static_cast<int>(std::floor(p)), R - 2);
  hi = lo + 1;
  frac = p - lo;
}

}  // namespace

BilinearTap bilinear_tap(int R, double u, double v) {
  BilinearTap t{};
  clamp_axis(R, u, t.j0, t.j1, t.fx, t.du);
  clamp_axis(R, v, t.i0, t.i1, t.fy, t.dv);
  return t;
}

void set_max_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace tpmtl::kernels
