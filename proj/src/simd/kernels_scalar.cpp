#include "mshoot/simd.hpp"

namespace mshoot::simd::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void lincomb_scalar(double* out, const double* base, double h, const double* coef, const double* const* vecs,
                    std::size_t nvec, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < nvec; ++j) s += coef[j] * vecs[j][i];
    out[i] = base[i] + h * s;
  }
}

std::size_t segment_hits_scalar(double px1, double py1, double px2, double py2, const SegmentBatch& q,
                                std::uint32_t* idx, double* a, double* b) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < q.size; ++i) {
    double ai, bi;
    if (segment_solve(px1, py1, px2, py2, q.x1[i], q.y1[i], q.x2[i], q.y2[i], ai, bi)) {
      idx[count] = static_cast<std::uint32_t>(i);
      a[count] = ai;
      b[count] = bi;
      ++count;
    }
  }
  return count;
}

}  // namespace

const Kernels scalar_kernels{Level::scalar, "scalar", dot_scalar, lincomb_scalar, segment_hits_scalar};

}  // namespace mshoot::simd::detail
