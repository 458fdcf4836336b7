// AVX2 variants. Built with -mavx2 -mfma and only called after a CPUID check.
// segment_hits avoids FMA so that it reproduces the scalar kernel bit for bit.

#include <immintrin.h>

#include "mshoot/simd.hpp"

namespace mshoot::simd::detail {
namespace {

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), s1);
  }
  for (; i + 4 <= n; i += 4) s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(s0, s1));
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void lincomb_avx2(double* out, const double* base, double h, const double* coef, const double* const* vecs,
                  std::size_t nvec, std::size_t n) {
  const __m256d vh = _mm256_set1_pd(h);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d s = _mm256_setzero_pd();
    for (std::size_t j = 0; j < nvec; ++j)
      s = _mm256_fmadd_pd(_mm256_set1_pd(coef[j]), _mm256_loadu_pd(vecs[j] + i), s);
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(vh, s, _mm256_loadu_pd(base + i)));
  }
  for (; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < nvec; ++j) s += coef[j] * vecs[j][i];
    out[i] = base[i] + h * s;
  }
}

std::size_t segment_hits_avx2(double px1, double py1, double px2, double py2, const SegmentBatch& q,
                              std::uint32_t* idx, double* a, double* b) {
  const double dx1s = px2 - px1;
  const double dy1s = py2 - py1;
  const __m256d dx1 = _mm256_set1_pd(dx1s);
  const __m256d dy1 = _mm256_set1_pd(dy1s);
  const __m256d vpx = _mm256_set1_pd(px1);
  const __m256d vpy = _mm256_set1_pd(py1);
  const __m256d l1 = _mm256_set1_pd(dx1s * dx1s + dy1s * dy1s);
  const __m256d thr = _mm256_set1_pd(kParallelSin2);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= q.size; i += 4) {
    const __m256d qx1 = _mm256_loadu_pd(q.x1 + i);
    const __m256d qy1 = _mm256_loadu_pd(q.y1 + i);
    const __m256d dx2 = _mm256_sub_pd(_mm256_loadu_pd(q.x2 + i), qx1);
    const __m256d dy2 = _mm256_sub_pd(_mm256_loadu_pd(q.y2 + i), qy1);
    const __m256d wx = _mm256_sub_pd(qx1, vpx);
    const __m256d wy = _mm256_sub_pd(qy1, vpy);
    const __m256d den = _mm256_sub_pd(_mm256_mul_pd(dx1, dy2), _mm256_mul_pd(dy1, dx2));
    const __m256d na = _mm256_sub_pd(_mm256_mul_pd(wx, dy2), _mm256_mul_pd(wy, dx2));
    const __m256d nb = _mm256_sub_pd(_mm256_mul_pd(wx, dy1), _mm256_mul_pd(wy, dx1));
    const __m256d l2 = _mm256_add_pd(_mm256_mul_pd(dx2, dx2), _mm256_mul_pd(dy2, dy2));
    const __m256d lhs = _mm256_mul_pd(den, den);
    const __m256d rhs = _mm256_mul_pd(thr, _mm256_mul_pd(l1, l2));
    const __m256d nonpar = _mm256_cmp_pd(lhs, rhs, _CMP_GT_OQ);
    const __m256d va = _mm256_div_pd(na, den);
    const __m256d vb = _mm256_div_pd(nb, den);
    __m256d m = _mm256_and_pd(nonpar, _mm256_cmp_pd(va, zero, _CMP_GE_OQ));
    m = _mm256_and_pd(m, _mm256_cmp_pd(va, one, _CMP_LE_OQ));
    m = _mm256_and_pd(m, _mm256_cmp_pd(vb, zero, _CMP_GE_OQ));
    m = _mm256_and_pd(m, _mm256_cmp_pd(vb, one, _CMP_LE_OQ));
    int bits = _mm256_movemask_pd(m);
    if (bits == 0) continue;
    alignas(32) double la[4], lb[4];
    _mm256_store_pd(la, va);
    _mm256_store_pd(lb, vb);
    for (int lane = 0; lane < 4; ++lane) {
      if (bits & (1 << lane)) {
        idx[count] = static_cast<std::uint32_t>(i + lane);
        a[count] = la[lane];
        b[count] = lb[lane];
        ++count;
      }
    }
  }
  for (; i < q.size; ++i) {
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

const Kernels avx2_kernels{Level::avx2, "avx2", dot_avx2, lincomb_avx2, segment_hits_avx2};

}  // namespace mshoot::simd::detail
