#pragma once

// Data-parallel inner kernels with a scalar reference implementation and
// ISA-specific variants selected at runtime. Every variant must agree with
// the scalar kernel: bitwise for segment_hits, to rounding for the others.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace mshoot::simd {

enum class Level { scalar, avx2 };

/// Structure-of-arrays batch of 2D segments (q1 -> q2).
struct SegmentBatch {
  const double* x1;
  const double* y1;
  const double* x2;
  const double* y2;
  std::size_t size;
};

/// Squared sine threshold below which two segments count as parallel.
inline constexpr double kParallelSin2 = 1e-28;

struct Kernels {
  Level level;
  const char* name;
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// out[i] = base[i] + h * sum_j coef[j] * vecs[j][i]
  void (*lincomb)(double* out, const double* base, double h, const double* coef,
                  const double* const* vecs, std::size_t nvec, std::size_t n);
  /// Tests segment (px1,py1)->(px2,py2) against every segment of `batch`.
  /// Writes indices of intersecting segments with their parameters a (along p)
  /// and b (along q); returns the hit count. Output arrays hold batch.size.
  std::size_t (*segment_hits)(double px1, double py1, double px2, double py2, const SegmentBatch& batch,
                              std::uint32_t* idx, double* a, double* b);
};

/// Kernel table currently in use.
const Kernels& active();
/// Kernel table for a specific level; throws if that level is unavailable.
const Kernels& kernels_for(Level level);
bool available(Level level);
/// Overrides runtime selection (tests and benchmarks).
void set_active(Level level);
Level parse_level(std::string_view name);

/// Reference pairwise test shared by all variants. Returns true on a hit.
inline bool segment_solve(double px1, double py1, double px2, double py2, double qx1, double qy1, double qx2,
                          double qy2, double& a, double& b) {
  const double dx1 = px2 - px1;
  const double dy1 = py2 - py1;
  const double dx2 = qx2 - qx1;
  const double dy2 = qy2 - qy1;
  const double wx = qx1 - px1;
  const double wy = qy1 - py1;
  const double den = dx1 * dy2 - dy1 * dx2;
  const double na = wx * dy2 - wy * dx2;
  const double nb = wx * dy1 - wy * dx1;
  const double l1 = dx1 * dx1 + dy1 * dy1;
  const double l2 = dx2 * dx2 + dy2 * dy2;
  if (den * den <= kParallelSin2 * (l1 * l2)) return false;
  a = na / den;
  b = nb / den;
  return a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0;
}

namespace detail {
extern const Kernels scalar_kernels;
#if defined(MSHOOT_HAVE_AVX2)
extern const Kernels avx2_kernels;
#endif
}  // namespace detail

}  // namespace mshoot::simd
