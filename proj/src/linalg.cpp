#include "mshoot/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace mshoot {

Mat4 Mat4::identity() { return diagonal({1.0, 1.0, 1.0, 1.0}); }

Mat4 Mat4::diagonal(const Vec4& d) {
  Mat4 m;
  for (int i = 0; i < 4; ++i) m(i, i) = d[i];
  return m;
}

Mat4 Mat4::from_columns(const Vec4& c0, const Vec4& c1, const Vec4& c2, const Vec4& c3) {
  Mat4 m;
  m.set_column(0, c0);
  m.set_column(1, c1);
  m.set_column(2, c2);
  m.set_column(3, c3);
  return m;
}

Mat4 Mat4::transposed() const {
  Mat4 t;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) t(c, r) = (*this)(r, c);
  return t;
}

double Mat4::max_abs() const {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

Mat4 operator*(const Mat4& x, const Mat4& y) {
  Mat4 z;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += x(r, k) * y(k, c);
      z(r, c) = s;
    }
  return z;
}

Vec4 operator*(const Mat4& x, const Vec4& v) {
  Vec4 out{};
  for (int r = 0; r < 4; ++r)
    out[r] = x(r, 0) * v[0] + x(r, 1) * v[1] + x(r, 2) * v[2] + x(r, 3) * v[3];
  return out;
}

Mat4 operator-(const Mat4& x, const Mat4& y) {
  Mat4 z;
  for (int i = 0; i < 16; ++i) z.a[i] = x.a[i] - y.a[i];
  return z;
}

Mat4 operator*(double s, const Mat4& x) {
  Mat4 z;
  for (int i = 0; i < 16; ++i) z.a[i] = s * x.a[i];
  return z;
}

Mat4 symplectic_J() {
  Mat4 J;
  J(0, 2) = 1.0;
  J(1, 3) = 1.0;
  J(2, 0) = -1.0;
  J(3, 1) = -1.0;
  return J;
}

double omega(const Vec4& u, const Vec4& v) {
  // u^T J v with J = [[0, I], [-I, 0]]
  return u[0] * v[2] + u[1] * v[3] - u[2] * v[0] - u[3] * v[1];
}

namespace {

// LU with partial pivoting in place; returns false on a tiny pivot.
bool lu_decompose(Mat4& A, std::array<int, 4>& perm, double pivot_tol, int* swaps = nullptr) {
  const double scale = std::max(A.max_abs(), 1e-300);
  int nswap = 0;
  for (int i = 0; i < 4; ++i) perm[i] = i;
  for (int k = 0; k < 4; ++k) {
    int p = k;
    for (int r = k + 1; r < 4; ++r)
      if (std::abs(A(r, k)) > std::abs(A(p, k))) p = r;
    if (std::abs(A(p, k)) <= pivot_tol * scale) return false;
    if (p != k) {
      for (int c = 0; c < 4; ++c) std::swap(A(k, c), A(p, c));
      std::swap(perm[k], perm[p]);
      ++nswap;
    }
    for (int r = k + 1; r < 4; ++r) {
      const double f = A(r, k) / A(k, k);
      A(r, k) = f;
      for (int c = k + 1; c < 4; ++c) A(r, c) -= f * A(k, c);
    }
  }
  if (swaps) *swaps = nswap;
  return true;
}

Vec4 lu_solve(const Mat4& LU, const std::array<int, 4>& perm, const Vec4& b) {
  Vec4 y{};
  for (int i = 0; i < 4; ++i) {
    double s = b[perm[i]];
    for (int k = 0; k < i; ++k) s -= LU(i, k) * y[k];
    y[i] = s;
  }
  Vec4 x{};
  for (int i = 3; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < 4; ++k) s -= LU(i, k) * x[k];
    x[i] = s / LU(i, i);
  }
  return x;
}

double inf_norm(const Mat4& A) {
  double m = 0.0;
  for (int r = 0; r < 4; ++r) {
    double s = 0.0;
    for (int c = 0; c < 4; ++c) s += std::abs(A(r, c));
    m = std::max(m, s);
  }
  return m;
}

}  // namespace

Vec4 solve(const Mat4& A, const Vec4& b, double pivot_tol) {
  Mat4 LU = A;
  std::array<int, 4> perm{};
  if (!lu_decompose(LU, perm, pivot_tol)) throw DegenerateError("4x4 solve: matrix is numerically singular");
  return lu_solve(LU, perm, b);
}

Mat4 inverse(const Mat4& A, double pivot_tol) {
  Mat4 LU = A;
  std::array<int, 4> perm{};
  if (!lu_decompose(LU, perm, pivot_tol)) throw DegenerateError("4x4 inverse: matrix is numerically singular");
  Mat4 inv;
  for (int c = 0; c < 4; ++c) {
    Vec4 e{};
    e[c] = 1.0;
    inv.set_column(c, lu_solve(LU, perm, e));
  }
  return inv;
}

double determinant(const Mat4& A) {
  Mat4 LU = A;
  std::array<int, 4> perm{};
  int swaps = 0;
  if (!lu_decompose(LU, perm, 0.0, &swaps)) return 0.0;
  double d = (swaps % 2) ? -1.0 : 1.0;
  for (int i = 0; i < 4; ++i) d *= LU(i, i);
  return d;
}

double condition_number(const Mat4& A) {
  try {
    return inf_norm(A) * inf_norm(inverse(A, 0.0));
  } catch (const DegenerateError&) {
    return INFINITY;
  }
}

double trace(const Mat4& A) { return A(0, 0) + A(1, 1) + A(2, 2) + A(3, 3); }

Vec4 least_singular_vector(const Mat4& A, double* smallest_singular_value) {
  // One-sided Jacobi: rotate column pairs of U = A V until mutually orthogonal.
  Mat4 U = A;
  Mat4 V = Mat4::identity();
  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < 3; ++p)
      for (int q = p + 1; q < 4; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (int r = 0; r < 4; ++r) {
          alpha += U(r, p) * U(r, p);
          beta += U(r, q) * U(r, q);
          gamma += U(r, p) * U(r, q);
        }
        if (gamma == 0.0) continue;
        const double denom = std::sqrt(alpha * beta);
        if (denom > 0.0) off = std::max(off, std::abs(gamma) / denom);
        if (std::abs(gamma) <= 1e-300) continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int r = 0; r < 4; ++r) {
          const double up = U(r, p), uq = U(r, q);
          U(r, p) = c * up - s * uq;
          U(r, q) = s * up + c * uq;
          const double vp = V(r, p), vq = V(r, q);
          V(r, p) = c * vp - s * vq;
          V(r, q) = s * vp + c * vq;
        }
      }
    if (off < 1e-15) break;
  }
  int best = 0;
  double best_norm = INFINITY;
  for (int c = 0; c < 4; ++c) {
    const double n = norm(U.column(c));
    if (n < best_norm) {
      best_norm = n;
      best = c;
    }
  }
  if (smallest_singular_value) *smallest_singular_value = best_norm;
  Vec4 v = V.column(best);
  const double n = norm(v);
  return (1.0 / n) * v;
}

std::vector<double> least_squares(DenseMatrix A, std::vector<double> b) {
  const int m = A.rows, n = A.cols;
  if (m < n || static_cast<int>(b.size()) != m) throw DimensionError("least_squares: bad shapes");
  std::vector<double> diag(n);
  for (int k = 0; k < n; ++k) {
    double s = 0.0;
    for (int r = k; r < m; ++r) s += A(r, k) * A(r, k);
    double alpha = std::sqrt(s);
    if (alpha == 0.0) throw DegenerateError("least_squares: rank-deficient system");
    if (A(k, k) > 0) alpha = -alpha;
    // Householder vector stored in column k below the diagonal.
    A(k, k) -= alpha;
    double vv = 0.0;
    for (int r = k; r < m; ++r) vv += A(r, k) * A(r, k);
    for (int c = k + 1; c < n; ++c) {
      double d = 0.0;
      for (int r = k; r < m; ++r) d += A(r, k) * A(r, c);
      const double f = 2.0 * d / vv;
      for (int r = k; r < m; ++r) A(r, c) -= f * A(r, k);
    }
    double d = 0.0;
    for (int r = k; r < m; ++r) d += A(r, k) * b[r];
    const double f = 2.0 * d / vv;
    for (int r = k; r < m; ++r) b[r] -= f * A(r, k);
    diag[k] = alpha;
  }
  std::vector<double> x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int c = i + 1; c < n; ++c) s -= A(i, c) * x[c];
    x[i] = s / diag[i];
  }
  return x;
}

}  // namespace mshoot
