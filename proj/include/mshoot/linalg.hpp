#pragma once

#include <array>
#include <vector>

#include "mshoot/types.hpp"

namespace mshoot {

/// Dense 4x4 matrix, row-major.
struct Mat4 {
  std::array<double, 16> a{};

  double& operator()(int r, int c) { return a[4 * r + c]; }
  double operator()(int r, int c) const { return a[4 * r + c]; }

  static Mat4 identity();
  static Mat4 diagonal(const Vec4& d);
  /// Builds a matrix from four column vectors.
  static Mat4 from_columns(const Vec4& c0, const Vec4& c1, const Vec4& c2, const Vec4& c3);

  Vec4 column(int c) const { return {a[c], a[4 + c], a[8 + c], a[12 + c]}; }
  void set_column(int c, const Vec4& v) {
    for (int r = 0; r < 4; ++r) a[4 * r + c] = v[r];
  }
  Mat4 transposed() const;
  double max_abs() const;
};

Mat4 operator*(const Mat4& x, const Mat4& y);
Vec4 operator*(const Mat4& x, const Vec4& v);
Mat4 operator-(const Mat4& x, const Mat4& y);
Mat4 operator*(double s, const Mat4& x);

/// Standard symplectic matrix [[0, I], [-I, 0]].
Mat4 symplectic_J();

/// Omega(u, v) = u^T J v.
double omega(const Vec4& u, const Vec4& v);

/// Solves A x = b by Gaussian elimination with partial pivoting.
/// Throws DegenerateError when a pivot falls below `pivot_tol * max|A|`.
Vec4 solve(const Mat4& A, const Vec4& b, double pivot_tol = 1e-14);

Mat4 inverse(const Mat4& A, double pivot_tol = 1e-14);

double determinant(const Mat4& A);

/// Infinity-norm condition number ||A|| ||A^-1||.
double condition_number(const Mat4& A);

double trace(const Mat4& A);

/// Right singular vector belonging to the smallest singular value, computed
/// by one-sided Jacobi on the columns of A. Unit length.
Vec4 least_singular_vector(const Mat4& A, double* smallest_singular_value = nullptr);

/// Dense row-major matrix used by the small multiple-shooting systems.
struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;
  DenseMatrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
  double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

/// Least-squares solution of min ||A x - b|| (rows >= cols) by Householder QR.
std::vector<double> least_squares(DenseMatrix A, std::vector<double> b);

}  // namespace mshoot
