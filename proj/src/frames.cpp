#include "mshoot/frames.hpp"

#include <cmath>
#include <numeric>

namespace mshoot {

std::vector<double> solve_cohomological(const std::vector<double>& b, double solvability_tol) {
  const std::size_t m = b.size();
  if (m == 0) throw DimensionError("solve_cohomological: empty right-hand side");
  const double total = std::accumulate(b.begin(), b.end(), 0.0);
  if (std::abs(total) > solvability_tol)
    throw DegenerateError("solve_cohomological: right-hand side does not sum to zero");
  std::vector<double> u(m, 0.0);
  for (std::size_t k = 0; k + 1 < m; ++k) u[k + 1] = u[k] - b[k];
  return u;
}

std::vector<double> solve_hyperbolic(double alpha, const std::vector<double>& b) {
  const std::size_t m = b.size();
  if (m == 0) throw DimensionError("solve_hyperbolic: empty right-hand side");
  if (!(alpha > 0.0)) throw DegenerateError("solve_hyperbolic: alpha must be positive");
  if (std::abs(alpha - 1.0) < 1e-6) throw DegenerateError("solve_hyperbolic: alpha too close to 1");
  const bool forward = alpha < 1.0;
  const double rate = forward ? alpha : 1.0 / alpha;
  const long cap = static_cast<long>(std::ceil(std::log(1e-14) / std::log(rate))) + 1;
  std::vector<double> u(m, 0.0), next(m);
  const double bscale = std::max(1.0, norm_inf(b));
  for (long it = 0; it < std::max(cap, 2L) + 10; ++it) {
    for (std::size_t k = 0; k < m; ++k) {
      if (forward) {
        const std::size_t km = (k + m - 1) % m;
        next[k] = alpha * u[km] - b[km];
      } else {
        next[k] = (b[k] + u[(k + 1) % m]) / alpha;
      }
    }
    double diff = 0.0;
    for (std::size_t k = 0; k < m; ++k) diff = std::max(diff, std::abs(next[k] - u[k]));
    u.swap(next);
    if (diff < 1e-14 * std::max(bscale, norm_inf(u)) || diff == 0.0) break;
  }
  double res = 0.0;
  for (std::size_t k = 0; k < m; ++k) res = std::max(res, std::abs(alpha * u[k] - u[(k + 1) % m] - b[k]));
  const double scale = std::max({1.0, norm_inf(u) * std::max(alpha, 1.0), norm_inf(b)});
  if (res > 1e-12 * scale) throw ConvergenceError("solve_hyperbolic: residual above tolerance", res);
  return u;
}

Mat4 AdaptedFrame::Lambda() const {
  Mat4 L;
  L(0, 0) = 1.0;
  L(0, 1) = T_bar;
  L(1, 1) = 1.0;
  L(2, 2) = lambda_bar_s;
  L(3, 3) = lambda_bar_u;
  return L;
}

AdaptedFrame build_adapted_frame(const std::vector<Vec4>& v1, const std::vector<Mat4>& steps,
                                 const RescaledEigenframe& R) {
  const std::size_t m = v1.size();
  if (steps.size() != m || R.v_bar_s.size() != m || R.v_bar_u.size() != m)
    throw DimensionError("build_adapted_frame: inconsistent cycle lengths");
  const Mat4 Jinv = symplectic_J().transposed();
  std::vector<Vec4> w(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double n2 = dot(v1[k], v1[k]);
    if (!(n2 > 0.0)) throw DegenerateError("build_adapted_frame: zero flow vector");
    w[k] = (1.0 / n2) * (Jinv * v1[k]);
  }
  AdaptedFrame F;
  F.lambda_bar_s = R.lambda_bar_s;
  F.lambda_bar_u = R.lambda_bar_u;
  F.T_k.resize(m);
  F.B_k.resize(m);
  F.C_k.resize(m);
  F.D_k.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t kn = (k + 1) % m;
    const Mat4 basis = Mat4::from_columns(v1[kn], w[kn], R.v_bar_s[kn], R.v_bar_u[kn]);
    if (condition_number(basis) > 1e12)
      throw DegenerateError("build_adapted_frame: frame vectors are nearly dependent");
    const Vec4 c = solve(basis, steps[k] * w[k]);
    F.T_k[k] = c[0];
    F.B_k[k] = c[1];
    F.C_k[k] = c[2];
    F.D_k[k] = c[3];
  }
  std::vector<double> negC(m), negD(m);
  for (std::size_t k = 0; k < m; ++k) {
    negC[k] = -F.C_k[k];
    negD[k] = -F.D_k[k];
  }
  F.f1 = solve_hyperbolic(F.lambda_bar_s, negC);
  F.f2 = solve_hyperbolic(F.lambda_bar_u, negD);
  F.T_bar = std::accumulate(F.T_k.begin(), F.T_k.end(), 0.0) / static_cast<double>(m);
  std::vector<double> b(m);
  for (std::size_t k = 0; k < m; ++k) b[k] = -(F.T_k[k] - F.T_bar);
  F.a_shift = solve_cohomological(b, 1e-10 * std::max(1.0, std::abs(F.T_bar) * m));
  for (std::size_t k = 0; k < m; ++k) {
    const Vec4 v2 = w[k] + F.f1[k] * R.v_bar_s[k] + F.f2[k] * R.v_bar_u[k];
    const Vec4 v2bar = v2 + F.a_shift[k] * v1[k];
    const Mat4 Mk = Mat4::from_columns(v1[k], v2bar, R.v_bar_s[k], R.v_bar_u[k]);
    F.condition.push_back(condition_number(Mk));
    F.M.push_back(Mk);
  }
  return F;
}

AdaptedFrame build_adapted_frame(const PeriodicOrbitData& orbit, const RescaledEigenframe& rescaled) {
  std::vector<Vec4> v1;
  for (const Vec4& x : orbit.X) v1.push_back(eom(orbit.model, x));
  return build_adapted_frame(v1, orbit.step_stm, rescaled);
}

double frame_residual(const AdaptedFrame& frame, const std::vector<Mat4>& steps) {
  const int m = frame.m();
  const Mat4 L = frame.Lambda();
  double r = 0.0;
  for (int k = 0; k < m; ++k) r = std::max(r, (steps[k] * frame.M[k] - frame.M[(k + 1) % m] * L).max_abs());
  return r;
}

}  // namespace mshoot
