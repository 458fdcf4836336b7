#pragma once

// Circular difference-equation solvers and the adapted frame M(k), Lambda.

#include <vector>

#include "mshoot/linalg.hpp"
#include "mshoot/orbits.hpp"

namespace mshoot {

/// Solves u(k) - u(k+1 mod m) = b(k) with u(0) = 0. Requires sum b = 0.
std::vector<double> solve_cohomological(const std::vector<double>& b, double solvability_tol = 1e-10);

/// Solves alpha u(k) - u(k+1 mod m) = b(k) by the contraction iteration
/// that is contracting for the given alpha.
std::vector<double> solve_hyperbolic(double alpha, const std::vector<double>& b);

struct AdaptedFrame {
  std::vector<Mat4> M;  // columns v1_bar, v2_bar, vs_bar, vu_bar
  double lambda_bar_s = 0.0;
  double lambda_bar_u = 0.0;
  double T_bar = 0.0;
  std::vector<double> T_k, B_k, C_k, D_k, f1, f2, a_shift;
  std::vector<double> condition;  // condition number of each M(k)

  int m() const { return static_cast<int>(M.size()); }
  Mat4 Lambda() const;
  Vec4 v1(int k) const { return M[k].column(0); }
  Vec4 v2(int k) const { return M[k].column(1); }
  Vec4 vs(int k) const { return M[k].column(2); }
  Vec4 vu(int k) const { return M[k].column(3); }
};

/// Builds the frame from flow vectors at X(k), the per-step STMs and the
/// rescaled eigenvectors.
AdaptedFrame build_adapted_frame(const std::vector<Vec4>& flow_vectors, const std::vector<Mat4>& steps,
                                 const RescaledEigenframe& rescaled);
AdaptedFrame build_adapted_frame(const PeriodicOrbitData& orbit, const RescaledEigenframe& rescaled);

/// Largest ||DPhi_tau(k) M(k) - M(k+1) Lambda|| (max-abs entry) over k.
double frame_residual(const AdaptedFrame& frame, const std::vector<Mat4>& steps);

}  // namespace mshoot
