#pragma once

// Unstable periodic orbits: seeding, correction, section crossings, monodromy
// and Floquet data with oriented, rescaled eigenvectors.

#include <optional>
#include <string>
#include <vector>

#include "mshoot/integrate.hpp"
#include "mshoot/linalg.hpp"
#include "mshoot/pcrtbp.hpp"

namespace mshoot {

struct PeriodicOrbitData {
  SystemModel model;
  SectionKind section = SectionKind::periapse;
  Vec4 x0{};
  double T = 0.0;
  double C = 0.0;
  int m = 0;
  std::vector<Vec4> X;
  std::vector<double> t_k;
  std::vector<double> tau;
  /// DPhi_tau(k)(X(k)), one per crossing.
  std::vector<Mat4> step_stm;
  /// DPhi_T(X(k)).
  std::vector<Mat4> monodromy;
  bool doubled = false;
  int m_res = 0;
  int n_res = 0;
  /// Largest-modulus monodromy eigenvalue estimated from the trace.
  double lambda_u_tilde = 1.0;
  bool hyperbolic = false;
  int newton_iterations = 0;
  double newton_residual = 0.0;
};

struct OrbitSeed {
  Vec4 x0{};
  double period = 0.0;
  double a = 0.0;
  double e = 0.0;
};

/// Kepler (mu = 0) ellipse in m_res:n_res resonance. Interior orbits start at
/// periapse, exterior at apoapse, on the x-axis with px = 0. When `jacobi` is
/// given the eccentricity is chosen so that the mu = 0 Jacobi constant
/// matches; otherwise e = 0.2. `apse_angle` is the longitude of periapse (0
/// or pi); `start_anomaly` overrides the starting true anomaly (0 or pi).
OrbitSeed seed_resonant_orbit(const SystemModel& model, int m_res, int n_res, bool interior,
                              std::optional<double> jacobi = std::nullopt, double apse_angle = 0.0,
                              std::optional<double> start_anomaly = std::nullopt);

enum class TargetKind { fixed_C, fixed_period };

struct OrbitTarget {
  TargetKind kind = TargetKind::fixed_C;
  double value = 0.0;  // C or period
};

struct RefineOptions {
  int max_iterations = 25;
  double newton_tol = 1e-12;
  Tolerances ode{1e-13, 1e-13};
};

/// Symmetric (perpendicular x-axis crossing) corrector, falling back to
/// multiple shooting over the section points. Fills every field of
/// PeriodicOrbitData.
PeriodicOrbitData refine_periodic_orbit(const SystemModel& model, const OrbitSeed& seed, SectionKind section,
                                        const OrbitTarget& target, const RefineOptions& opt = {});

/// Multiple-shooting Newton on Phi_tau(k)(X(k)) = X(k+1 mod m) with the
/// section and energy constraints; X and tau give the initial guess.
PeriodicOrbitData refine_multiple_shooting(const SystemModel& model, std::vector<Vec4> X, std::vector<double> tau,
                                           SectionKind section, double C, const RefineOptions& opt = {});

struct ContinuationOptions {
  double mu_start = 1e-6;
  double max_dmu = 1e-3;
  int max_halvings = 12;
  RefineOptions refine;
};

/// Seeds the four symmetric apse configurations at mu = 0, continues each in mu up to
/// model.mu at fixed Jacobi constant and returns the hyperbolic one with the
/// largest multiplier.
PeriodicOrbitData resonant_orbit(const SystemModel& model, int m_res, int n_res, bool interior, double C,
                                 SectionKind section, const ContinuationOptions& opt = {});

/// Ordered crossings of the orbit through the section over [0, T).
struct Crossings {
  std::vector<Vec4> X;
  std::vector<double> t_k;
  std::vector<double> tau;
};
Crossings section_crossings(const SystemModel& model, const Vec4& x0, double T, SectionKind section,
                            const Tolerances& tol = {1e-13, 1e-13});

/// Cyclic products DPhi_T(X(k)) of the per-step STMs.
std::vector<Mat4> cyclic_monodromies(const std::vector<Mat4>& steps);

struct FloquetData {
  double lambda_u_tilde = 0.0;
  double lambda_s_tilde = 0.0;
  std::vector<Vec4> v_s;
  std::vector<Vec4> v_u;
  std::vector<double> lambda_s_k;
  std::vector<double> lambda_u_k;
  bool doubled = false;
  /// Per-step STMs the data refers to (duplicated when doubled).
  std::vector<Mat4> steps;
};

/// Decomposition of the per-step STMs; doubles the cycle when the unstable
/// multiplier is negative.
FloquetData floquet_decomposition(const std::vector<Mat4>& steps);
/// Orbit form; replaces the orbit by its double cover when needed.
FloquetData floquet_decomposition(PeriodicOrbitData& orbit);

/// Multiplier pair from the trace identity; throws DegenerateError when
/// the matrix is not hyperbolic.
double unstable_multiplier_from_trace(const Mat4& M);

/// Orbit traversed twice; crossing data and STMs are duplicated.
PeriodicOrbitData double_cover(const PeriodicOrbitData& orbit);

struct RescaledEigenframe {
  std::vector<Vec4> v_bar_s;
  std::vector<Vec4> v_bar_u;
  double lambda_bar_s = 0.0;
  double lambda_bar_u = 0.0;
  std::vector<double> a_s;
  std::vector<double> a_u;
};

RescaledEigenframe rescale_eigenvectors(const FloquetData& floquet);

/// Scaling factors a(k) with a(0) = 1 that make the multipliers constant.
std::vector<double> rescale_factors(const std::vector<double>& lambda_k, double* lambda_bar);

}  // namespace mshoot
