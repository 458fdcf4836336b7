#pragma once

// Taylor parameterizations W(k, s) of the stable and unstable manifolds of a
// periodic orbit, their fundamental domains, projection onto the section and
// globalization by the Poincare map.

#include <functional>
#include <string>
#include <vector>

#include "mshoot/frames.hpp"
#include "mshoot/orbits.hpp"

namespace mshoot {

enum class ManifoldKind { stable, unstable };
ManifoldKind parse_manifold_kind(const std::string& name);
const char* to_string(ManifoldKind kind);

struct ManifoldSeries {
  ManifoldKind kind = ManifoldKind::unstable;
  int degree = 0;
  /// coeffs[k][j] = W_j(k), j = 0..degree.
  std::vector<std::vector<Vec4>> coeffs;
  double lambda = 0.0;
  double scale = 1.0;
  double D = 0.0;
  double E_tol = 1e-6;
  bool bracket_limited = false;
  // Orbit context needed to evaluate the flow.
  SystemModel model;
  SectionKind section = SectionKind::periapse;
  std::vector<double> tau;
  double C = 0.0;
  std::string orbit_id;
  Tolerances ode{1e-14, 1e-14};
  /// Tolerances for section projection and Poincare maps.
  Tolerances map_tol{1e-13, 1e-13};
  /// Seeds are moved onto the orbit's Jacobi level before projection.
  bool energy_correction = true;
  /// Maps whose Jacobi drift exceeds this are treated as failed.
  double jacobi_guard = 1e-10;

  int m() const { return static_cast<int>(coeffs.size()); }
  Vec4 eval(int k, double s) const;
  /// Copy keeping coefficients up to `degree`.
  ManifoldSeries truncated(int degree) const;
};

/// Order-by-order solution of the invariance equation in the adapted frame.
ManifoldSeries compute_parameterization(const AdaptedFrame& frame, const PeriodicOrbitData& orbit, ManifoldKind kind,
                                        int degree, double scale, const Tolerances& ode = {1e-14, 1e-14});

/// Coefficients j = 0..degree of Phi_tau(k)(W(k, s)) - W(k+1, lambda s), one
/// list per k.
std::vector<std::vector<Vec4>> invariance_defect(const ManifoldSeries& series);

/// Least-squares growth rate rho of log ||W_d|| ~ c + d log rho, d in [d_lo, d_hi].
double fit_growth_rate(const std::vector<double>& norms, int d_lo, int d_hi);
/// max_k ||W_d(k)|| for each d.
std::vector<double> coefficient_norms(const ManifoldSeries& series);

/// alpha = 1 / rho from a unit-scale probe; 1 with a warning on failure.
double choose_scale(const AdaptedFrame& frame, const PeriodicOrbitData& orbit, ManifoldKind kind,
                    int probe_degree = 8, const Tolerances& ode = {1e-14, 1e-14});

/// ||Phi_tau(k)(W(k, s)) - W(k+1 mod m, lambda s)||.
double invariance_error(const ManifoldSeries& series, int k, double s);

struct DomainResult {
  double D = 0.0;
  std::vector<double> D_k;
  bool bracket_limited = false;
};

/// Per-k bisection of the largest radius on which error(k, s) <= E_tol at
/// s = +-D and 8 interior samples; D = min_k D_k.
DomainResult fundamental_domain_search(const std::function<double(int, double)>& error, int m, double E_tol,
                                       double S_max = 10.0, double rel_tol = 1e-3);
/// Sets series.D and series.bracket_limited.
DomainResult fundamental_domain(ManifoldSeries& series, double E_tol = 1e-6, double S_max = 10.0);

Vec4 eval_W(const ManifoldSeries& series, int k, double s);

/// Moves a near-section state onto the section: forward when sigma sigma' < 0,
/// backward when > 0.
std::vector<double> project_to_section(const VectorField& field, const EventSpec& section,
                                       const std::vector<double>& state, double sigma_bound = 0.5,
                                       const Tolerances& tol = {1e-12, 1e-12});
Vec4 project_to_section(const SystemModel& model, SectionKind section, const Vec4& state,
                        double sigma_bound = 0.5, const Tolerances& tol = {1e-12, 1e-12});

/// P (forward) or P^-1 (backward) on the section.
Vec4 poincare_map(const SystemModel& model, SectionKind section, const Vec4& state, bool forward,
                  const Tolerances& tol = {1e-12, 1e-12});

struct GridPoint {
  int k = 0;
  double s = 0.0;
  int N = 0;
  Vec4 state{};
  bool valid = true;
};

struct ManifoldGrid {
  std::vector<GridPoint> points;  // sorted by (k, s)
  ManifoldKind kind = ManifoldKind::unstable;
  SectionKind section = SectionKind::periapse;
  std::string series_id;
  SystemModel model;
  int m = 0;
  double D = 0.0;
  double lambda = 0.0;
  double C = 0.0;
  int M_grid = 0;
  int N_max = 0;
};

/// Seeds M_grid points per sign on (0, D], projects them onto the section and
/// maps each N_max times by P (unstable) or P^-1 (stable). Failed maps become
/// invalid points carrying their tags.
ManifoldGrid globalize(const ManifoldSeries& series, int M_grid, int N_max);

/// W_p(k, s) for |s| < D: the seed state moved onto the section.
Vec4 eval_Wp(const ManifoldSeries& series, int k, double s);
/// P or P^-1 with the series' tolerances; throws when the Jacobi drift from
/// series.C exceeds series.jacobi_guard.
Vec4 guarded_map(const ManifoldSeries& series, const Vec4& state, bool forward);

/// Number of maps N >= 0 that brings s inside (-D, D).
int pullback_depth(const ManifoldSeries& series, double s);
/// W_p(k, s) through the minimal pullback into the fundamental domain.
Vec4 eval_Wp_global(const ManifoldSeries& series, int k, double s);

}  // namespace mshoot
