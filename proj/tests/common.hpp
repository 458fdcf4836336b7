#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "mshoot/frames.hpp"
#include "mshoot/manifolds.hpp"
#include "mshoot/orbits.hpp"

namespace mshoot::testing {

inline SystemModel earth_moon() { return {mass_ratio(398600.435436, 4902.800066), "earth-moon"}; }
inline SystemModel kepler() { return {0.0, "kepler"}; }

inline double max_abs_diff(const Mat4& a, const Mat4& b) { return (a - b).max_abs(); }

/// Orbit, Floquet data, rescaled eigenvectors and frame of one resonant orbit.
struct OrbitSetup {
  PeriodicOrbitData orbit;
  FloquetData floquet;
  RescaledEigenframe rescaled;
  AdaptedFrame frame;
};

/// Earth-Moon m:1 interior orbit on the periapse section, computed once per process.
inline const OrbitSetup& earth_moon_orbit(int m_res, double C = 3.05) {
  static std::mutex mu;
  static std::map<std::pair<int, double>, std::unique_ptr<OrbitSetup>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{m_res, C}];
  if (!slot) {
    auto s = std::make_unique<OrbitSetup>();
    s->orbit = resonant_orbit(earth_moon(), m_res, 1, true, C, SectionKind::periapse);
    s->floquet = floquet_decomposition(s->orbit);
    s->rescaled = rescale_eigenvectors(s->floquet);
    s->frame = build_adapted_frame(s->orbit, s->rescaled);
    slot = std::move(s);
  }
  return *slot;
}

/// Degree-20 series with its fundamental domain.
inline const ManifoldSeries& earth_moon_series(int m_res, ManifoldKind kind, int degree = 20) {
  static std::mutex mu;
  static std::map<std::tuple<int, ManifoldKind, int>, std::unique_ptr<ManifoldSeries>> cache;
  const OrbitSetup& o = earth_moon_orbit(m_res);
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{m_res, kind, degree}];
  if (!slot) {
    const double alpha = choose_scale(o.frame, o.orbit, kind);
    auto S = std::make_unique<ManifoldSeries>(compute_parameterization(o.frame, o.orbit, kind, degree, alpha));
    fundamental_domain(*S, 1e-6);
    slot = std::move(S);
  }
  return *slot;
}

}  // namespace mshoot::testing
