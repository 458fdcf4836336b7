#include "mshoot/orbits.hpp"

#include <cmath>
#include <numeric>

#include "mshoot/frames.hpp"

namespace mshoot {
namespace {

constexpr double kHyperbolicMargin = 1e-4;

double potential(const SystemModel& model, double x, double y) {
  const double mu = model.mu;
  const double r1 = std::hypot(x + mu, y);
  double U = (1.0 - mu) / r1;
  if (mu > 0.0) U += mu / std::hypot(x - 1.0 + mu, y);
  return U;
}

// py on {y = 0, px = 0} at Jacobi constant C; branch = sign(py - x).
double py_on_axis(const SystemModel& model, double x, double C, double branch) {
  const double disc = x * x + 2.0 * (potential(model, x, 0.0) - 0.5 * C);
  if (!(disc >= 0.0)) throw DegenerateError("symmetric corrector: energy level not reachable at this x");
  return x + branch * std::sqrt(disc);
}

struct SymmetricSolution {
  double x = 0.0;
  double py = 0.0;
  double t_half = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

// Newton on (y, px)(t_half) = 0 for a start (x, 0, 0, py) on the x-axis.
SymmetricSolution symmetric_newton(const SystemModel& model, double x, double py, double t_half,
                                   const OrbitTarget& target, const RefineOptions& opt) {
  const PcrtbpField field(model);
  const double branch = (py - x) >= 0.0 ? 1.0 : -1.0;
  const bool fixed_C = target.kind == TargetKind::fixed_C;
  if (fixed_C) py = py_on_axis(model, x, target.value, branch);
  else t_half = 0.5 * target.value;

  auto residual = [&](double xx, double pyy, double th, Vec4* end, Mat4* stm) {
    auto [xf, M] = integrate_with_stm(field, Vec4{xx, 0.0, 0.0, pyy}, th, opt.ode);
    if (end) *end = xf;
    if (stm) *stm = M;
    return std::array<double, 2>{xf[1], xf[2]};
  };

  SymmetricSolution sol{x, py, t_half, 0, 0.0};
  Vec4 xf;
  Mat4 M;
  auto F = residual(sol.x, sol.py, sol.t_half, &xf, &M);
  double fn = std::max(std::abs(F[0]), std::abs(F[1]));
  for (int it = 0; it < opt.max_iterations; ++it) {
    if (fn <= opt.newton_tol) {
      sol.residual = fn;
      return sol;
    }
    double j00, j01, j10, j11;
    if (fixed_C) {
      const Vec4 f0 = eom(model, {sol.x, 0.0, 0.0, sol.py});
      const double dpy = f0[2] / f0[1];
      const Vec4 dir = M * Vec4{1.0, 0.0, 0.0, dpy};
      const Vec4 ff = eom(model, xf);
      j00 = dir[1];
      j10 = dir[2];
      j01 = ff[1];
      j11 = ff[2];
    } else {
      j00 = M(1, 0);
      j10 = M(2, 0);
      j01 = M(1, 3);
      j11 = M(2, 3);
    }
    const double det = j00 * j11 - j01 * j10;
    if (det == 0.0 || !std::isfinite(det)) throw ConvergenceError("symmetric corrector: singular Jacobian", fn);
    const double d0 = -(j11 * F[0] - j01 * F[1]) / det;
    const double d1 = -(-j10 * F[0] + j00 * F[1]) / det;
    double lam = 1.0;
    bool accepted = false;
    for (int half = 0; half < 8; ++half, lam *= 0.5) {
      try {
        const double xn = sol.x + lam * d0;
        double pyn, thn;
        if (fixed_C) {
          pyn = py_on_axis(model, xn, target.value, branch);
          thn = sol.t_half + lam * d1;
        } else {
          pyn = sol.py + lam * d1;
          thn = sol.t_half;
        }
        Vec4 xfn;
        Mat4 Mn;
        const auto Fn = residual(xn, pyn, thn, &xfn, &Mn);
        const double fnn = std::max(std::abs(Fn[0]), std::abs(Fn[1]));
        if (fnn < fn || fnn <= opt.newton_tol) {
          sol.x = xn;
          sol.py = pyn;
          sol.t_half = thn;
          F = Fn;
          fn = fnn;
          xf = xfn;
          M = Mn;
          accepted = true;
          break;
        }
      } catch (const Error&) {
      }
    }
    sol.iterations = it + 1;
    if (!accepted) {
      // Residual at the integration noise floor counts as converged.
      if (fn <= 100.0 * opt.newton_tol) break;
      throw ConvergenceError("symmetric corrector: no decrease along Newton direction", fn);
    }
  }
  sol.residual = fn;
  if (fn > 100.0 * opt.newton_tol)
    throw ConvergenceError("symmetric corrector: no convergence within the iteration limit", fn);
  return sol;
}

// One Gauss-Newton step of the multiple-shooting system on section points
// X(k) and return times tau(k), with the section and energy rows. Returns the
// residual at the input and fills the per-step STMs and endpoints there.
double shooting_step(const SystemModel& model, std::vector<Vec4>& X, std::vector<double>& tau, double C,
                     const Tolerances& tol, std::vector<Mat4>* steps, bool update) {
  const int m = static_cast<int>(X.size());
  const PcrtbpField field(model);
  const double mu = model.mu;
  const int rows = 5 * m + 1, cols = 5 * m;
  DenseMatrix A(rows, cols);
  std::vector<double> r(rows, 0.0);
  if (steps) steps->assign(m, Mat4{});
  for (int k = 0; k < m; ++k) {
    auto [xf, S] = integrate_with_stm(field, X[k], tau[k], tol);
    if (steps) (*steps)[k] = S;
    const Vec4 f = eom(model, xf);
    const int kn = (k + 1) % m;
    for (int i = 0; i < 4; ++i) {
      r[4 * k + i] = xf[i] - X[kn][i];
      for (int j = 0; j < 4; ++j) A(4 * k + i, 4 * k + j) += S(i, j);
      A(4 * k + i, 4 * kn + i) -= 1.0;
      A(4 * k + i, 4 * m + k) = f[i];
    }
    const Vec4& s = X[k];
    r[4 * m + k] = (s[0] + mu) * s[2] + s[1] * (s[3] + mu);
    const double grad[4] = {s[2], s[3] + mu, s[0] + mu, s[1]};
    for (int j = 0; j < 4; ++j) A(4 * m + k, 4 * k + j) = grad[j];
  }
  const Vec4 f0 = eom(model, X[0]);
  r[5 * m] = jacobi(model, X[0]) - C;
  const double gH[4] = {-f0[2], -f0[3], f0[0], f0[1]};
  for (int j = 0; j < 4; ++j) A(5 * m, j) = -2.0 * gH[j];
  const double rn = norm_inf(r);
  if (update) {
    std::vector<double> neg(rows);
    for (int i = 0; i < rows; ++i) neg[i] = -r[i];
    const auto dz = least_squares(A, neg);
    for (int k = 0; k < m; ++k) {
      for (int i = 0; i < 4; ++i) X[k][i] += dz[4 * k + i];
      tau[k] += dz[4 * m + k];
    }
  }
  return rn;
}

// Makes X(k), tau(k) and the step STMs mutually consistent: the endpoint of
// each STM run lands on the next section point to near round-off.
void polish_section_points(PeriodicOrbitData& o, const Tolerances& tol) {
  std::vector<Vec4> X = o.X;
  std::vector<double> tau = o.tau;
  std::vector<Mat4> steps;
  double best = shooting_step(o.model, X, tau, o.C, tol, &steps, false);
  std::vector<Vec4> bestX = X;
  std::vector<double> bestTau = tau;
  std::vector<Mat4> bestSteps = steps;
  for (int it = 0; it < 4 && best > 1e-15; ++it) {
    double rn = INFINITY;
    try {
      shooting_step(o.model, X, tau, o.C, tol, nullptr, true);
      rn = shooting_step(o.model, X, tau, o.C, tol, &steps, false);
    } catch (const Error&) {
      break;
    }
    if (!(rn < best)) break;
    best = rn;
    bestX = X;
    bestTau = tau;
    bestSteps = steps;
  }
  o.X = bestX;
  o.tau = bestTau;
  o.step_stm = bestSteps;
  const double shift = o.t_k.empty() ? 0.0 : o.t_k[0];
  o.t_k.assign(o.m, shift);
  for (int k = 1; k < o.m; ++k) o.t_k[k] = o.t_k[k - 1] + o.tau[k - 1];
  o.T = std::accumulate(o.tau.begin(), o.tau.end(), 0.0);
  o.x0 = o.t_k[0] == 0.0 ? o.X[0] : o.x0;
}

// Trace roundoff grows with the monodromy entries and enters lambda through a
// square root.
bool clearly_hyperbolic(const Mat4& M, double lambda) {
  const double noise = std::sqrt(1e-9 * std::max(1.0, M.max_abs()));
  return std::abs(lambda) - 1.0 > noise;
}

void fill_dynamics(PeriodicOrbitData& o, const Tolerances& tol) {
  const Crossings c = section_crossings(o.model, o.x0, o.T, o.section, tol);
  o.X = c.X;
  o.t_k = c.t_k;
  o.tau = c.tau;
  o.m = static_cast<int>(o.X.size());
  o.C = jacobi(o.model, o.x0);
  polish_section_points(o, tol);
  o.monodromy = cyclic_monodromies(o.step_stm);
  try {
    o.lambda_u_tilde = unstable_multiplier_from_trace(o.monodromy[0]);
    o.hyperbolic = clearly_hyperbolic(o.monodromy[0], o.lambda_u_tilde);
  } catch (const DegenerateError&) {
    const double t = trace(o.monodromy[0]) - 2.0;
    o.lambda_u_tilde = std::abs(t) >= 2.0 ? 0.5 * (t + std::copysign(std::sqrt(t * t - 4.0), t)) : 1.0;
    o.hyperbolic = false;
  }
}

void orient_first_nonzero_positive(Vec4& v) {
  for (double c : v)
    if (std::abs(c) > 1e-12) {
      if (c < 0.0) v = -1.0 * v;
      return;
    }
}

Vec4 eigenvector(const Mat4& M, double lambda) {
  const Mat4 A = M - lambda * Mat4::identity();
  Vec4 v = least_singular_vector(A);
  const Vec4 r = M * v - lambda * v;
  const double scale = std::max(1.0, M.max_abs());
  if (norm(r) > 1e-8 * scale) throw DegenerateError("floquet: eigenvector residual too large");
  return v;
}

// Power iteration around the cycle started from the least-singular vectors:
// forward through the step STMs for the unstable direction, backward by
// solves for the stable one. The result satisfies DPhi v(k) || v(k+1) to
// round-off except across the wrap, where the power iteration has converged.
void transport_refine(const std::vector<Mat4>& steps, std::vector<Vec4>& v, bool unstable) {
  const std::size_t m = steps.size();
  auto advance = [&](Vec4 x, std::size_t k) {  // from index k to k+1 (unstable) or k to k-1 (stable)
    x = unstable ? steps[k] * x : solve(steps[(k + m - 1) % m], x);
    return (1.0 / norm(x)) * x;
  };
  auto cycle = [&](Vec4 x) {
    if (unstable)
      for (std::size_t k = 0; k < m; ++k) x = advance(x, k);
    else
      for (std::size_t k = m; k > 0; --k) x = advance(x, k % m);
    return x;
  };
  Vec4 x = (1.0 / norm(v[0])) * v[0];
  double d = INFINITY;
  for (int it = 0; it < 400 && d > 1e-14; ++it) {
    const Vec4 next = cycle(x);
    d = std::min(norm(next - x), norm(next + x));
    x = dot(next, x) < 0.0 ? -1.0 * next : next;
  }
  if (!(d <= 1e-10)) return;
  if (dot(x, v[0]) < 0.0) x = -1.0 * x;
  v[0] = x;
  if (unstable) {
    for (std::size_t k = 0; k + 1 < m; ++k) v[k + 1] = advance(v[k], k);
  } else {
    for (std::size_t k = m - 1; k > 0; --k) v[k] = advance(v[(k + 1) % m], (k + 1) % m);
  }
}

}  // namespace

OrbitSeed seed_resonant_orbit(const SystemModel& model, int m_res, int n_res, bool interior,
                              std::optional<double> jacobi_target, double apse_angle,
                              std::optional<double> start_anomaly) {
  if (m_res <= 0 || n_res <= 0 || std::gcd(m_res, n_res) != 1)
    throw Error("seed_resonant_orbit: resonance must be a reduced ratio of positive integers");
  if (interior != (m_res > n_res) && m_res != n_res)
    throw Error("seed_resonant_orbit: interior resonances need m > n, exterior m < n");
  OrbitSeed s;
  s.a = std::pow(static_cast<double>(n_res) / m_res, 2.0 / 3.0);
  s.period = kTwoPi * n_res;
  if (jacobi_target) {
    // Kepler Jacobi constant C = 1/a + 2 sqrt(a (1 - e^2)) for prograde orbits.
    const double q = 0.5 * (*jacobi_target - 1.0 / s.a);
    const double one_minus_e2 = q * q / s.a;
    if (!(q > 0.0) || !(one_minus_e2 > 0.0 && one_minus_e2 <= 1.0))
      throw DegenerateError("seed_resonant_orbit: Jacobi constant incompatible with the resonance");
    s.e = std::sqrt(std::max(0.0, 1.0 - one_minus_e2));
  } else {
    s.e = 0.2;
  }
  OsculatingElements el;
  el.a = s.a;
  el.e = s.e;
  el.g = apse_angle;
  el.nu = start_anomaly ? *start_anomaly : (interior ? 0.0 : kPi);
  Vec4 x0 = state_from_elements(SystemModel{0.0, model.name}, el);
  x0[1] = 0.0;
  x0[2] = 0.0;
  s.x0 = x0;
  return s;
}

Crossings section_crossings(const SystemModel& model, const Vec4& x0, double T, SectionKind section,
                            const Tolerances& tol) {
  if (!(T > 0.0)) throw Error("section_crossings: period must be positive");
  const PcrtbpField field(model);
  const EventSpec base = make_section(model, section);
  Crossings c;
  auto check_transverse = [&](const Vec4& s) {
    if (std::abs(sigma_pair(model, s).second) < 1e-8)
      throw DegenerateError("section_crossings: orbit is tangent to the section");
  };
  const auto [s0, sd0] = sigma_pair(model, x0);
  if (std::abs(s0) <= 1e-10) {
    check_transverse(x0);
    const bool dir_ok = section == SectionKind::periapse ? sd0 > 0.0 : sd0 < 0.0;
    if (dir_ok && base.extra_test(x0.data())) {
      c.X.push_back(x0);
      c.t_k.push_back(0.0);
    }
  }
  Vec4 cur = x0;
  double t = 0.0;
  const double t_end = T * (1.0 - 1e-9);
  while (true) {
    EventSpec ev = base;
    ev.max_time = T - t + 1e-6 * T;
    EventRecord r;
    try {
      r = integrate_to_event(field, to_vector(cur), ev, true, tol);
    } catch (const EventNotFound&) {
      break;
    }
    const double tn = t + r.time;
    if (tn >= t_end) break;
    cur = to_vec4(r.state);
    check_transverse(cur);
    c.X.push_back(cur);
    c.t_k.push_back(tn);
    t = tn;
  }
  if (c.X.empty()) throw DegenerateError("section_crossings: orbit never crosses the section");
  const std::size_t m = c.X.size();
  for (std::size_t k = 0; k + 1 < m; ++k) c.tau.push_back(c.t_k[k + 1] - c.t_k[k]);
  c.tau.push_back(c.t_k[0] + T - c.t_k[m - 1]);
  return c;
}

std::vector<Mat4> cyclic_monodromies(const std::vector<Mat4>& steps) {
  const std::size_t m = steps.size();
  std::vector<Mat4> out(m);
  for (std::size_t k = 0; k < m; ++k) {
    Mat4 P = Mat4::identity();
    for (std::size_t j = 0; j < m; ++j) P = steps[(k + j) % m] * P;
    out[k] = P;
  }
  return out;
}

double unstable_multiplier_from_trace(const Mat4& M) {
  const double t = trace(M) - 2.0;
  if (std::abs(t) <= 2.0) throw DegenerateError("monodromy is not hyperbolic (|trace - 2| <= 2)");
  const double lam = 0.5 * (t + std::copysign(std::sqrt(t * t - 4.0), t));
  if (std::abs(lam) - 1.0 < kHyperbolicMargin) throw DegenerateError("monodromy is not hyperbolic enough");
  return lam;
}

PeriodicOrbitData refine_periodic_orbit(const SystemModel& model, const OrbitSeed& seed, SectionKind section,
                                        const OrbitTarget& target, const RefineOptions& opt) {
  model.validate();
  PeriodicOrbitData o;
  o.model = model;
  o.section = section;
  const double t_half = 0.5 * seed.period;
  try {
    if (std::abs(seed.x0[1]) > 1e-14 || std::abs(seed.x0[2]) > 1e-14)
      throw DegenerateError("seed is not a perpendicular x-axis crossing");
    const SymmetricSolution s = symmetric_newton(model, seed.x0[0], seed.x0[3], t_half, target, opt);
    o.x0 = {s.x, 0.0, 0.0, s.py};
    o.T = 2.0 * s.t_half;
    o.newton_iterations = s.iterations;
    o.newton_residual = s.residual;
    fill_dynamics(o, opt.ode);
    return o;
  } catch (const Error&) {
    if (target.kind != TargetKind::fixed_C) throw;
  }
  // Multiple-shooting fallback from the seed's crossings.
  const Crossings c = section_crossings(model, seed.x0, seed.period, section, opt.ode);
  return refine_multiple_shooting(model, c.X, c.tau, section, target.value, opt);
}

PeriodicOrbitData refine_multiple_shooting(const SystemModel& model, std::vector<Vec4> X, std::vector<double> tau,
                                           SectionKind section, double C, const RefineOptions& opt) {
  const int m = static_cast<int>(X.size());
  if (m == 0 || static_cast<int>(tau.size()) != m) throw DimensionError("multiple shooting: bad initial guess");
  double rn = INFINITY;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    rn = shooting_step(model, X, tau, C, opt.ode, nullptr, false);
    if (rn <= opt.newton_tol) break;
    shooting_step(model, X, tau, C, opt.ode, nullptr, true);
  }
  if (rn > 100.0 * opt.newton_tol) throw ConvergenceError("multiple shooting: no convergence", rn);
  PeriodicOrbitData o;
  o.model = model;
  o.section = section;
  o.x0 = X[0];
  o.T = std::accumulate(tau.begin(), tau.end(), 0.0);
  o.newton_iterations = it;
  o.newton_residual = rn;
  fill_dynamics(o, opt.ode);
  return o;
}

PeriodicOrbitData resonant_orbit(const SystemModel& model, int m_res, int n_res, bool interior, double C,
                                 SectionKind section, const ContinuationOptions& opt) {
  model.validate();
  const OrbitTarget target{TargetKind::fixed_C, C};
  std::optional<PeriodicOrbitData> best;
  std::string last_error = "no phase converged";
  for (int variant = 0; variant < 4; ++variant) {
    const double phase = (variant & 1) ? kPi : 0.0;
    const double nu0 = (variant & 2) ? kPi : 0.0;
    try {
      const OrbitSeed seed = seed_resonant_orbit(model, m_res, n_res, interior, C, phase, nu0);
      double x = seed.x0[0], py = seed.x0[3], th = 0.5 * seed.period;
      double mu = 0.0;
      SymmetricSolution s = symmetric_newton(SystemModel{0.0, model.name}, x, py, th, target, opt.refine);
      double dmu = opt.mu_start;
      int failures = 0;
      while (mu < model.mu) {
        const double mu_next = std::min(model.mu, mu + dmu);
        try {
          s = symmetric_newton(SystemModel{mu_next, model.name}, s.x, s.py, s.t_half, target, opt.refine);
          mu = mu_next;
          dmu = std::min(opt.max_dmu, 2.0 * dmu);
          failures = 0;
        } catch (const Error&) {
          if (++failures > opt.max_halvings) throw;
          dmu *= 0.5;
        }
      }
      PeriodicOrbitData o;
      o.model = model;
      o.section = section;
      o.x0 = {s.x, 0.0, 0.0, s.py};
      o.T = 2.0 * s.t_half;
      o.newton_iterations = s.iterations;
      o.newton_residual = s.residual;
      o.m_res = m_res;
      o.n_res = n_res;
      fill_dynamics(o, opt.refine.ode);
      const bool better = !best || (o.hyperbolic && !best->hyperbolic) ||
                          (o.hyperbolic == best->hyperbolic &&
                           std::abs(o.lambda_u_tilde) > std::abs(best->lambda_u_tilde));
      if (better) best = std::move(o);
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  if (!best) throw ConvergenceError("resonant_orbit: " + last_error, INFINITY);
  return *best;
}

PeriodicOrbitData double_cover(const PeriodicOrbitData& o) {
  PeriodicOrbitData d = o;
  const int m = o.m;
  for (int k = 0; k < m; ++k) {
    d.X.push_back(o.X[k]);
    d.t_k.push_back(o.t_k[k] + o.T);
    d.tau.push_back(o.tau[k]);
    d.step_stm.push_back(o.step_stm[k]);
  }
  d.m = 2 * m;
  d.T = 2.0 * o.T;
  d.monodromy = cyclic_monodromies(d.step_stm);
  d.lambda_u_tilde = o.lambda_u_tilde * o.lambda_u_tilde;
  d.doubled = true;
  return d;
}

FloquetData floquet_decomposition(const std::vector<Mat4>& steps_in) {
  if (steps_in.empty()) throw DimensionError("floquet: no steps");
  std::vector<Mat4> steps = steps_in;
  bool doubled = false;
  std::vector<Mat4> mono = cyclic_monodromies(steps);
  double lam = unstable_multiplier_from_trace(mono[0]);
  if (lam < 0.0) {
    const std::size_t m = steps.size();
    for (std::size_t k = 0; k < m; ++k) steps.push_back(steps[k]);
    mono = cyclic_monodromies(steps);
    lam = unstable_multiplier_from_trace(mono[0]);
    doubled = true;
  }
  if (!clearly_hyperbolic(mono[0], lam)) throw DegenerateError("floquet: multiplier within roundoff of the unit circle");
  const std::size_t m = steps.size();
  FloquetData F;
  F.doubled = doubled;
  F.steps = steps;
  F.lambda_u_tilde = lam;
  F.lambda_s_tilde = 1.0 / lam;
  F.v_u.resize(m);
  F.v_s.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    F.v_u[k] = eigenvector(mono[k], F.lambda_u_tilde);
    F.v_s[k] = eigenvector(mono[k], F.lambda_s_tilde);
  }
  transport_refine(steps, F.v_u, true);
  transport_refine(steps, F.v_s, false);
  for (std::size_t k = 0; k < m; ++k) {
    const double scale = std::max(1.0, mono[k].max_abs());
    if (norm(mono[k] * F.v_u[k] - F.lambda_u_tilde * F.v_u[k]) > 1e-8 * scale ||
        norm(mono[k] * F.v_s[k] - F.lambda_s_tilde * F.v_s[k]) > 1e-8 * scale)
      throw DegenerateError("floquet: eigenvector residual too large");
  }
  auto orient = [&](std::vector<Vec4>& v, std::vector<double>& lk) {
    orient_first_nonzero_positive(v[0]);
    lk.assign(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t kn = (k + 1) % m;
      const Vec4 img = steps[k] * v[k];
      if (kn != 0 && dot(v[kn], img) < 0.0) v[kn] = -1.0 * v[kn];
      lk[k] = dot(v[kn], img);
    }
  };
  orient(F.v_u, F.lambda_u_k);
  orient(F.v_s, F.lambda_s_k);
  for (std::size_t k = 0; k < m; ++k)
    if (!(F.lambda_u_k[k] > 0.0) || !(F.lambda_s_k[k] > 0.0))
      throw DegenerateError("floquet: orientation left a non-positive step multiplier");
  return F;
}

FloquetData floquet_decomposition(PeriodicOrbitData& orbit) {
  if (orbit.step_stm.empty()) throw DimensionError("floquet: orbit has no step STMs");
  FloquetData F = floquet_decomposition(orbit.step_stm);
  if (F.doubled && !orbit.doubled) orbit = double_cover(orbit);
  return F;
}

std::vector<double> rescale_factors(const std::vector<double>& lambda_k, double* lambda_bar) {
  const std::size_t m = lambda_k.size();
  double mean = 0.0;
  for (double l : lambda_k) {
    if (!(l > 0.0)) throw DegenerateError("rescale: non-positive step multiplier");
    mean += std::log(l);
  }
  mean /= static_cast<double>(m);
  std::vector<double> b(m);
  for (std::size_t k = 0; k < m; ++k) b[k] = -(std::log(lambda_k[k]) - mean);
  const auto u = solve_cohomological(b);
  std::vector<double> a(m);
  for (std::size_t k = 0; k < m; ++k) a[k] = std::exp(u[k]);
  if (lambda_bar) *lambda_bar = std::exp(mean);
  return a;
}

RescaledEigenframe rescale_eigenvectors(const FloquetData& F) {
  RescaledEigenframe R;
  R.a_s = rescale_factors(F.lambda_s_k, &R.lambda_bar_s);
  R.a_u = rescale_factors(F.lambda_u_k, &R.lambda_bar_u);
  const std::size_t m = F.v_s.size();
  for (std::size_t k = 0; k < m; ++k) {
    R.v_bar_s.push_back(R.a_s[k] * F.v_s[k]);
    R.v_bar_u.push_back(R.a_u[k] * F.v_u[k]);
  }
  return R;
}

}  // namespace mshoot
