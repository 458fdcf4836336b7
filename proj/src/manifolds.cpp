#include "mshoot/manifolds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mshoot/parallel.hpp"

namespace mshoot {

ManifoldKind parse_manifold_kind(const std::string& name) {
  if (name == "stable") return ManifoldKind::stable;
  if (name == "unstable") return ManifoldKind::unstable;
  throw Error("unknown manifold kind '" + name + "' (expected stable or unstable)");
}

const char* to_string(ManifoldKind kind) { return kind == ManifoldKind::stable ? "stable" : "unstable"; }

Vec4 ManifoldSeries::eval(int k, double s) const {
  const auto& W = coeffs[((k % m()) + m()) % m()];
  Vec4 acc = W.back();
  for (int j = static_cast<int>(W.size()) - 2; j >= 0; --j) acc = s * acc + W[j];
  return acc;
}

ManifoldSeries ManifoldSeries::truncated(int d) const {
  if (d < 0 || d > degree) throw DimensionError("truncated: degree out of range");
  ManifoldSeries out = *this;
  out.degree = d;
  for (auto& W : out.coeffs) W.resize(d + 1);
  out.D = 0.0;
  out.bracket_limited = false;
  return out;
}

namespace {

// Coefficients of Phi_tau(W(k, s)) truncated at s^d, with W's coefficients
// above d - 1 ignored when `below_only` is set.
JetState transported(const ManifoldSeries& S, const PcrtbpField& field, int k, int d, bool below_only) {
  JetState j0(d);
  const int top = below_only ? d - 1 : std::min(d, S.degree);
  for (int j = 0; j <= top; ++j) j0.set_coeff(j, S.coeffs[k][j]);
  return flow_jet(field, j0, S.tau[k], S.ode);
}

}  // namespace

ManifoldSeries compute_parameterization(const AdaptedFrame& frame, const PeriodicOrbitData& orbit, ManifoldKind kind,
                                        int degree, double scale, const Tolerances& ode) {
  const int m = frame.m();
  if (degree < 1) throw DimensionError("compute_parameterization: degree must be at least 1");
  if (!(scale > 0.0)) throw Error("compute_parameterization: scale must be positive");
  if (orbit.m != m || static_cast<int>(orbit.tau.size()) != m)
    throw DimensionError("compute_parameterization: frame and orbit cycle lengths differ");
  if (!orbit.hyperbolic) throw DegenerateError("compute_parameterization: orbit is not hyperbolic");
  ManifoldSeries S;
  S.kind = kind;
  S.degree = degree;
  S.scale = scale;
  S.model = orbit.model;
  S.section = orbit.section;
  S.tau = orbit.tau;
  S.C = orbit.C;
  S.ode = ode;
  S.lambda = kind == ManifoldKind::stable ? frame.lambda_bar_s : frame.lambda_bar_u;
  S.coeffs.assign(m, std::vector<Vec4>(degree + 1, Vec4{}));
  for (int k = 0; k < m; ++k) {
    S.coeffs[k][0] = orbit.X[k];
    S.coeffs[k][1] = scale * (kind == ManifoldKind::stable ? frame.vs(k) : frame.vu(k));
  }
  const PcrtbpField field(orbit.model);
  for (int d = 2; d <= degree; ++d) {
    std::vector<Vec4> E(m);
    parallel_for(m, [&](std::size_t k) {
      E[k] = transported(S, field, static_cast<int>(k), d, true).coeff(d);
    });
    const double ld = std::pow(S.lambda, -d);
    std::vector<double> b1(m), b2(m), b3(m), b4(m);
    std::vector<Vec4> eta(m);
    for (int k = 0; k < m; ++k) {
      eta[k] = -1.0 * solve(frame.M[(k + 1) % m], E[k]);
      b2[k] = ld * eta[k][1];
      b3[k] = ld * eta[k][2];
      b4[k] = ld * eta[k][3];
    }
    const auto V2 = solve_hyperbolic(ld, b2);
    const auto V3 = solve_hyperbolic(frame.lambda_bar_s * ld, b3);
    const auto V4 = solve_hyperbolic(frame.lambda_bar_u * ld, b4);
    for (int k = 0; k < m; ++k) b1[k] = ld * (eta[k][0] - frame.T_bar * V2[k]);
    const auto V1 = solve_hyperbolic(ld, b1);
    for (int k = 0; k < m; ++k) S.coeffs[k][d] = frame.M[k] * Vec4{V1[k], V2[k], V3[k], V4[k]};
  }
  return S;
}

std::vector<std::vector<Vec4>> invariance_defect(const ManifoldSeries& S) {
  const int m = S.m();
  const PcrtbpField field(S.model);
  std::vector<std::vector<Vec4>> out(m);
  parallel_for(m, [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    const JetState img = transported(S, field, k, S.degree, false);
    out[k].resize(S.degree + 1);
    double lj = 1.0;
    for (int j = 0; j <= S.degree; ++j) {
      out[k][j] = img.coeff(j) - lj * S.coeffs[(k + 1) % m][j];
      lj *= S.lambda;
    }
  });
  return out;
}

std::vector<double> coefficient_norms(const ManifoldSeries& S) {
  std::vector<double> n(S.degree + 1, 0.0);
  for (const auto& W : S.coeffs)
    for (int j = 0; j <= S.degree; ++j) n[j] = std::max(n[j], norm(W[j]));
  return n;
}

double fit_growth_rate(const std::vector<double>& norms, int d_lo, int d_hi) {
  d_hi = std::min(d_hi, static_cast<int>(norms.size()) - 1);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int d = d_lo; d <= d_hi; ++d) {
    if (!(norms[d] > 0.0) || !std::isfinite(norms[d])) continue;
    const double y = std::log(norms[d]);
    sx += d;
    sy += y;
    sxx += static_cast<double>(d) * d;
    sxy += d * y;
    ++n;
  }
  if (n < 2) throw DegenerateError("fit_growth_rate: fewer than two usable coefficients");
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return std::exp(slope);
}

double choose_scale(const AdaptedFrame& frame, const PeriodicOrbitData& orbit, ManifoldKind kind, int probe_degree,
                    const Tolerances& ode) {
  if (probe_degree < 6) throw Error("choose_scale: probe degree must be at least 6");
  try {
    const ManifoldSeries probe = compute_parameterization(frame, orbit, kind, probe_degree, 1.0, ode);
    const double rho = fit_growth_rate(coefficient_norms(probe), 2, probe_degree);
    if (!(rho > 0.0) || !std::isfinite(rho)) throw DegenerateError("choose_scale: bad growth rate");
    return 1.0 / rho;
  } catch (const Error& e) {
    std::fprintf(stderr, "warning: scale probe failed (%s); using scale 1\n", e.what());
    return 1.0;
  }
}

double invariance_error(const ManifoldSeries& S, int k, double s) {
  const PcrtbpField field(S.model);
  const int m = S.m();
  k = ((k % m) + m) % m;
  const Vec4 img = integrate_time(field, S.eval(k, s), S.tau[k], S.ode);
  return norm(img - S.eval(k + 1, S.lambda * s));
}

DomainResult fundamental_domain_search(const std::function<double(int, double)>& error, int m, double E_tol,
                                       double S_max, double rel_tol) {
  constexpr double kFloor = 1e-8;
  auto ok = [&](int k, double D) {
    for (double sgn : {1.0, -1.0})
      for (int j = 1; j <= 5; ++j) {
        double e;
        try {
          e = error(k, sgn * D * j / 5.0);
        } catch (const Error&) {
          return false;
        }
        if (!(e <= E_tol)) return false;
      }
    return true;
  };
  DomainResult R;
  R.D_k.assign(m, 0.0);
  std::vector<char> limited(m, 0);
  parallel_for(m, [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    if (ok(k, S_max)) {
      R.D_k[k] = S_max;
      limited[k] = 1;
      return;
    }
    if (!ok(k, kFloor)) {
      R.D_k[k] = -1.0;
      return;
    }
    double lo = kFloor, hi = S_max;
    while (hi - lo > rel_tol * hi) {
      const double mid = hi > 4.0 * lo ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
      (ok(k, mid) ? lo : hi) = mid;
    }
    R.D_k[k] = lo;
  });
  for (int k = 0; k < m; ++k)
    if (R.D_k[k] < 0.0)
      throw DegenerateError("fundamental_domain: invariance error exceeds tolerance at s = 1e-8");
  R.D = *std::min_element(R.D_k.begin(), R.D_k.end());
  R.bracket_limited = std::all_of(limited.begin(), limited.end(), [](char c) { return c != 0; });
  return R;
}

DomainResult fundamental_domain(ManifoldSeries& S, double E_tol, double S_max) {
  const DomainResult R = fundamental_domain_search([&S](int k, double s) { return invariance_error(S, k, s); },
                                                   S.m(), E_tol, S_max);
  S.D = R.D;
  S.E_tol = E_tol;
  S.bracket_limited = R.bracket_limited;
  return R;
}

Vec4 eval_W(const ManifoldSeries& series, int k, double s) { return series.eval(k, s); }

std::vector<double> project_to_section(const VectorField& field, const EventSpec& section,
                                       const std::vector<double>& state, double sigma_bound, const Tolerances& tol) {
  const double sg = section.sigma(state.data());
  if (std::abs(sg) <= 1e-12) return state;
  if (std::abs(sg) > sigma_bound) throw Error("project_to_section: state is too far from the section");
  const double sd = section.sigma_dot(state.data());
  if (sd == 0.0) throw DegenerateError("project_to_section: flow is tangent to the section");
  return integrate_to_event(field, state, section, sg * sd < 0.0, tol).state;
}

Vec4 project_to_section(const SystemModel& model, SectionKind section, const Vec4& state, double sigma_bound,
                        const Tolerances& tol) {
  const PcrtbpField field(model);
  const EventSpec ev = make_section(model, section, kTwoPi);
  return to_vec4(project_to_section(field, ev, to_vector(state), sigma_bound, tol));
}

Vec4 poincare_map(const SystemModel& model, SectionKind section, const Vec4& state, bool forward,
                  const Tolerances& tol) {
  const PcrtbpField field(model);
  const EventSpec ev = make_section(model, section);
  return to_vec4(integrate_to_event(field, to_vector(state), ev, forward, tol).state);
}

Vec4 eval_Wp(const ManifoldSeries& S, int k, double s) {
  Vec4 x = S.eval(k, s);
  if (S.energy_correction) x = correct_energy(S.model, x, S.C);
  return project_to_section(S.model, S.section, x, 0.5, S.map_tol);
}

Vec4 guarded_map(const ManifoldSeries& S, const Vec4& state, bool forward) {
  const Vec4 x = poincare_map(S.model, S.section, state, forward, S.map_tol);
  const double drift = std::abs(jacobi(S.model, x) - S.C);
  if (!(drift <= S.jacobi_guard)) throw IntegrationError("Poincare map lost the Jacobi constant", 0.0, to_vector(x));
  return x;
}

ManifoldGrid globalize(const ManifoldSeries& S, int M_grid, int N_max) {
  if (M_grid < 1 || N_max < 0) throw Error("globalize: M_grid must be positive and N_max non-negative");
  if (!(S.D > 0.0)) throw Error("globalize: fundamental domain not computed");
  const int m = S.m();
  const bool unstable = S.kind == ManifoldKind::unstable;
  const std::size_t chains = static_cast<std::size_t>(m) * 2 * M_grid;
  std::vector<std::vector<GridPoint>> out(chains);
  std::vector<std::string> seed_errors(chains);
  parallel_for(chains, [&](std::size_t idx) {
    const int k = static_cast<int>(idx / (2 * M_grid));
    const int rem = static_cast<int>(idx % (2 * M_grid));
    const double sgn = rem < M_grid ? 1.0 : -1.0;
    const int i = rem % M_grid + 1;
    const double s = sgn * S.D * i / M_grid;
    auto& chain = out[idx];
    Vec4 x;
    try {
      x = eval_Wp(S, k, s);
    } catch (const Error& e) {
      seed_errors[idx] = e.what();
      return;
    }
    chain.push_back({k, s, 0, x, true});
    double tag = s;
    bool alive = true;
    for (int N = 1; N <= N_max; ++N) {
      tag = unstable ? tag * S.lambda : tag / S.lambda;
      const int kt = (((unstable ? k + N : k - N) % m) + m) % m;
      GridPoint p{kt, tag, N, Vec4{NAN, NAN, NAN, NAN}, false};
      if (alive) {
        try {
          x = guarded_map(S, x, unstable);
          p.state = x;
          p.valid = true;
        } catch (const Error&) {
          alive = false;
        }
      }
      chain.push_back(p);
    }
  });
  for (std::size_t i = 0; i < chains; ++i)
    if (!seed_errors[i].empty()) throw Error("globalize: seed projection failed: " + seed_errors[i]);
  ManifoldGrid G;
  G.kind = S.kind;
  G.section = S.section;
  G.series_id = S.orbit_id;
  G.model = S.model;
  G.m = m;
  G.D = S.D;
  G.lambda = S.lambda;
  G.C = S.C;
  G.M_grid = M_grid;
  G.N_max = N_max;
  for (auto& c : out) G.points.insert(G.points.end(), c.begin(), c.end());
  std::sort(G.points.begin(), G.points.end(), [](const GridPoint& a, const GridPoint& b) {
    if (a.k != b.k) return a.k < b.k;
    if (a.s != b.s) return a.s < b.s;
    return a.N < b.N;
  });
  return G;
}

int pullback_depth(const ManifoldSeries& S, double s) {
  if (!(S.D > 0.0)) throw Error("pullback_depth: fundamental domain not computed");
  const double f = S.kind == ManifoldKind::unstable ? 1.0 / S.lambda : S.lambda;
  int N = 0;
  double a = std::abs(s);
  while (!(a < S.D)) {
    a *= f;
    if (++N > 10000) throw Error("pullback_depth: parameter too large");
  }
  return N;
}

Vec4 eval_Wp_global(const ManifoldSeries& S, int k, double s) {
  const int N = pullback_depth(S, s);
  const bool unstable = S.kind == ManifoldKind::unstable;
  const double f = unstable ? 1.0 / S.lambda : S.lambda;
  const int m = S.m();
  const double sp = s * std::pow(f, N);
  const int kp = (((unstable ? k - N : k + N) % m) + m) % m;
  Vec4 x = eval_Wp(S, kp, sp);
  for (int i = 0; i < N; ++i) x = guarded_map(S, x, unstable);
  return x;
}

}  // namespace mshoot
