#include "mshoot/pcrtbp.hpp"

#include <cmath>

namespace mshoot {
namespace {

constexpr double kCollision = 1e-12;
constexpr double kCircular = 1e-10;
constexpr double kApseWindow = 0.1;

struct Distances {
  double X1, X2, r1, r2;
};

Distances distances(double mu, double x, double y) {
  Distances d;
  d.X1 = x + mu;
  d.X2 = x - 1.0 + mu;
  d.r1 = std::sqrt(d.X1 * d.X1 + y * y);
  d.r2 = std::sqrt(d.X2 * d.X2 + y * y);
  if (d.r1 <= kCollision) throw SingularityError("pcrtbp: collision with m1");
  if (mu > 0.0 && d.r2 <= kCollision) throw SingularityError("pcrtbp: collision with m2");
  return d;
}

void eom_raw(double mu, const double* s, double* ds) {
  const Distances d = distances(mu, s[0], s[1]);
  const double k1 = (1.0 - mu) / (d.r1 * d.r1 * d.r1);
  const double k2 = mu > 0.0 ? mu / (d.r2 * d.r2 * d.r2) : 0.0;
  ds[0] = s[2] + s[1];
  ds[1] = s[3] - s[0];
  ds[2] = s[3] - k1 * d.X1 - k2 * d.X2;
  ds[3] = -s[2] - k1 * s[1] - k2 * s[1];
}

void jacobian_raw(double mu, const double* s, double* J) {
  const Distances d = distances(mu, s[0], s[1]);
  const double y = s[1];
  double axx = 0.0, axy = 0.0, ayy = 0.0;
  auto add = [&](double m, double X, double r) {
    const double r3 = r * r * r, r5 = r3 * r * r;
    axx += m * (3.0 * X * X / r5 - 1.0 / r3);
    axy += m * (3.0 * X * y / r5);
    ayy += m * (3.0 * y * y / r5 - 1.0 / r3);
  };
  add(1.0 - mu, d.X1, d.r1);
  if (mu > 0.0) add(mu, d.X2, d.r2);
  const double rows[16] = {0.0, 1.0, 1.0, 0.0, -1.0, 0.0, 0.0, 1.0, axx, axy, 0.0, 1.0, axy, ayy, -1.0, 0.0};
  std::copy(rows, rows + 16, J);
}

}  // namespace

void SystemModel::validate() const {
  if (!(mu >= 0.0 && mu < 0.5)) throw Error("model: mass ratio mu must lie in [0, 0.5)");
}

double mass_ratio(double gm_primary, double gm_secondary) {
  return gm_secondary / (gm_primary + gm_secondary);
}

SectionKind parse_section_kind(const std::string& name) {
  if (name == "periapse") return SectionKind::periapse;
  if (name == "apoapse") return SectionKind::apoapse;
  throw Error("unknown section kind: " + name);
}

const char* to_string(SectionKind kind) { return kind == SectionKind::periapse ? "periapse" : "apoapse"; }

PcrtbpField::PcrtbpField(SystemModel model) : model_(std::move(model)) { model_.validate(); }

void PcrtbpField::eval(const double* x, double* dx) const { eom_raw(model_.mu, x, dx); }

void PcrtbpField::jacobian(const double* x, double* J) const { jacobian_raw(model_.mu, x, J); }

void PcrtbpField::eval_jet(const std::vector<Jet>& s, std::vector<Jet>& ds) const {
  const double mu = model_.mu;
  const Jet& x = s[0];
  const Jet& y = s[1];
  const Jet& px = s[2];
  const Jet& py = s[3];
  const Jet X1 = x + mu;
  const Jet yy = y * y;
  const Jet r1sq = X1 * X1 + yy;
  if (!(r1sq[0] > kCollision * kCollision)) throw SingularityError("pcrtbp jet: collision with m1 (r1^2 term)");
  const Jet k1 = (1.0 - mu) * jet_pow(r1sq, -1.5);
  ds.resize(4);
  ds[0] = px + y;
  ds[1] = py - x;
  if (mu > 0.0) {
    const Jet X2 = x + (mu - 1.0);
    const Jet r2sq = X2 * X2 + yy;
    if (!(r2sq[0] > kCollision * kCollision)) throw SingularityError("pcrtbp jet: collision with m2 (r2^2 term)");
    const Jet k2 = mu * jet_pow(r2sq, -1.5);
    ds[2] = py - k1 * X1 - k2 * X2;
    ds[3] = -px - (k1 + k2) * y;
  } else {
    ds[2] = py - k1 * X1;
    ds[3] = -px - k1 * y;
  }
}

double hamiltonian(const SystemModel& model, const Vec4& s) {
  const double mu = model.mu;
  const Distances d = distances(mu, s[0], s[1]);
  double H = 0.5 * (s[2] * s[2] + s[3] * s[3]) + s[2] * s[1] - s[3] * s[0] - (1.0 - mu) / d.r1;
  if (mu > 0.0) H -= mu / d.r2;
  return H;
}

double jacobi(const SystemModel& model, const Vec4& s) { return -2.0 * hamiltonian(model, s); }

Vec4 eom(const SystemModel& model, const Vec4& s) {
  Vec4 ds;
  eom_raw(model.mu, s.data(), ds.data());
  return ds;
}

Vec4 jacobi_gradient(const SystemModel& model, const Vec4& s) {
  const Vec4 f = eom(model, s);
  return {2.0 * f[2], 2.0 * f[3], -2.0 * f[0], -2.0 * f[1]};
}

Vec4 correct_energy(const SystemModel& model, Vec4 s, double C) {
  for (int it = 0; it < 4; ++it) {
    const double dC = C - jacobi(model, s);
    if (std::abs(dC) <= 1e-15 * std::max(1.0, std::abs(C))) break;
    const Vec4 g = jacobi_gradient(model, s);
    s = s + (dC / dot(g, g)) * g;
  }
  return s;
}

Mat4 eom_jacobian(const SystemModel& model, const Vec4& s) {
  Mat4 J;
  jacobian_raw(model.mu, s.data(), J.a.data());
  return J;
}

std::pair<double, double> sigma_pair(const SystemModel& model, const Vec4& s) {
  const double mu = model.mu;
  const double sigma = (s[0] + mu) * s[2] + s[1] * (s[3] + mu);
  const Vec4 f = eom(model, s);
  const double sdot = s[2] * f[0] + (s[3] + mu) * f[1] + (s[0] + mu) * f[2] + s[1] * f[3];
  return {sigma, sdot};
}

OsculatingElements osculating(const SystemModel& model, const Vec4& s) {
  const double mu = model.mu;
  const double GM = 1.0 - mu;
  const double rx = s[0] + mu, ry = s[1];
  const double vx = s[2], vy = s[3] + mu;
  const double r = std::sqrt(rx * rx + ry * ry);
  if (r <= kCollision) throw SingularityError("osculating: state at m1");
  const double v2 = vx * vx + vy * vy;
  const double inv_a = 2.0 / r - v2 / GM;
  if (!(inv_a > 0.0)) throw UnboundError("osculating: state is not bound about m1");
  OsculatingElements el;
  el.a = 1.0 / inv_a;
  const double rv = rx * vx + ry * vy;
  const double ex = ((v2 - GM / r) * rx - rv * vx) / GM;
  const double ey = ((v2 - GM / r) * ry - rv * vy) / GM;
  el.e = std::sqrt(ex * ex + ey * ey);
  if (el.e < kCircular) {
    el.degenerate = true;
    return el;
  }
  const double h = rx * vy - ry * vx;
  el.g = wrap_angle(std::atan2(ey, ex));
  const double theta = std::atan2(ry, rx);
  el.nu = wrap_angle(h >= 0.0 ? theta - el.g : el.g - theta);
  return el;
}

Vec4 state_from_elements(const SystemModel& model, const OsculatingElements& el) {
  const double mu = model.mu;
  const double GM = 1.0 - mu;
  if (!(el.a > 0.0) || !(el.e >= 0.0 && el.e < 1.0)) throw Error("state_from_elements: need a > 0, 0 <= e < 1");
  const double p = el.a * (1.0 - el.e * el.e);
  const double r = p / (1.0 + el.e * std::cos(el.nu));
  const double th = el.g + el.nu;
  const double k = std::sqrt(GM / p);
  const double rx = r * std::cos(th), ry = r * std::sin(th);
  const double vx = -k * (std::sin(th) + el.e * std::sin(el.g));
  const double vy = k * (std::cos(th) + el.e * std::cos(el.g));
  return {rx - mu, ry, vx, vy - mu};
}

double mean_anomaly(double nu, double e) {
  const double E = std::atan2(std::sqrt(1.0 - e * e) * std::sin(nu), e + std::cos(nu));
  return wrap_angle(E - e * std::sin(E));
}

DelaunayCoords delaunay(const SystemModel& model, const Vec4& s) {
  const OsculatingElements el = osculating(model, s);
  if (el.e >= 1.0) throw UnboundError("delaunay: eccentricity >= 1");
  const double mu = model.mu;
  const double h = (s[0] + mu) * (s[3] + mu) - s[1] * s[2];
  DelaunayCoords dc;
  dc.L = std::sqrt((1.0 - mu) * el.a);
  dc.G = (h >= 0.0 ? 1.0 : -1.0) * dc.L * std::sqrt(1.0 - el.e * el.e);
  dc.ell = mean_anomaly(el.nu, el.e);
  dc.g = el.g;
  return dc;
}

Vec4 mirror(const Vec4& s) { return {s[0], -s[1], -s[2], s[3]}; }

double apse_anomaly_offset(const SystemModel& model, SectionKind kind, const Vec4& s) {
  const OsculatingElements el = osculating(model, s);
  if (el.degenerate) return INFINITY;
  const double target = kind == SectionKind::periapse ? 0.0 : kPi;
  const double d = std::abs(wrap_angle(el.nu - target + kPi) - kPi);
  return d;
}

EventSpec make_section(const SystemModel& model, SectionKind kind, double max_time) {
  EventSpec ev;
  const double mu = model.mu;
  ev.sigma = [mu](const double* s) { return (s[0] + mu) * s[2] + s[1] * (s[3] + mu); };
  SystemModel m = model;
  ev.sigma_dot = [m](const double* s) { return sigma_pair(m, {s[0], s[1], s[2], s[3]}).second; };
  ev.direction = kind == SectionKind::periapse ? Direction::increasing : Direction::decreasing;
  ev.extra_test = [m, kind](const double* s) {
    try {
      return apse_anomaly_offset(m, kind, {s[0], s[1], s[2], s[3]}) < kApseWindow;
    } catch (const Error&) {
      return false;
    }
  };
  ev.max_time = max_time;
  return ev;
}

}  // namespace mshoot
