#include "mshoot/jet.hpp"

#include <cmath>
#include <string>

#include "mshoot/simd.hpp"

namespace mshoot {
namespace {

void require_same(const Jet& f, const Jet& g, const char* op) {
  if (f.degree() != g.degree())
    throw DimensionError(std::string(op) + ": degree mismatch (" + std::to_string(f.degree()) + " vs " +
                         std::to_string(g.degree()) + ")");
}

// r[D - i] = f[i], so that sum_j a[j] f[i - j] becomes a forward dot product.
void reverse_into(const Jet& f, std::vector<double>& r) {
  const int D = f.degree();
  r.resize(D + 1);
  for (int i = 0; i <= D; ++i) r[D - i] = f[i];
}

}  // namespace

Jet::Jet(std::initializer_list<double> coeffs) : c_(coeffs) {
  if (c_.empty()) throw DimensionError("Jet: needs at least one coefficient");
}

Jet::Jet(std::vector<double> coeffs) : c_(std::move(coeffs)) {
  if (c_.empty()) throw DimensionError("Jet: needs at least one coefficient");
}

int Jet::check_degree(int d) {
  if (d < 0) throw DimensionError("Jet: negative degree");
  return d;
}

Jet Jet::constant(double c, int degree) {
  Jet j(degree);
  j[0] = c;
  return j;
}

Jet Jet::variable(double c, int degree) {
  Jet j(degree);
  j[0] = c;
  if (degree >= 1) j[1] = 1.0;
  return j;
}

Jet Jet::truncated(int d) const {
  if (d > degree()) throw DimensionError("Jet::truncated: target degree exceeds jet degree");
  return Jet(std::vector<double>(c_.begin(), c_.begin() + check_degree(d) + 1));
}

double Jet::eval(double s) const {
  double v = 0.0;
  for (int j = degree(); j >= 0; --j) v = v * s + c_[j];
  return v;
}

Jet jet_linear(double a, const Jet& f, double b, const Jet& g) {
  require_same(f, g, "jet_linear");
  Jet h(f.degree());
  for (int j = 0; j <= f.degree(); ++j) h[j] = a * f[j] + b * g[j];
  return h;
}

Jet jet_mul(const Jet& f, const Jet& g) {
  require_same(f, g, "jet_mul");
  const int D = f.degree();
  const auto& k = simd::active();
  thread_local std::vector<double> rg;
  reverse_into(g, rg);
  Jet h(D);
  for (int i = 0; i <= D; ++i) h[i] = k.dot(f.data(), rg.data() + (D - i), i + 1);
  return h;
}

Jet jet_div(const Jet& f, const Jet& g) {
  require_same(f, g, "jet_div");
  if (g[0] == 0.0) throw SingularityError("jet_div: divisor has zero constant term");
  const int D = f.degree();
  const auto& k = simd::active();
  thread_local std::vector<double> rg;
  reverse_into(g, rg);
  Jet d(D);
  const double inv = 1.0 / g[0];
  d[0] = f[0] * inv;
  for (int i = 1; i <= D; ++i) d[i] = (f[i] - k.dot(d.data(), rg.data() + (D - i), i)) * inv;
  return d;
}

Jet jet_pow(const Jet& f, double alpha) {
  if (!(f[0] > 0.0)) throw SingularityError("jet_pow: base has non-positive constant term");
  const int D = f.degree();
  const auto& k = simd::active();
  // k f0 h_k = sum_{j=1..k} ((alpha+1) j - k) f_j h_{k-j}
  thread_local std::vector<double> jf, rh;
  jf.resize(D + 1);
  rh.assign(D + 1, 0.0);
  for (int j = 0; j <= D; ++j) jf[j] = j * f[j];
  Jet h(D);
  h[0] = std::pow(f[0], alpha);
  rh[D] = h[0];
  const double inv = 1.0 / f[0];
  for (int n = 1; n <= D; ++n) {
    const double* hr = rh.data() + (D - n + 1);
    const double s1 = k.dot(jf.data() + 1, hr, n);
    const double s0 = k.dot(f.data() + 1, hr, n);
    h[n] = ((alpha + 1.0) * s1 - n * s0) * inv / n;
    rh[D - n] = h[n];
  }
  return h;
}

Jet operator+(const Jet& f, const Jet& g) { return jet_linear(1.0, f, 1.0, g); }
Jet operator-(const Jet& f, const Jet& g) { return jet_linear(1.0, f, -1.0, g); }
Jet operator-(const Jet& f) { return -1.0 * f; }
Jet operator*(const Jet& f, const Jet& g) { return jet_mul(f, g); }
Jet operator/(const Jet& f, const Jet& g) { return jet_div(f, g); }

Jet operator*(double a, const Jet& f) {
  Jet h(f.degree());
  for (int j = 0; j <= f.degree(); ++j) h[j] = a * f[j];
  return h;
}

Jet operator+(const Jet& f, double c) {
  Jet h = f;
  h[0] += c;
  return h;
}

Jet operator-(const Jet& f, double c) { return f + (-c); }

JetState::JetState(Jet x, Jet y, Jet px, Jet py) : c{std::move(x), std::move(y), std::move(px), std::move(py)} {
  check();
}

void JetState::set_coeff(int j, const Vec4& v) {
  for (int i = 0; i < 4; ++i) c[i][j] = v[i];
}

Vec4 JetState::eval(double s) const { return {c[0].eval(s), c[1].eval(s), c[2].eval(s), c[3].eval(s)}; }

void JetState::check() const {
  for (int i = 1; i < 4; ++i)
    if (c[i].degree() != c[0].degree()) throw DimensionError("JetState: components have different degrees");
}

}  // namespace mshoot
