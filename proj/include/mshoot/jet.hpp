#pragma once

// Truncated univariate Taylor series in the manifold parameter s.

#include <array>
#include <initializer_list>
#include <vector>

#include "mshoot/types.hpp"

namespace mshoot {

inline constexpr int kDefaultJetDegree = 20;

/// Polynomial c_0 + c_1 s + ... + c_d s^d. Arithmetic truncates at s^d and
/// refuses to mix degrees.
class Jet {
 public:
  Jet() : c_(kDefaultJetDegree + 1, 0.0) {}
  explicit Jet(int degree) : c_(check_degree(degree) + 1, 0.0) {}
  Jet(std::initializer_list<double> coeffs);
  explicit Jet(std::vector<double> coeffs);

  static Jet constant(double c, int degree);
  /// c + s
  static Jet variable(double c, int degree);

  int degree() const { return static_cast<int>(c_.size()) - 1; }
  double operator[](int j) const { return c_[j]; }
  double& operator[](int j) { return c_[j]; }
  const std::vector<double>& coeffs() const { return c_; }
  const double* data() const { return c_.data(); }
  double* data() { return c_.data(); }

  /// Lower-degree copy keeping coefficients 0..d.
  Jet truncated(int d) const;
  /// Horner evaluation at s.
  double eval(double s) const;

 private:
  static int check_degree(int d);
  std::vector<double> c_;
};

/// a*f + b*g, coefficientwise.
Jet jet_linear(double a, const Jet& f, double b, const Jet& g);
/// Truncated Cauchy product.
Jet jet_mul(const Jet& f, const Jet& g);
/// f / g; requires g[0] != 0.
Jet jet_div(const Jet& f, const Jet& g);
/// f^alpha for f[0] > 0.
Jet jet_pow(const Jet& f, double alpha);

Jet operator+(const Jet& f, const Jet& g);
Jet operator-(const Jet& f, const Jet& g);
Jet operator-(const Jet& f);
Jet operator*(const Jet& f, const Jet& g);
Jet operator/(const Jet& f, const Jet& g);
Jet operator*(double a, const Jet& f);
Jet operator+(const Jet& f, double c);
Jet operator-(const Jet& f, double c);

/// Expansions (x, y, px, py) sharing one degree.
struct JetState {
  std::array<Jet, 4> c;

  JetState() = default;
  explicit JetState(int degree) : c{Jet(degree), Jet(degree), Jet(degree), Jet(degree)} {}
  JetState(Jet x, Jet y, Jet px, Jet py);

  int degree() const { return c[0].degree(); }
  Jet& operator[](int i) { return c[i]; }
  const Jet& operator[](int i) const { return c[i]; }

  /// Coefficient vector of s^j.
  Vec4 coeff(int j) const { return {c[0][j], c[1][j], c[2][j], c[3][j]}; }
  void set_coeff(int j, const Vec4& v);
  Vec4 eval(double s) const;
  /// Throws DimensionError unless all components share one degree.
  void check() const;
};

}  // namespace mshoot
