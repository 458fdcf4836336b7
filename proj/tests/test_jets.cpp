#include <random>

#include "doctest.h"
#include "mshoot/jet.hpp"

using namespace mshoot;

namespace {

void check_coeffs(const Jet& f, std::initializer_list<double> want, double tol = 1e-15) {
  REQUIRE(f.degree() + 1 == static_cast<int>(want.size()));
  int j = 0;
  for (double w : want) CHECK(std::abs(f[j++] - w) <= tol);
}

Jet random_jet(std::mt19937_64& rng, int d, double c0_lo = -1, double c0_hi = 1) {
  std::uniform_real_distribution<double> u(-1, 1), c0(c0_lo, c0_hi);
  Jet f(d);
  f[0] = c0(rng);
  for (int j = 1; j <= d; ++j) f[j] = u(rng);
  return f;
}

double max_diff(const Jet& a, const Jet& b) {
  double m = 0;
  for (int j = 0; j <= a.degree(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

}  // namespace

TEST_CASE("jet_linear") {
  check_coeffs(jet_linear(1, Jet{1, 2}, 1, Jet{3, 4}), {4, 6});
  check_coeffs(jet_linear(0, Jet{7, -3}, 1, Jet{0, 1}), {0, 1});
  check_coeffs(jet_linear(2, Jet{1, 0, 0}, -1, Jet{1, 0, 0}), {1, 0, 0});
  CHECK_THROWS_AS(jet_linear(1, Jet{1, 2}, 1, Jet{1, 2, 3}), DimensionError);
}

TEST_CASE("jet_mul truncates at the shared degree") {
  check_coeffs(jet_mul(Jet{1, 1}, Jet{1, -1}), {1, 0});
  check_coeffs(jet_mul(Jet{1, 1, 0}, Jet{1, -1, 0}), {1, 0, -1});
  check_coeffs(jet_mul(Jet{0, 1, 0}, Jet{0, 1, 0}), {0, 0, 1});
  CHECK_THROWS_AS(jet_mul(Jet{1}, Jet{1, 2}), DimensionError);
}

TEST_CASE("jet_div") {
  check_coeffs(jet_div(Jet{1, 0, 0, 0}, Jet{1, -1, 0, 0}), {1, 1, 1, 1});
  check_coeffs(jet_div(Jet{2, 3, 5}, Jet{2, 3, 5}), {1, 0, 0});
  check_coeffs(jet_div(Jet{1, 1}, Jet{2, 0}), {0.5, 0.5});
  CHECK_THROWS_AS(jet_div(Jet{1, 1}, Jet{0, 1}), SingularityError);
}

TEST_CASE("jet_pow") {
  check_coeffs(jet_pow(Jet{4, 4, 1}, 0.5), {2, 1, 0});
  check_coeffs(jet_pow(Jet{1, 0, 0}, -1.5), {1, 0, 0});
  const Jet f{1, 2, 1};
  CHECK(max_diff(jet_pow(f, -1.0), jet_div(Jet{1, 0, 0}, f)) < 1e-14);
  CHECK_THROWS_AS(jet_pow(Jet{0, 1}, 0.5), SingularityError);
  CHECK_THROWS_AS(jet_pow(Jet{-1, 1}, 0.5), SingularityError);
}

TEST_CASE("random round trips") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    const int d = 1 + t % 20;
    const Jet f = random_jet(rng, d);
    Jet g = random_jet(rng, d);
    g[0] = (t % 2 ? 1.0 : -1.0) * (1.0 + std::abs(g[0]));
    CHECK(max_diff(jet_mul(jet_div(f, g), g), f) < 1e-12);
    const Jet h = random_jet(rng, d, 0.5, 2.0);
    CHECK(max_diff(jet_pow(h, 1.0), h) < 1e-12);
    CHECK(max_diff(jet_pow(jet_pow(h, 0.5), 2.0), h) < 1e-12);
  }
}

TEST_CASE("truncation consistency") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    const int d = 3 + t % 15;
    Jet a = random_jet(rng, d + 3), b = random_jet(rng, d + 3, 0.5, 2.0);
    auto expr = [](const Jet& x, const Jet& y) { return jet_pow(y, -1.5) * x + jet_div(x * x, y) - 0.5 * y; };
    const Jet hi = expr(a, b).truncated(d);
    const Jet lo = expr(a.truncated(d), b.truncated(d));
    CHECK(max_diff(hi, lo) <= 1e-15 * std::max(1.0, max_diff(lo, Jet(d))));
  }
}

TEST_CASE("JetState degree checks") {
  JetState s(Jet{1, 2}, Jet{0, 1}, Jet{0, 0}, Jet{1, 0});
  CHECK(s.degree() == 1);
  CHECK(s.eval(2.0)[0] == 5.0);
  CHECK_THROWS_AS(JetState(Jet{1, 2}, Jet{0, 1, 2}, Jet{0, 0}, Jet{1, 0}).check(), DimensionError);
}
