#include <map>
#include <random>
#include <tuple>

#include "common.hpp"
#include "doctest.h"
#include "mshoot/connections.hpp"

using namespace mshoot;
using mshoot::testing::earth_moon_series;

namespace {

// Polynomial "manifold" with px = py = 0, so sigma vanishes identically at
// mu = 0 and eval_Wp returns the series value itself.
ManifoldSeries planar_curve(ManifoldKind kind, std::vector<Vec4> coeffs) {
  ManifoldSeries S;
  S.kind = kind;
  S.lambda = kind == ManifoldKind::unstable ? 2.0 : 0.5;
  S.D = 10.0;
  S.degree = static_cast<int>(coeffs.size()) - 1;
  S.coeffs = {std::move(coeffs)};
  S.tau = {1.0};
  S.model = SystemModel{0.0, "plane"};
  S.energy_correction = false;
  return S;
}

// Taylor coefficients of r (cos s, sin s); degree 18 is exact in double for |s| <= 0.5.
std::vector<Vec4> circle_coeffs(double r) {
  std::vector<Vec4> c(19);
  double f = 1.0;
  for (int j = 0; j <= 18; ++j) {
    if (j > 0) f /= j;
    const double sgn = (j / 2) % 2 ? -1.0 : 1.0;
    c[j] = j % 2 ? Vec4{0, r * sgn * f, 0, 0} : Vec4{r * sgn * f, 0, 0, 0};
  }
  return c;
}

std::vector<GridPoint> arc(int k, int n, const std::function<Vec4(double)>& f, double s0, double s1) {
  std::vector<GridPoint> pts;
  for (int i = 0; i < n; ++i) {
    const double s = s0 + (s1 - s0) * i / (n - 1);
    pts.push_back({k, s, 0, f(s), true});
  }
  return pts;
}

std::vector<Segment> random_segments(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1, 1), d(-0.2, 0.2);
  std::vector<Segment> out(n);
  for (int i = 0; i < n; ++i) {
    Segment& s = out[i];
    s.k = i % 3;
    s.s_lo = i;
    s.s_hi = i + 1;
    s.p1 = {u(rng), u(rng)};
    s.p2 = {s.p1[0] + d(rng), s.p1[1] + d(rng)};
  }
  // Shared endpoints, collinear overlaps and exact parallels.
  out[1].p1 = out[0].p2;
  out[2] = out[0];
  out[3].p2 = {out[3].p1[0] + 2 * (out[0].p2[0] - out[0].p1[0]), out[3].p1[1] + 2 * (out[0].p2[1] - out[0].p1[1])};
  return out;
}

using HitKey = std::tuple<int, int, double, double, double, double, double, double>;
std::vector<HitKey> keys(const std::vector<SegmentHit>& hits) {
  std::vector<HitKey> out;
  for (const auto& h : hits) out.emplace_back(h.k1, h.k2, h.s1_lo, h.s1_hi, h.s2_lo, h.s2_hi, h.a, h.b);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("build_layers: layer ranges and boundary duplication") {
  for (auto [kind, lambda] : {std::pair{ManifoldKind::unstable, 2.0}, std::pair{ManifoldKind::stable, 0.5}}) {
    ManifoldGrid g;
    g.kind = kind;
    for (int j = 0; j <= 12; ++j)
      for (double sign : {1.0, -1.0}) g.points.push_back({0, sign * 0.1 * std::pow(2.0, j / 4.0), 0, Vec4{}, true});
    const auto layers = build_layers(g, 0.1, lambda, 3);
    REQUIRE(layers.size() == 6);
    CHECK(layers[0].N == 1);
    CHECK(layers[0].half == Half::positive);
    CHECK(layers[0].s_lo == 0.1);
    CHECK(layers[0].s_hi == 0.2);
    CHECK(layers[2].s_lo == 0.2);
    CHECK(layers[2].s_hi == 0.4);
    CHECK(layers[0].side == (kind == ManifoldKind::unstable ? LayerSide::unstable_source : LayerSide::stable_target));
    // j = 0..4 in layer 1, 4..8 in layer 2: s = 0.2 appears in both.
    CHECK(layers[0].points.size() == 5);
    CHECK(layers[2].points.size() == 5);
    CHECK(layers[0].points.back().s == layers[2].points.front().s);
    for (const Layer& l : layers)
      for (const GridPoint& p : l.points) CHECK((p.s > 0) == (l.half == Half::positive));
  }
  ManifoldGrid bad;
  bad.kind = ManifoldKind::stable;
  CHECK_THROWS_AS(build_layers(bad, 0.1, 2.0, 3), Error);
}

TEST_CASE("candidate_pairs") {
  CHECK(candidate_pairs(1) == std::vector<std::pair<int, int>>{{1, 1}});
  const auto p3 = candidate_pairs(3);
  CHECK(p3 == std::vector<std::pair<int, int>>{{1, 1}, {2, 2}, {2, 1}, {3, 3}, {3, 2}});
  for (auto [n, m] : candidate_pairs(8)) {
    CHECK(m >= 1);
    CHECK((n == m || n == m + 1));
  }
}

TEST_CASE("segment_intersect examples") {
  const auto x = segment_intersect({0, 0}, {1, 1}, {0, 1}, {1, 0});
  REQUIRE(x);
  CHECK(x->a == 0.5);
  CHECK(x->b == 0.5);
  CHECK(x->point == Vec2{0.5, 0.5});
  CHECK_FALSE(segment_intersect({0, 0}, {1, 0}, {0, 1}, {1, 1}));
  const auto y = segment_intersect({0, 0}, {2, 0}, {1, -1}, {1, 3});
  REQUIRE(y);
  CHECK(y->a == 0.5);
  CHECK(y->b == 0.25);
  CHECK(y->point == Vec2{1, 0});
  // Outside either unit interval.
  CHECK_FALSE(segment_intersect({0, 0}, {1, 0}, {2, -1}, {2, 1}));
  CHECK_FALSE(segment_intersect({0, 0}, {1, 0}, {0.5, 0.1}, {0.5, 1}));
}

TEST_CASE("scan: disjoint boxes, transverse arcs and the discontinuity filter") {
  const SystemModel plane{0.0, ""};
  auto circle = [](double s) { return Vec4{std::cos(s), std::sin(s), 0, 0}; };
  auto parabola = [](double x) { return Vec4{x, 0.1 + 0.05 * x * x, 0, 0}; };

  const auto far = polyline_segments(arc(0, 100, [](double s) { return Vec4{5 + s, 5, 0, 0}; }, 0.1, 1.0), plane, Projection::xy);
  const auto src = polyline_segments(arc(0, 100, circle, 0.01, 0.5), plane, Projection::xy);
  const auto tgt = polyline_segments(arc(1, 100, parabola, 0.5, 1.5), plane, Projection::xy);
  CHECK(src.size() == 99);
  CHECK(scan_segments(src, far).empty());

  const auto hits = scan_segments(src, tgt);
  REQUIRE(hits.size() == 1);
  // Exact crossing: x^2 + (0.1 + 0.05 x^2)^2 = 1.
  double lo = 0.5, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid * mid + std::pow(0.1 + 0.05 * mid * mid, 2) < 1 ? lo : hi) = mid;
  }
  const double xs = lo, th = std::atan2(0.1 + 0.05 * xs * xs, xs);
  const SegmentHit& h = hits[0];
  CHECK(h.k1 == 0);
  CHECK(h.k2 == 1);
  CHECK(h.s1_lo <= th);
  CHECK(th <= h.s1_hi);
  CHECK(h.s2_lo <= xs);
  CHECK(xs <= h.s2_hi);
  CHECK(std::abs(h.point[0] - xs) <= 1e-4);

  // One far-flung point inserted mid-arc drops the two segments touching it.
  auto pts = arc(0, 100, circle, 0.01, 0.5);
  GridPoint out = pts[50];
  out.s = 0.5 * (pts[50].s + pts[51].s);
  out.state = {3, 3, 0, 0};
  pts.insert(pts.begin() + 51, out);
  CHECK(polyline_segments(pts, plane, Projection::xy).size() == 100 - 2);
  // An invalid point removes the segments on both sides of it.
  auto gap = arc(0, 100, circle, 0.01, 0.5);
  gap[40].valid = false;
  CHECK(polyline_segments(gap, plane, Projection::xy).size() == 99 - 2);
}

TEST_CASE("scan_segments finds the same hits as the brute-force double loop") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_segments(rng, 150 + 10 * trial);
    const auto b = random_segments(rng, 200);
    const auto fast = scan_segments(a, b), brute = scan_segments_brute(a, b);
    CHECK(!brute.empty());
    CHECK(keys(fast) == keys(brute));
  }
}

TEST_CASE("refine_bisection: straight lines meet at the analytic crossing") {
  const ManifoldSeries src = planar_curve(ManifoldKind::unstable, {{2, 0.3, 0, 0}, {1, 0.5, 0, 0}});
  const ManifoldSeries tgt = planar_curve(ManifoldKind::stable, {{2.5, 0.1, 0, 0}, {-0.3, 1, 0, 0}});
  const double s1 = 0.44 / 1.15, s2 = 0.2 + 0.5 * s1;
  SegmentHit hit;
  hit.k1 = hit.k2 = 0;
  hit.s1_lo = 0.25;
  hit.s1_hi = 0.5;
  hit.s2_lo = 0.25;
  hit.s2_hi = 0.5;
  const auto sol = refine_bisection(hit, src, tgt);
  CHECK(std::abs(sol.s1 - s1) <= 1e-12);
  CHECK(std::abs(sol.s2 - s2) <= 1e-12);
  CHECK(sol.residual <= 1e-9);
  CHECK(sol.k1 == 0);
  CHECK(sol.k2 == 0);
}

TEST_CASE("refine_bisection: iteration count from unit brackets") {
  const ManifoldSeries src = planar_curve(ManifoldKind::unstable, circle_coeffs(1.0));
  const ManifoldSeries tgt = planar_curve(ManifoldKind::stable, {{0.999, 0, 0, 0}, {0, 1, 0, 0}});
  SegmentHit hit;
  hit.s1_lo = 0.0;
  hit.s1_hi = 1.0;
  hit.s2_lo = -0.5;
  hit.s2_hi = 0.5;
  const auto sol = refine_bisection(hit, src, tgt);
  CHECK(sol.iterations <= 45);
  CHECK(sol.residual <= 1e-9);
  CHECK(std::abs(sol.s1 - std::acos(0.999)) <= 1e-9);
  CHECK(std::abs(sol.s2 - std::sin(std::acos(0.999))) <= 1e-9);
}

TEST_CASE("refine_bisection: a near miss loses the intersection") {
  // Concentric circles 1e-7 apart; a coarse chord of the outer one cuts the inner one.
  const ManifoldSeries outer = planar_curve(ManifoldKind::unstable, circle_coeffs(1.0));
  const ManifoldSeries inner = planar_curve(ManifoldKind::stable, circle_coeffs(1.0 - 1e-7));
  SegmentHit hit;
  hit.s1_lo = -0.05;
  hit.s1_hi = 0.05;
  hit.s2_lo = 0.02;
  hit.s2_hi = 0.06;
  REQUIRE(segment_intersect(project(outer.model, Projection::xy, outer.eval(0, -0.05)),
                            project(outer.model, Projection::xy, outer.eval(0, 0.05)),
                            project(inner.model, Projection::xy, inner.eval(0, 0.02)),
                            project(inner.model, Projection::xy, inner.eval(0, 0.06))));
  CHECK_THROWS_AS(refine_bisection(hit, outer, inner), LostIntersection);
}

TEST_CASE("layers of real grids map into the next layer under P") {
  for (auto [m_res, kind] : {std::pair{3, ManifoldKind::unstable}, std::pair{2, ManifoldKind::stable}}) {
    CAPTURE(m_res);
    const ManifoldSeries& S = earth_moon_series(m_res, kind);
    const bool unstable = kind == ManifoldKind::unstable;
    const int N_max = 3, m = S.m();
    const ManifoldGrid G = globalize(S, 30, N_max);
    const auto layers = build_layers(G, S.D, S.lambda, N_max);
    std::map<std::pair<int, double>, const GridPoint*> by_tag;
    for (const auto& p : G.points) by_tag[{p.k, p.s}] = &p;
    int checked = 0;
    for (const Layer& l : layers) {
      if (l.N >= N_max) continue;
      const Layer& next = layers[2 * l.N + (l.half == Half::positive ? 0 : 1)];
      REQUIRE(next.N == l.N + 1);
      for (const GridPoint& p : l.points) {
        const double s1 = unstable ? p.s * S.lambda : p.s / S.lambda;
        CHECK(std::abs(s1) >= next.s_lo * (1 - 1e-12));
        CHECK(std::abs(s1) <= next.s_hi * (1 + 1e-12));
        if (!p.valid || p.N >= N_max || checked >= 40) continue;
        const int k1 = ((unstable ? p.k + 1 : p.k - 1) % m + m) % m;
        const auto it = by_tag.find({k1, s1});
        REQUIRE(it != by_tag.end());
        if (!it->second->valid) continue;
        CHECK(norm(guarded_map(S, p.state, unstable) - it->second->state) <= 1e-8);
        ++checked;
      }
    }
    CHECK(checked > 0);
  }
}
