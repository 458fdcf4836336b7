#include "mshoot/connections.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <tuple>

#include "mshoot/parallel.hpp"
#include "mshoot/simd.hpp"

namespace mshoot {

Projection parse_projection(const std::string& name) {
  if (name == "xy") return Projection::xy;
  if (name == "Lg") return Projection::Lg;
  throw Error("unknown coordinates '" + name + "' (expected xy or Lg)");
}

Vec2 project(const SystemModel& model, Projection p, const Vec4& s) {
  if (p == Projection::xy) return {s[0], s[1]};
  const DelaunayCoords d = delaunay(model, s);
  return {d.L, wrap_angle(d.g)};
}

std::vector<Layer> build_layers(const ManifoldGrid& grid, double D, double lambda, int N_max) {
  const bool unstable = grid.kind == ManifoldKind::unstable;
  const double L = unstable ? lambda : 1.0 / lambda;
  if (!(L > 1.0)) throw Error("build_layers: multiplier inconsistent with the manifold kind");
  std::vector<Layer> layers;
  for (int N = 1; N <= N_max; ++N) {
    for (Half h : {Half::positive, Half::negative}) {
      Layer layer;
      layer.side = unstable ? LayerSide::unstable_source : LayerSide::stable_target;
      layer.N = N;
      layer.half = h;
      layer.s_lo = D * std::pow(L, N - 1);
      layer.s_hi = D * std::pow(L, N);
      const double lo = layer.s_lo * (1.0 - 1e-12), hi = layer.s_hi * (1.0 + 1e-12);
      for (const GridPoint& p : grid.points) {
        if ((h == Half::positive) != (p.s > 0.0)) continue;
        const double a = std::abs(p.s);
        if (a >= lo && a <= hi) layer.points.push_back(p);
      }
      layers.push_back(std::move(layer));
    }
  }
  return layers;
}

std::vector<std::pair<int, int>> candidate_pairs(int N_max) {
  std::vector<std::pair<int, int>> out;
  for (int N = 1; N <= N_max; ++N) {
    out.emplace_back(N, N);
    if (N - 1 >= 1) out.emplace_back(N, N - 1);
  }
  return out;
}

std::optional<SegmentIntersection> segment_intersect(const Vec2& x1, const Vec2& x2, const Vec2& y1, const Vec2& y2) {
  double a, b;
  if (!simd::segment_solve(x1[0], x1[1], x2[0], x2[1], y1[0], y1[1], y2[0], y2[1], a, b)) return std::nullopt;
  SegmentIntersection r;
  r.a = a;
  r.b = b;
  r.point = {x1[0] + (x2[0] - x1[0]) * a, x1[1] + (x2[1] - x1[1]) * a};
  return r;
}

std::vector<Segment> polyline_segments(const std::vector<GridPoint>& points, const SystemModel& model, Projection p,
                                       double factor, int window) {
  // Group by (k, sign), each ordered by increasing |s|.
  std::map<std::pair<int, int>, std::vector<const GridPoint*>> lines;
  for (const GridPoint& g : points) lines[{g.k, g.s > 0.0 ? 0 : 1}].push_back(&g);
  std::vector<Segment> out;
  std::vector<double> history, scratch;
  for (auto& [key, pts] : lines) {
    std::sort(pts.begin(), pts.end(),
              [](const GridPoint* a, const GridPoint* b) { return std::abs(a->s) < std::abs(b->s); });
    history.clear();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const GridPoint& a = *pts[i];
      const GridPoint& b = *pts[i + 1];
      if (!a.valid || !b.valid) continue;
      Segment seg;
      seg.k = a.k;
      seg.s_lo = a.s;
      seg.s_hi = b.s;
      seg.p1 = project(model, p, a.state);
      seg.p2 = project(model, p, b.state);
      const double len = std::hypot(seg.p2[0] - seg.p1[0], seg.p2[1] - seg.p1[1]);
      if (!std::isfinite(len)) continue;
      if (!history.empty()) {
        scratch = history;
        const std::size_t mid = scratch.size() / 2;
        std::nth_element(scratch.begin(), scratch.begin() + mid, scratch.end());
        double med = scratch[mid];
        if (scratch.size() % 2 == 0) {
          const double lower = *std::max_element(scratch.begin(), scratch.begin() + mid);
          med = 0.5 * (med + lower);
        }
        if (len > factor * med) continue;
      }
      history.push_back(len);
      if (static_cast<int>(history.size()) > window) history.erase(history.begin());
      out.push_back(seg);
    }
  }
  return out;
}

namespace {

constexpr std::size_t kBlock = 64;

struct TargetBlocks {
  std::vector<double> x1, y1, x2, y2;
  std::vector<std::array<double, 4>> box;  // xmin, xmax, ymin, ymax per block
};

std::array<double, 4> seg_box(const Segment& s) {
  std::array<double, 4> b{std::min(s.p1[0], s.p2[0]), std::max(s.p1[0], s.p2[0]), std::min(s.p1[1], s.p2[1]),
                          std::max(s.p1[1], s.p2[1])};
  const double pad = 1e-9 * (std::abs(b[0]) + std::abs(b[1]) + std::abs(b[2]) + std::abs(b[3]) + 1e-300);
  b[0] -= pad;
  b[1] += pad;
  b[2] -= pad;
  b[3] += pad;
  return b;
}

TargetBlocks make_blocks(const std::vector<Segment>& t) {
  TargetBlocks B;
  const std::size_t n = t.size();
  B.x1.resize(n);
  B.y1.resize(n);
  B.x2.resize(n);
  B.y2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    B.x1[i] = t[i].p1[0];
    B.y1[i] = t[i].p1[1];
    B.x2[i] = t[i].p2[0];
    B.y2[i] = t[i].p2[1];
  }
  for (std::size_t s = 0; s < n; s += kBlock) {
    std::array<double, 4> box{INFINITY, -INFINITY, INFINITY, -INFINITY};
    for (std::size_t i = s; i < std::min(n, s + kBlock); ++i) {
      const auto b = seg_box(t[i]);
      box[0] = std::min(box[0], b[0]);
      box[1] = std::max(box[1], b[1]);
      box[2] = std::min(box[2], b[2]);
      box[3] = std::max(box[3], b[3]);
    }
    B.box.push_back(box);
  }
  return B;
}

SegmentHit make_hit(const Segment& p, const Segment& q, double a, double b) {
  SegmentHit h;
  h.k1 = p.k;
  h.k2 = q.k;
  h.s1_lo = p.s_lo;
  h.s1_hi = p.s_hi;
  h.s2_lo = q.s_lo;
  h.s2_hi = q.s_hi;
  h.a = a;
  h.b = b;
  h.point = {p.p1[0] + (p.p2[0] - p.p1[0]) * a, p.p1[1] + (p.p2[1] - p.p1[1]) * a};
  return h;
}

}  // namespace

std::vector<SegmentHit> scan_segments(const std::vector<Segment>& source, const std::vector<Segment>& target) {
  if (source.empty() || target.empty()) return {};
  const TargetBlocks B = make_blocks(target);
  const simd::Kernels& K = simd::active();
  const std::size_t chunk = 256;
  const std::size_t nchunks = (source.size() + chunk - 1) / chunk;
  std::vector<std::vector<SegmentHit>> partial(nchunks);
  parallel_for(nchunks, [&](std::size_t c) {
    std::uint32_t idx[kBlock];
    double av[kBlock], bv[kBlock];
    for (std::size_t i = c * chunk; i < std::min(source.size(), (c + 1) * chunk); ++i) {
      const Segment& p = source[i];
      const auto pb = seg_box(p);
      for (std::size_t blk = 0; blk < B.box.size(); ++blk) {
        const auto& bx = B.box[blk];
        if (pb[1] < bx[0] || pb[0] > bx[1] || pb[3] < bx[2] || pb[2] > bx[3]) continue;
        const std::size_t s = blk * kBlock;
        const std::size_t n = std::min(kBlock, target.size() - s);
        const simd::SegmentBatch batch{B.x1.data() + s, B.y1.data() + s, B.x2.data() + s, B.y2.data() + s, n};
        const std::size_t hits = K.segment_hits(p.p1[0], p.p1[1], p.p2[0], p.p2[1], batch, idx, av, bv);
        for (std::size_t h = 0; h < hits; ++h) partial[c].push_back(make_hit(p, target[s + idx[h]], av[h], bv[h]));
      }
    }
  });
  std::vector<SegmentHit> out;
  for (auto& v : partial) out.insert(out.end(), v.begin(), v.end());
  return out;
}

std::vector<SegmentHit> scan_segments_brute(const std::vector<Segment>& source, const std::vector<Segment>& target) {
  std::vector<SegmentHit> out;
  for (const Segment& p : source)
    for (const Segment& q : target)
      if (const auto r = segment_intersect(p.p1, p.p2, q.p1, q.p2)) out.push_back(make_hit(p, q, r->a, r->b));
  return out;
}

std::vector<SegmentHit> scan_layer_pair(const std::vector<const Layer*>& source, const std::vector<const Layer*>& target,
                                        const SystemModel& model, Projection p) {
  std::vector<Segment> src, tgt;
  int N = 0, M = 0;
  for (const Layer* l : source) {
    const auto s = polyline_segments(l->points, model, p);
    src.insert(src.end(), s.begin(), s.end());
    N = l->N;
  }
  for (const Layer* l : target) {
    const auto s = polyline_segments(l->points, model, p);
    tgt.insert(tgt.end(), s.begin(), s.end());
    M = l->N;
  }
  auto hits = scan_segments(src, tgt);
  for (auto& h : hits) {
    h.N = N;
    h.M = M;
  }
  return hits;
}

HeteroclinicSolution refine_bisection(const SegmentHit& hit, const ManifoldSeries& source,
                                      const ManifoldSeries& target, const BisectionOptions& opt) {
  const SystemModel& model = source.model;
  auto W1 = [&](double s) { return eval_Wp_global(source, hit.k1, s); };
  auto W2 = [&](double s) { return eval_Wp_global(target, hit.k2, s); };
  auto P = [&](const Vec4& x) { return project(model, opt.projection, x); };
  double a1 = hit.s1_lo, b1 = hit.s1_hi, a2 = hit.s2_lo, b2 = hit.s2_hi;
  Vec4 A1 = W1(a1), B1 = W1(b1), A2 = W2(a2), B2 = W2(b2);
  auto first = segment_intersect(P(A1), P(B1), P(A2), P(B2));
  if (!first) throw LostIntersection("refine_bisection: re-evaluated segments do not intersect");
  double ta = first->a, tb = first->b;
  auto narrow = [&](double lo, double hi) {
    return std::abs(hi - lo) <= opt.tol_s * std::max(std::abs(lo), std::abs(hi));
  };
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (narrow(a1, b1) && narrow(a2, b2)) break;
    const Vec4 x1 = A1 + ta * (B1 - A1);
    const Vec4 x2 = A2 + tb * (B2 - A2);
    if (norm(x1 - x2) < 0.01 * opt.tol_residual && it > 0) {
      const double s1 = a1 + ta * (b1 - a1), s2 = a2 + tb * (b2 - a2);
      if (norm(W1(s1) - W2(s2)) < 0.1 * opt.tol_residual) break;
    }
    const double c1 = 0.5 * (a1 + b1), c2 = 0.5 * (a2 + b2);
    const Vec4 C1 = W1(c1), C2 = W2(c2);
    const Vec2 pA1 = P(A1), pB1 = P(B1), pC1 = P(C1), pA2 = P(A2), pB2 = P(B2), pC2 = P(C2);
    struct Option {
      bool first_half1, first_half2;
    };
    bool found = false;
    for (const Option o : {Option{true, true}, Option{true, false}, Option{false, true}, Option{false, false}}) {
      const Vec2& u1 = o.first_half1 ? pA1 : pC1;
      const Vec2& u2 = o.first_half1 ? pC1 : pB1;
      const Vec2& v1 = o.first_half2 ? pA2 : pC2;
      const Vec2& v2 = o.first_half2 ? pC2 : pB2;
      const auto r = segment_intersect(u1, u2, v1, v2);
      if (!r) continue;
      if (o.first_half1) {
        b1 = c1;
        B1 = C1;
      } else {
        a1 = c1;
        A1 = C1;
      }
      if (o.first_half2) {
        b2 = c2;
        B2 = C2;
      } else {
        a2 = c2;
        A2 = C2;
      }
      ta = r->a;
      tb = r->b;
      found = true;
      break;
    }
    if (!found) throw LostIntersection("refine_bisection: no sub-segment pair intersects");
  }
  HeteroclinicSolution sol;
  sol.k1 = hit.k1;
  sol.k2 = hit.k2;
  sol.s1 = a1 + ta * (b1 - a1);
  sol.s2 = a2 + tb * (b2 - a2);
  sol.state = W1(sol.s1);
  sol.target_state = W2(sol.s2);
  sol.residual = norm(sol.state - sol.target_state);
  sol.N = hit.N;
  sol.M = hit.M;
  sol.iterations = it;
  if (!(sol.residual <= opt.tol_residual))
    throw LostIntersection("refine_bisection: residual " + std::to_string(sol.residual) + " above tolerance");
  return sol;
}

Asymptotics connection_asymptotics(const HeteroclinicSolution& sol, const ManifoldSeries& source,
                                   const ManifoldSeries& target, int K) {
  Asymptotics A;
  auto nearest = [](const ManifoldSeries& S, const Vec4& x) {
    double d = INFINITY;
    for (const auto& W : S.coeffs) d = std::min(d, norm(x - W[0]));
    return d;
  };
  Vec4 x = sol.state;
  for (int i = 0; i < K; ++i) {
    try {
      x = poincare_map(source.model, source.section, x, false, source.map_tol);
    } catch (const Error&) {
      break;
    }
    A.backward.push_back(nearest(source, x));
    A.backward_min = std::min(A.backward_min, A.backward.back());
  }
  x = sol.target_state;
  for (int i = 0; i < K; ++i) {
    try {
      x = poincare_map(target.model, target.section, x, true, target.map_tol);
    } catch (const Error&) {
      break;
    }
    A.forward.push_back(nearest(target, x));
    A.forward_min = std::min(A.forward_min, A.forward.back());
  }
  return A;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Layer inner_layer(const ManifoldGrid& grid, double D) {
  Layer l;
  l.side = grid.kind == ManifoldKind::unstable ? LayerSide::unstable_source : LayerSide::stable_target;
  l.N = 0;
  l.s_hi = D;
  for (const GridPoint& p : grid.points)
    if (std::abs(p.s) <= D * (1.0 + 1e-12)) l.points.push_back(p);
  return l;
}

}  // namespace

std::vector<HeteroclinicSolution> find_connections(const ManifoldGrid& source_grid, const ManifoldSeries& source,
                                                   const ManifoldGrid& target_grid, const ManifoldSeries& target,
                                                   const HeteroOptions& opt, ScanReport* report) {
  if (source_grid.kind != ManifoldKind::unstable || target_grid.kind != ManifoldKind::stable)
    throw Error("find_connections: source must be an unstable grid and target a stable grid");
  ScanReport rep;
  std::vector<Layer> src = build_layers(source_grid, source.D, source.lambda, opt.N_max);
  std::vector<Layer> tgt = build_layers(target_grid, target.D, target.lambda, opt.N_max);
  src.push_back(inner_layer(source_grid, source.D));
  tgt.push_back(inner_layer(target_grid, target.D));
  auto select = [](const std::vector<Layer>& layers, int N) {
    std::vector<const Layer*> out;
    for (const Layer& l : layers)
      if (l.N == N) out.push_back(&l);
    return out;
  };
  auto pairs = candidate_pairs(opt.N_max);
  if (opt.include_zero_pair) pairs.insert(pairs.begin(), {0, 0});
  std::vector<SegmentHit> hits;
  std::set<std::tuple<int, int, double, double, double, double>> seen;
  for (const auto& [N, M] : pairs) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto h = scan_layer_pair(select(src, N), select(tgt, M), source.model, opt.bisection.projection);
    const double dt = seconds_since(t0);
    rep.scan_seconds += dt;
    rep.max_pair_seconds = std::max(rep.max_pair_seconds, dt);
    ++rep.pairs_scanned;
    for (const SegmentHit& x : h)
      if (seen.insert({x.k1, x.k2, x.s1_lo, x.s1_hi, x.s2_lo, x.s2_hi}).second) hits.push_back(x);
  }
  rep.hits = static_cast<int>(hits.size());
  if (static_cast<int>(hits.size()) > opt.max_refinements) hits.resize(opt.max_refinements);
  std::vector<std::optional<HeteroclinicSolution>> sols(hits.size());
  std::vector<double> times(hits.size(), 0.0);
  const auto t0 = std::chrono::steady_clock::now();
  parallel_for(hits.size(), [&](std::size_t i) {
    const auto ti = std::chrono::steady_clock::now();
    try {
      sols[i] = refine_bisection(hits[i], source, target, opt.bisection);
    } catch (const Error&) {
      sols[i].reset();
    }
    times[i] = seconds_since(ti);
  });
  rep.refine_seconds = seconds_since(t0);
  std::vector<HeteroclinicSolution> out;
  for (std::size_t i = 0; i < sols.size(); ++i) {
    rep.max_refine_seconds = std::max(rep.max_refine_seconds, times[i]);
    if (sols[i]) {
      out.push_back(*sols[i]);
      ++rep.refined;
    } else {
      ++rep.lost;
    }
  }
  std::sort(out.begin(), out.end(), [](const HeteroclinicSolution& a, const HeteroclinicSolution& b) {
    return std::tie(a.N, a.k1, a.s1) < std::tie(b.N, b.k1, b.s1);
  });
  if (report) *report = rep;
  return out;
}

}  // namespace mshoot
