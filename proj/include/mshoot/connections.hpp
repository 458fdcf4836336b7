#pragma once

// Heteroclinic search between an unstable manifold grid (source) and a
// stable manifold grid (target): layer decomposition, projected segment
// intersection scan and bisection refinement.

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "mshoot/manifolds.hpp"

namespace mshoot {

using Vec2 = std::array<double, 2>;

enum class LayerSide { unstable_source, stable_target };
enum class Half { positive, negative };

enum class Projection { xy, Lg };
Projection parse_projection(const std::string& name);
Vec2 project(const SystemModel& model, Projection p, const Vec4& state);

struct Layer {
  LayerSide side = LayerSide::unstable_source;
  int N = 0;
  Half half = Half::positive;
  double s_lo = 0.0;  // |s| range
  double s_hi = 0.0;
  std::vector<GridPoint> points;  // sorted by (k, s)
};

/// Half-layers N = 1..N_max with |s| in [D L^(N-1), D L^N], L = lambda for
/// unstable grids and 1/lambda for stable ones. Boundary points go to both
/// adjacent layers.
std::vector<Layer> build_layers(const ManifoldGrid& grid, double D, double lambda, int N_max);

/// (N, N) and (N, N-1) for N = 1..N_max, without (1, 0).
std::vector<std::pair<int, int>> candidate_pairs(int N_max);

struct SegmentIntersection {
  double a = 0.0;
  double b = 0.0;
  Vec2 point{};
};

/// x1 + (x2 - x1) a = y1 + (y2 - y1) b with a, b in [0, 1].
std::optional<SegmentIntersection> segment_intersect(const Vec2& x1, const Vec2& x2, const Vec2& y1, const Vec2& y2);

struct Segment {
  int k = 0;
  double s_lo = 0.0;  // parameter at p1
  double s_hi = 0.0;  // parameter at p2
  Vec2 p1{}, p2{};
};

/// Consecutive-point segments per (k, half) in increasing s, with invalid
/// endpoints and discontinuities (length above `factor` times the median of
/// the previous `window` accepted lengths) removed.
std::vector<Segment> polyline_segments(const std::vector<GridPoint>& points, const SystemModel& model, Projection p,
                                       double factor = 10.0, int window = 20);

struct SegmentHit {
  int k1 = 0, k2 = 0;
  double s1_lo = 0.0, s1_hi = 0.0, s2_lo = 0.0, s2_hi = 0.0;
  Vec2 point{};
  double a = 0.0, b = 0.0;
  int N = 0, M = 0;  // layer indices
};

/// Blocked, parallel all-pairs scan using the active SIMD kernel.
std::vector<SegmentHit> scan_segments(const std::vector<Segment>& source, const std::vector<Segment>& target);
/// Reference double loop over segment_intersect.
std::vector<SegmentHit> scan_segments_brute(const std::vector<Segment>& source, const std::vector<Segment>& target);
/// Layer-level wrapper tagging hits with the layer indices.
std::vector<SegmentHit> scan_layer_pair(const std::vector<const Layer*>& source, const std::vector<const Layer*>& target,
                                        const SystemModel& model, Projection p);

struct HeteroclinicSolution {
  int k1 = 0, k2 = 0;
  double s1 = 0.0, s2 = 0.0;
  Vec4 state{};         // source-side evaluation
  Vec4 target_state{};  // target-side evaluation
  double residual = 0.0;
  int N = 0, M = 0;
  int iterations = 0;
};

class LostIntersection : public Error {
 public:
  using Error::Error;
};

struct BisectionOptions {
  double tol_s = 1e-12;         // relative bracket width
  double tol_residual = 1e-9;
  int max_iterations = 200;
  Projection projection = Projection::xy;
};

HeteroclinicSolution refine_bisection(const SegmentHit& hit, const ManifoldSeries& source,
                                      const ManifoldSeries& target, const BisectionOptions& opt = {});

/// Smallest distance to the orbit's section points over K backward maps of the
/// source state and K forward maps of the target state.
struct Asymptotics {
  double backward_min = INFINITY;
  double forward_min = INFINITY;
  std::vector<double> backward;
  std::vector<double> forward;
};
Asymptotics connection_asymptotics(const HeteroclinicSolution& sol, const ManifoldSeries& source,
                                   const ManifoldSeries& target, int K = 20);

struct ScanReport {
  int pairs_scanned = 0;
  int hits = 0;
  int refined = 0;
  int lost = 0;
  double scan_seconds = 0.0;
  double refine_seconds = 0.0;
  double max_pair_seconds = 0.0;
  double max_refine_seconds = 0.0;
};

struct HeteroOptions {
  int N_max = 8;
  bool include_zero_pair = false;
  BisectionOptions bisection;
  int max_refinements = 1000;
};

/// Full pipeline over candidate layer pairs; solutions ordered by (N, k1, s1).
std::vector<HeteroclinicSolution> find_connections(const ManifoldGrid& source_grid, const ManifoldSeries& source,
                                                   const ManifoldGrid& target_grid, const ManifoldSeries& target,
                                                   const HeteroOptions& opt, ScanReport* report = nullptr);

}  // namespace mshoot
