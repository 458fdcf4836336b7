#include <filesystem>
#include <fstream>

#include "common.hpp"
#include "doctest.h"
#include "mshoot/config.hpp"
#include "mshoot/io.hpp"
#include "mshoot/plot.hpp"

using namespace mshoot;
using mshoot::testing::earth_moon_orbit;
using mshoot::testing::earth_moon_series;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path d = fs::temp_directory_path() / "mshoot_test_io";
  fs::create_directories(d);
  return d;
}

std::string write_text(const std::string& name, const std::string& body) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << body;
  return p.string();
}

const char* kBase = R"({
  // comment lines are allowed
  "model": { "name": "kepler", "mu": 0.0 },
  "resonance": { "m": 3, "n": 1, "interior": true },
  "jacobi": 3.05
})";

std::string config_error(const std::string& body, const std::vector<std::string>& overrides = {}) {
  try {
    load_config(write_text("bad.json", body), overrides);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool same_bits(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

}  // namespace

TEST_CASE("fnv1a_hex reference values") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("config: defaults, sweeps and overrides") {
  const RunConfig c = load_config(write_text("ok.json", kBase));
  CHECK(c.model.mu == 0.0);
  CHECK(c.jacobi == std::vector<double>{3.05});
  CHECK(c.degree == 20);
  CHECK(c.m_grid == 1000);
  CHECK(c.n_max == 8);
  CHECK(c.ode_abs == 1e-12);
  CHECK(c.series_tol == 1e-14);
  CHECK(c.hash.size() == 16);

  const RunConfig o = load_config(write_text("ok.json", kBase), {"jacobi={\"from\":3.04,\"to\":3.06,\"step\":0.01}",
                                                                 "grid.m_grid=50", "output_dir=here"});
  CHECK(o.jacobi.size() == 3);
  CHECK(std::abs(o.jacobi[2] - 3.06) <= 1e-15);
  CHECK(o.m_grid == 50);
  CHECK(o.output_dir == "here");
  CHECK(o.hash != c.hash);
  CHECK(load_config(write_text("ok.json", kBase)).hash == c.hash);

  const RunConfig gm = load_config(write_text("gm.json", R"({"model": {"gm_primary": 3, "gm_secondary": 1},
      "resonance": {"m": 3, "n": 1}, "jacobi": 3.05})"));
  CHECK(gm.model.mu == 0.25);
}

TEST_CASE("config errors name the offending key") {
  CHECK(config_error(kBase, {"degre=10"}).find("'degre'") != std::string::npos);
  CHECK(config_error(kBase, {"degree=3"}).find("'degree'") != std::string::npos);
  CHECK(config_error(kBase, {"tolerances.ode_abs=-1"}).find("'tolerances.ode_abs'") != std::string::npos);
  CHECK(config_error(kBase, {"tolerances.series=0"}).find("'tolerances.series'") != std::string::npos);
  CHECK(config_error(kBase, {"grid.n_max=0"}).find("'grid.n_max'") != std::string::npos);
  CHECK(config_error(kBase, {"resonance.m=\"three\""}).find("'resonance.m'") != std::string::npos);
  CHECK(config_error(kBase, {"section=node"}).find("'section'") != std::string::npos);
  CHECK(config_error(kBase, {"model.mu=0.7"}).find("'model.mu'") != std::string::npos);
  CHECK(config_error(kBase, {"hetero.projection=polar"}).find("'hetero.projection'") != std::string::npos);
  CHECK(config_error(R"({"model": {"mu": 0}, "resonance": {"m": 3, "n": 1}})").find("'jacobi'") != std::string::npos);
  CHECK(config_error(R"({"resonance": {"m": 3, "n": 1}, "jacobi": 3})").find("'model'") != std::string::npos);
  CHECK_FALSE(config_error("{ not json").empty());
  CHECK_THROWS_AS(load_config((scratch_dir() / "missing.json").string()), ConfigError);
}

TEST_CASE("orbit records round-trip exactly") {
  const PeriodicOrbitData& o = earth_moon_orbit(3).orbit;
  const Json j = orbit_to_json(o);
  const PeriodicOrbitData b = orbit_from_json(Json::parse(j.dump()));
  CHECK(b.model.mu == o.model.mu);
  CHECK(b.m == o.m);
  CHECK(b.T == o.T);
  CHECK(b.C == o.C);
  CHECK(b.x0 == o.x0);
  CHECK(b.X == o.X);
  CHECK(b.tau == o.tau);
  CHECK(b.t_k == o.t_k);
  CHECK(b.lambda_u_tilde == o.lambda_u_tilde);
  CHECK(b.hyperbolic == o.hyperbolic);
  CHECK(b.doubled == o.doubled);
  REQUIRE(b.step_stm.size() == o.step_stm.size());
  for (size_t k = 0; k < o.step_stm.size(); ++k) CHECK(mshoot::testing::max_abs_diff(b.step_stm[k], o.step_stm[k]) == 0.0);
  CHECK(orbit_id(b) == orbit_id(o));
  CHECK(orbit_id(o).find("3-1") != std::string::npos);
}

TEST_CASE("series, grid CSV and solutions round-trip") {
  const ManifoldSeries& S = earth_moon_series(3, ManifoldKind::stable);
  const ManifoldSeries T = series_from_json(Json::parse(series_to_json(S).dump()));
  CHECK(T.kind == S.kind);
  CHECK(T.coeffs == S.coeffs);
  CHECK(T.tau == S.tau);
  CHECK(T.lambda == S.lambda);
  CHECK(T.D == S.D);
  CHECK(T.C == S.C);
  CHECK(T.section == S.section);
  CHECK(eval_Wp(T, 1, 0.4 * S.D) == eval_Wp(S, 1, 0.4 * S.D));

  ManifoldGrid G = globalize(S, 6, 2);
  G.points[3].valid = false;
  G.points[3].state = {NAN, NAN, NAN, NAN};
  const std::string csv = (scratch_dir() / "grid.csv").string();
  write_grid_csv(csv, G, "0123456789abcdef");
  const GridFile back = read_grid_csv(csv);
  CHECK(back.config_hash == "0123456789abcdef");
  CHECK(back.grid.model.mu == S.model.mu);
  REQUIRE(back.grid.points.size() == G.points.size());
  for (size_t i = 0; i < G.points.size(); ++i) {
    const GridPoint &p = G.points[i], &q = back.grid.points[i];
    CHECK(p.k == q.k);
    CHECK(p.s == q.s);
    CHECK(p.N == q.N);
    CHECK(p.valid == q.valid);
    for (int c = 0; c < 4; ++c) CHECK(same_bits(p.state[c], q.state[c]));
  }

  HeteroclinicSolution sol;
  sol.k1 = 1;
  sol.k2 = 2;
  sol.s1 = 0.1234567890123456;
  sol.s2 = -3.2e-3;
  sol.state = {0.1, 0.2, 0.3, 1.0 / 3.0};
  sol.target_state = {0.1, 0.2, 0.3, 0.3333333333333};
  sol.residual = 2.5e-11;
  sol.N = 4;
  sol.M = 3;
  const HeteroclinicSolution r = solution_from_json(Json::parse(solution_to_json(sol).dump()));
  CHECK(r.k1 == 1);
  CHECK(r.k2 == 2);
  CHECK(r.s1 == sol.s1);
  CHECK(r.s2 == sol.s2);
  CHECK(r.state == sol.state);
  CHECK(r.residual == sol.residual);
  CHECK(r.N == 4);
  CHECK(r.M == 3);
  const Json js = solution_to_json(sol);
  CHECK(js.at("maps_to_target").get<int>() == 7);
}

TEST_CASE("render_svg produces a self-contained figure") {
  std::vector<GridPoint> pts;
  for (int i = 0; i < 20; ++i) pts.push_back({0, 0.01 * (i + 1), 0, Vec4{0.5 + 0.01 * i, 0.02 * i, 0, 1.2}, true});
  pts[7].valid = false;
  const std::string svg = render_svg(SystemModel{0.01, ""}, Projection::xy, {{"demo", pts}}, {Vec4{0.6, 0.1, 0, 1.2}}, "t");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  // The invalid point splits the polyline in two.
  std::size_t paths = 0;
  for (auto at = svg.find("<path"); at != std::string::npos; at = svg.find("<path", at + 1)) ++paths;
  CHECK(paths == 2);
  CHECK(svg.find("circle") != std::string::npos);
  CHECK(svg.find("nan") == std::string::npos);
  const std::string lg = render_svg(SystemModel{0.01, ""}, Projection::Lg, {{"demo", pts}}, {});
  CHECK(lg.find("</svg>") != std::string::npos);
}
