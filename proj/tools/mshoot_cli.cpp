// Command-line front end: orbit, manifold, hetero and plot subcommands.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "mshoot/config.hpp"
#include "mshoot/connections.hpp"
#include "mshoot/frames.hpp"
#include "mshoot/io.hpp"
#include "mshoot/plot.hpp"

namespace fs = std::filesystem;
using namespace mshoot;

namespace {

/// Exit statuses: 1 = bad input or config, 2 = refused, 3 = numerical failure.
struct Refusal : Error {
  using Error::Error;
};

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path ensure_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error("cannot create output directory " + dir + ": " + ec.message());
  return p;
}

struct Common {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
};

RunConfig load(const Common& c) {
  RunConfig cfg = load_config(c.config, c.overrides);
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

int cmd_orbit(const Common& c) {
  const RunConfig cfg = load(c);
  const fs::path dir = ensure_dir(cfg.output_dir);
  ContinuationOptions opt;
  opt.refine.newton_tol = cfg.newton;
  Json records = Json::array();
  for (double C : cfg.jacobi) {
    const auto t0 = std::chrono::steady_clock::now();
    PeriodicOrbitData o;
    try {
      o = resonant_orbit(cfg.model, cfg.m_res, cfg.n_res, cfg.interior, C, cfg.section, opt);
    } catch (const Error& e) {
      throw ConvergenceError(std::string("orbit at C=") + std::to_string(C) + ": " + e.what(), INFINITY);
    }
    std::printf("%s  T=%.12g m=%d lambda_u=%.6g hyperbolic=%s (%.2fs)\n", orbit_id(o).c_str(), o.T, o.m,
                o.lambda_u_tilde, o.hyperbolic ? "yes" : "no", since(t0));
    records.push_back(orbit_to_json(o));
  }
  Json doc;
  doc["config_hash"] = cfg.hash;
  doc["orbits"] = records;
  const fs::path path = dir / "orbits.json";
  write_json_file(path.string(), doc);
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

int cmd_manifold(const Common& c, const std::string& orbit_file, int index, const std::string& kind_name) {
  const RunConfig cfg = load(c);
  const ManifoldKind kind = parse_manifold_kind(kind_name);
  const Json doc = read_json_file(orbit_file);
  const Json& list = doc.contains("orbits") ? doc.at("orbits") : doc;
  if (!list.is_array() || index < 0 || index >= static_cast<int>(list.size()))
    throw Error(orbit_file + ": no orbit record at index " + std::to_string(index));
  PeriodicOrbitData orbit = orbit_from_json(list.at(index));
  if (!orbit.hyperbolic)
    throw Refusal("orbit " + orbit_id(orbit) + " is not hyperbolic; no stable/unstable manifolds to compute");
  const fs::path dir = ensure_dir(cfg.output_dir);

  const auto t0 = std::chrono::steady_clock::now();
  const Tolerances series_ode{cfg.series_tol, cfg.series_tol};
  const FloquetData fl = floquet_decomposition(orbit);
  const AdaptedFrame frame = build_adapted_frame(orbit, rescale_eigenvectors(fl));
  const double alpha = cfg.scale ? *cfg.scale : choose_scale(frame, orbit, kind, 8, series_ode);
  ManifoldSeries S = compute_parameterization(frame, orbit, kind, cfg.degree, alpha, series_ode);
  S.orbit_id = orbit_id(orbit);
  const double t_series = since(t0);
  const auto t1 = std::chrono::steady_clock::now();
  fundamental_domain(S, cfg.e_tol);
  ManifoldSeries S1 = S.truncated(1);
  fundamental_domain(S1, cfg.e_tol);
  const double t_domain = since(t1);
  const auto t2 = std::chrono::steady_clock::now();
  const ManifoldGrid grid = globalize(S, cfg.m_grid, cfg.n_max);
  const double t_glob = since(t2);

  const std::string stem = S.orbit_id + "_" + to_string(kind);
  const fs::path csv = dir / (stem + ".csv");
  write_grid_csv(csv.string(), grid, cfg.hash);
  std::size_t invalid = 0;
  for (const auto& p : grid.points) invalid += p.valid ? 0 : 1;

  Json man;
  man["config_hash"] = cfg.hash;
  man["orbit_id"] = S.orbit_id;
  man["kind"] = to_string(kind);
  man["degree"] = S.degree;
  man["lambda"] = S.lambda;
  man["alpha"] = S.scale;
  man["D"] = S.D;
  man["D1"] = S1.D;
  man["ratio"] = S1.D > 0 ? S.D / S1.D : INFINITY;
  man["E_tol"] = S.E_tol;
  man["M_grid"] = cfg.m_grid;
  man["N_max"] = cfg.n_max;
  man["points"] = grid.points.size();
  man["invalid_points"] = invalid;
  man["grid_csv"] = csv.filename().string();
  man["timing"] = {{"frame_and_series", t_series}, {"fundamental_domain", t_domain}, {"globalization", t_glob}};
  man["series"] = series_to_json(S);
  const fs::path json = dir / (stem + ".json");
  write_json_file(json.string(), man);
  std::printf("%s: lambda=%.8g alpha=%.6g D=%.6g D1=%.6g ratio=%.4g points=%zu invalid=%zu (%.2fs + %.2fs + %.2fs)\n",
              stem.c_str(), S.lambda, S.scale, S.D, S1.D, S1.D > 0 ? S.D / S1.D : INFINITY, grid.points.size(),
              invalid, t_series, t_domain, t_glob);
  std::printf("wrote %s and %s\n", csv.string().c_str(), json.string().c_str());
  return 0;
}

struct LoadedManifold {
  ManifoldSeries series;
  ManifoldGrid grid;
  std::string manifest;
};

LoadedManifold load_manifold(const std::string& path) {
  fs::path manifest(path);
  if (manifest.extension() == ".csv") manifest.replace_extension(".json");
  const Json man = read_json_file(manifest.string());
  LoadedManifold L;
  L.manifest = manifest.string();
  L.series = series_from_json(man.at("series"));
  const fs::path csv = manifest.parent_path() / man.at("grid_csv").get<std::string>();
  GridFile gf = read_grid_csv(csv.string());
  L.grid = std::move(gf.grid);
  L.grid.kind = L.series.kind;
  L.grid.section = L.series.section;
  L.grid.series_id = L.series.orbit_id;
  L.grid.model = L.series.model;
  L.grid.m = L.series.m();
  L.grid.D = L.series.D;
  L.grid.lambda = L.series.lambda;
  L.grid.C = L.series.C;
  L.grid.M_grid = man.value("M_grid", 0);
  L.grid.N_max = man.value("N_max", 0);
  return L;
}

int cmd_hetero(const Common& c, const std::string& src_path, const std::string& tgt_path) {
  const RunConfig cfg = load(c);
  const LoadedManifold src = load_manifold(src_path), tgt = load_manifold(tgt_path);
  if (src.series.kind != ManifoldKind::unstable) throw Refusal("source " + src.manifest + " is not an unstable manifold");
  if (tgt.series.kind != ManifoldKind::stable) throw Refusal("target " + tgt.manifest + " is not a stable manifold");
  if (src.series.model.mu != tgt.series.model.mu) throw Refusal("source and target use different mass ratios");
  if (src.series.section != tgt.series.section) throw Refusal("source and target use different sections");
  const double dC = std::abs(src.series.C - tgt.series.C);
  if (dC > 1e-9) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "Jacobi constants differ by %.3g (source %.12g, target %.12g)", dC,
                  src.series.C, tgt.series.C);
    throw Refusal(buf);
  }
  const fs::path dir = ensure_dir(cfg.output_dir);
  HeteroOptions opt;
  opt.N_max = std::min(src.grid.N_max, tgt.grid.N_max);
  if (opt.N_max < 1) opt.N_max = cfg.n_max;
  opt.include_zero_pair = cfg.include_zero_pair;
  opt.bisection.tol_s = cfg.bisection;
  opt.bisection.tol_residual = cfg.residual;
  opt.bisection.projection = cfg.projection;
  ScanReport rep;
  const auto sols = find_connections(src.grid, src.series, tgt.grid, tgt.series, opt, &rep);
  Json list = Json::array();
  for (const auto& s : sols) {
    Json j = solution_to_json(s);
    const Asymptotics A = connection_asymptotics(s, src.series, tgt.series, 20);
    j["asymptotics"] = {{"backward_min", A.backward_min}, {"forward_min", A.forward_min}};
    list.push_back(j);
  }
  Json doc;
  doc["config_hash"] = cfg.hash;
  doc["source"] = src.series.orbit_id + "_" + to_string(src.series.kind);
  doc["target"] = tgt.series.orbit_id + "_" + to_string(tgt.series.kind);
  doc["model"] = {{"name", src.series.model.name}, {"mu", src.series.model.mu}};
  doc["C"] = src.series.C;
  doc["report"] = report_to_json(rep);
  doc["solutions"] = list;
  const fs::path path = dir / "solutions.json";
  write_json_file(path.string(), doc);
  std::printf("pairs=%d hits=%d refined=%d lost=%d solutions=%zu (scan %.3fs, refine %.3fs)\n", rep.pairs_scanned,
              rep.hits, rep.refined, rep.lost, sols.size(), rep.scan_seconds, rep.refine_seconds);
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

int cmd_plot(const std::vector<std::string>& grids, const std::string& solutions, const std::string& coords_name,
             const std::string& out) {
  const Projection coords = parse_projection(coords_name);
  if (grids.empty() && solutions.empty()) throw Error("plot: nothing to draw (use --grid or --solutions)");
  std::vector<PlotSeries> series;
  SystemModel model;
  bool have_model = false;
  std::string hash;
  for (const auto& g : grids) {
    GridFile gf = read_grid_csv(g);
    if (have_model && gf.grid.model.mu != model.mu) throw Error("plot: grids use different mass ratios");
    model.mu = gf.grid.model.mu;
    have_model = true;
    hash = gf.config_hash;
    series.push_back({fs::path(g).stem().string(), std::move(gf.grid.points)});
  }
  std::vector<Vec4> marks;
  if (!solutions.empty()) {
    const Json doc = read_json_file(solutions);
    if (!have_model) model.mu = doc.at("model").at("mu").get<double>();
    if (hash.empty()) hash = doc.value("config_hash", "");
    for (const auto& s : doc.at("solutions")) marks.push_back(solution_from_json(s).state);
  }
  const std::string svg = render_svg(model, coords, series, marks, hash.empty() ? "" : "config " + hash);
  fs::path path(out);
  if (path.extension() != ".svg") path = ensure_dir(out) / (std::string("plot_") + coords_name + ".svg");
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << svg;
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Manifolds and heteroclinic connections of resonant periodic orbits in the PCRTBP"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Run configuration (JSON, comments allowed)")->required();
    sub->add_option("--out", common.out, "Output directory (overrides output_dir)");
    sub->add_option("--set", common.overrides, "Override a config key: path.to.key=value");
  };
  auto* orbit = app.add_subcommand("orbit", "Refine resonant periodic orbits for each configured Jacobi constant");
  add_common(orbit);

  auto* manifold = app.add_subcommand("manifold", "Parameterize and globalize a stable or unstable manifold");
  add_common(manifold);
  std::string orbit_file, kind = "unstable";
  int index = 0;
  manifold->add_option("--orbit", orbit_file, "orbits.json written by the orbit command")->required();
  manifold->add_option("--index", index, "Record index inside the orbit file");
  manifold->add_option("--kind", kind, "stable or unstable")->check(CLI::IsMember({"stable", "unstable"}));

  auto* hetero = app.add_subcommand("hetero", "Search connections from an unstable to a stable manifold");
  add_common(hetero);
  std::string source, target;
  hetero->add_option("--source", source, "Unstable manifold manifest (.json) or grid (.csv)")->required();
  hetero->add_option("--target", target, "Stable manifold manifest (.json) or grid (.csv)")->required();

  auto* plot = app.add_subcommand("plot", "Draw grids and solutions as SVG");
  std::vector<std::string> grids;
  std::string sol_file, coords = "Lg", plot_out = ".";
  plot->add_option("--grid", grids, "Grid CSV (repeatable)");
  plot->add_option("--solutions", sol_file, "solutions.json from the hetero command");
  plot->add_option("--coords", coords, "xy or Lg");
  plot->add_option("--out", plot_out, "Output .svg file or directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*orbit) return cmd_orbit(common);
    if (*manifold) return cmd_manifold(common, orbit_file, index, kind);
    if (*hetero) return cmd_hetero(common, source, target);
    if (*plot) return cmd_plot(grids, sol_file, coords, plot_out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const Refusal& e) {
    std::fprintf(stderr, "refused: %s\n", e.what());
    return 2;
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
