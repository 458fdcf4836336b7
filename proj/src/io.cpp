#include "mshoot/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mshoot {

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string orbit_id(const PeriodicOrbitData& o) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s_%d-%d_C%.6f_%s", o.model.name.empty() ? "model" : o.model.name.c_str(),
                o.m_res, o.n_res, o.C, to_string(o.section));
  return buf;
}

namespace {

Json vec_json(const Vec4& v) { return Json::array({v[0], v[1], v[2], v[3]}); }

double num(const Json& j) {
  // NaN is written as null.
  return j.is_null() ? std::nan("") : j.get<double>();
}

Vec4 vec_from(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw Error("expected a 4-vector");
  return {num(j[0]), num(j[1]), num(j[2]), num(j[3])};
}

Json model_json(const SystemModel& m) { return Json{{"name", m.name}, {"mu", m.mu}}; }
SystemModel model_from(const Json& j) { return SystemModel{j.at("mu").get<double>(), j.value("name", "")}; }

}  // namespace

Json orbit_to_json(const PeriodicOrbitData& o) {
  Json j;
  j["id"] = orbit_id(o);
  j["model"] = model_json(o.model);
  j["mu"] = o.model.mu;
  j["section"] = to_string(o.section);
  j["resonance"] = {o.m_res, o.n_res};
  j["C"] = o.C;
  j["T"] = o.T;
  j["m"] = o.m;
  j["doubled"] = o.doubled;
  j["x0"] = vec_json(o.x0);
  Json X = Json::array();
  for (const auto& x : o.X) X.push_back(vec_json(x));
  j["X"] = X;
  j["t_k"] = o.t_k;
  j["tau"] = o.tau;
  j["lambda_u_tilde"] = o.lambda_u_tilde;
  j["hyperbolic"] = o.hyperbolic;
  j["newton_iterations"] = o.newton_iterations;
  j["newton_residual"] = o.newton_residual;
  Json stm = Json::array();
  for (const auto& M : o.step_stm) stm.push_back(M.a);
  j["step_stm"] = stm;
  return j;
}

PeriodicOrbitData orbit_from_json(const Json& j) {
  PeriodicOrbitData o;
  o.model = model_from(j.at("model"));
  o.model.validate();
  o.section = parse_section_kind(j.at("section").get<std::string>());
  const auto res = j.at("resonance");
  o.m_res = res.at(0).get<int>();
  o.n_res = res.at(1).get<int>();
  o.C = j.at("C").get<double>();
  o.T = j.at("T").get<double>();
  o.m = j.at("m").get<int>();
  o.doubled = j.value("doubled", false);
  o.x0 = vec_from(j.at("x0"));
  for (const auto& x : j.at("X")) o.X.push_back(vec_from(x));
  o.t_k = j.at("t_k").get<std::vector<double>>();
  o.tau = j.at("tau").get<std::vector<double>>();
  o.lambda_u_tilde = j.at("lambda_u_tilde").get<double>();
  o.hyperbolic = j.at("hyperbolic").get<bool>();
  o.newton_iterations = j.value("newton_iterations", 0);
  o.newton_residual = j.value("newton_residual", 0.0);
  for (const auto& s : j.at("step_stm")) {
    Mat4 M;
    M.a = s.get<std::array<double, 16>>();
    o.step_stm.push_back(M);
  }
  if (static_cast<int>(o.X.size()) != o.m || static_cast<int>(o.tau.size()) != o.m ||
      static_cast<int>(o.step_stm.size()) != o.m)
    throw Error("orbit record: X, tau and step_stm must have m entries");
  o.monodromy = cyclic_monodromies(o.step_stm);
  return o;
}

Json series_to_json(const ManifoldSeries& S) {
  Json j;
  j["orbit_id"] = S.orbit_id;
  j["kind"] = to_string(S.kind);
  j["degree"] = S.degree;
  j["lambda"] = S.lambda;
  j["alpha"] = S.scale;
  j["D"] = S.D;
  j["E_tol"] = S.E_tol;
  j["bracket_limited"] = S.bracket_limited;
  j["model"] = model_json(S.model);
  j["section"] = to_string(S.section);
  j["C"] = S.C;
  j["tau"] = S.tau;
  j["ode_tol"] = {S.ode.abs, S.ode.rel};
  j["map_tol"] = {S.map_tol.abs, S.map_tol.rel};
  j["energy_correction"] = S.energy_correction;
  j["jacobi_guard"] = S.jacobi_guard;
  Json coeffs = Json::array();
  for (const auto& Wk : S.coeffs) {
    Json row = Json::array();
    for (const auto& w : Wk) row.push_back(vec_json(w));
    coeffs.push_back(row);
  }
  j["coefficients"] = coeffs;
  return j;
}

ManifoldSeries series_from_json(const Json& j) {
  ManifoldSeries S;
  S.orbit_id = j.value("orbit_id", "");
  S.kind = parse_manifold_kind(j.at("kind").get<std::string>());
  S.degree = j.at("degree").get<int>();
  S.lambda = j.at("lambda").get<double>();
  S.scale = j.at("alpha").get<double>();
  S.D = j.at("D").get<double>();
  S.E_tol = j.at("E_tol").get<double>();
  S.bracket_limited = j.value("bracket_limited", false);
  S.model = model_from(j.at("model"));
  S.section = parse_section_kind(j.at("section").get<std::string>());
  S.C = j.at("C").get<double>();
  S.tau = j.at("tau").get<std::vector<double>>();
  const auto ot = j.at("ode_tol"), mt = j.at("map_tol");
  S.ode = {ot.at(0).get<double>(), ot.at(1).get<double>()};
  S.map_tol = {mt.at(0).get<double>(), mt.at(1).get<double>()};
  S.energy_correction = j.value("energy_correction", true);
  S.jacobi_guard = j.value("jacobi_guard", 1e-10);
  for (const auto& row : j.at("coefficients")) {
    std::vector<Vec4> Wk;
    for (const auto& w : row) Wk.push_back(vec_from(w));
    if (static_cast<int>(Wk.size()) != S.degree + 1) throw Error("manifest: coefficient count does not match degree");
    S.coeffs.push_back(std::move(Wk));
  }
  if (S.coeffs.size() != S.tau.size()) throw Error("manifest: coefficients and tau disagree on m");
  return S;
}

void write_grid_csv(const std::string& path, const ManifoldGrid& grid, const std::string& config_hash) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot write " + path);
  std::fprintf(f, "# config_hash=%s mu=%.17g kind=%s C=%.17g\n", config_hash.c_str(), grid.model.mu,
               to_string(grid.kind), grid.C);
  std::fprintf(f, "k,s,N,x,y,px,py,L,G,ell,g,valid\n");
  for (const GridPoint& p : grid.points) {
    DelaunayCoords d{NAN, NAN, NAN, NAN};
    if (p.valid) {
      try {
        d = delaunay(grid.model, p.state);
        d.g = wrap_angle(d.g);
        d.ell = wrap_angle(d.ell);
      } catch (const Error&) {
        d = {NAN, NAN, NAN, NAN};
      }
    }
    std::fprintf(f, "%d,%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", p.k, p.s, p.N, p.state[0],
                 p.state[1], p.state[2], p.state[3], d.L, d.G, d.ell, d.g, p.valid ? 1 : 0);
  }
  if (std::fclose(f) != 0) throw Error("write failed: " + path);
}

GridFile read_grid_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  GridFile out;
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string kv;
      while (ss >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
        if (k == "config_hash") out.config_hash = v;
        else if (k == "mu") out.grid.model.mu = std::stod(v);
        else if (k == "kind") out.grid.kind = parse_manifold_kind(v);
        else if (k == "C") out.grid.C = std::stod(v);
      }
      continue;
    }
    if (!header) {
      if (line != "k,s,N,x,y,px,py,L,G,ell,g,valid") throw Error(path + ": unexpected CSV header");
      header = true;
      continue;
    }
    GridPoint p;
    // strtod keeps nan / inf round trips.
    std::istringstream ss(line);
    std::string tok;
    std::vector<std::string> f;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() != 12) throw Error(path + ": line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields");
    auto d = [&](int i) { return std::strtod(f[i].c_str(), nullptr); };
    p.k = std::stoi(f[0]);
    p.s = d(1);
    p.N = std::stoi(f[2]);
    p.state = {d(3), d(4), d(5), d(6)};
    p.valid = std::stoi(f[11]) != 0;
    out.grid.points.push_back(p);
  }
  if (!header) throw Error(path + ": missing CSV header");
  return out;
}

Json solution_to_json(const HeteroclinicSolution& s) {
  return Json{{"k1", s.k1},
              {"s1", s.s1},
              {"k2", s.k2},
              {"s2", s.s2},
              {"state", vec_json(s.state)},
              {"target_state", vec_json(s.target_state)},
              {"residual", s.residual},
              {"layers", {s.N, s.M}},
              {"maps_to_target", s.N + s.M},
              {"iterations", s.iterations}};
}

HeteroclinicSolution solution_from_json(const Json& j) {
  HeteroclinicSolution s;
  s.k1 = j.at("k1").get<int>();
  s.s1 = j.at("s1").get<double>();
  s.k2 = j.at("k2").get<int>();
  s.s2 = j.at("s2").get<double>();
  s.state = vec_from(j.at("state"));
  s.target_state = j.contains("target_state") ? vec_from(j.at("target_state")) : s.state;
  s.residual = j.at("residual").get<double>();
  s.N = j.at("layers").at(0).get<int>();
  s.M = j.at("layers").at(1).get<int>();
  s.iterations = j.value("iterations", 0);
  return s;
}

Json report_to_json(const ScanReport& r) {
  return Json{{"layer_pairs_scanned", r.pairs_scanned}, {"hits", r.hits},
              {"refined", r.refined},                   {"lost", r.lost},
              {"scan_seconds", r.scan_seconds},         {"refine_seconds", r.refine_seconds},
              {"max_pair_seconds", r.max_pair_seconds}, {"max_refine_seconds", r.max_refine_seconds}};
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed: " + path);
}

}  // namespace mshoot
