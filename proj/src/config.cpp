#include "mshoot/config.hpp"

#include <cmath>
#include <set>

namespace mshoot {

namespace {

void check_keys(const Json& obj, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + (where.empty() ? k : where + "." + k) + "'");
}

const Json& object_at(const Json& doc, const std::string& key, const std::string& path) {
  if (!doc.contains(key)) throw ConfigError("missing key '" + path + "'");
  const Json& v = doc.at(key);
  if (!v.is_object()) throw ConfigError("key '" + path + "' must be an object");
  return v;
}

double number(const Json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError("key '" + path + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError("key '" + path + "' must be finite");
  return x;
}

double positive(const Json& v, const std::string& path) {
  const double x = number(v, path);
  if (!(x > 0.0)) throw ConfigError("key '" + path + "' must be positive");
  return x;
}

int integer(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError("key '" + path + "' must be an integer");
  return v.get<int>();
}

std::string text(const Json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError("key '" + path + "' must be a string");
  return v.get<std::string>();
}

bool boolean(const Json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError("key '" + path + "' must be true or false");
  return v.get<bool>();
}

}  // namespace

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq), value = assignment.substr(eq + 1);
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override key '" + path + "' is malformed");
    if (dot == std::string::npos) {
      Json parsed = Json::parse(value, nullptr, false);
      (*node)[key] = parsed.is_discarded() ? Json(value) : parsed;
      return;
    }
    if (!node->contains(key) || !(*node)[key].is_object()) (*node)[key] = Json::object();
    node = &(*node)[key];
    start = dot + 1;
  }
}

RunConfig parse_config(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  check_keys(doc, "",
             {"model", "section", "resonance", "jacobi", "degree", "e_tol", "scale", "grid", "tolerances",
              "hetero", "output_dir"});
  RunConfig c;

  const Json& model = object_at(doc, "model", "model");
  check_keys(model, "model", {"name", "mu", "gm_primary", "gm_secondary"});
  c.model.name = model.contains("name") ? text(model.at("name"), "model.name") : "model";
  if (model.contains("mu")) {
    if (model.contains("gm_primary") || model.contains("gm_secondary"))
      throw ConfigError("key 'model.mu' conflicts with model.gm_primary / model.gm_secondary");
    c.model.mu = number(model.at("mu"), "model.mu");
  } else if (model.contains("gm_primary") && model.contains("gm_secondary")) {
    c.model.mu = mass_ratio(positive(model.at("gm_primary"), "model.gm_primary"),
                            positive(model.at("gm_secondary"), "model.gm_secondary"));
  } else {
    throw ConfigError("missing key 'model.mu' (or model.gm_primary and model.gm_secondary)");
  }
  if (!(c.model.mu >= 0.0 && c.model.mu < 0.5)) throw ConfigError("key 'model.mu' must lie in [0, 0.5)");

  if (doc.contains("section")) {
    const std::string s = text(doc.at("section"), "section");
    if (s != "periapse" && s != "apoapse") throw ConfigError("key 'section' must be periapse or apoapse");
    c.section = parse_section_kind(s);
  }

  const Json& res = object_at(doc, "resonance", "resonance");
  check_keys(res, "resonance", {"m", "n", "interior"});
  if (!res.contains("m") || !res.contains("n")) throw ConfigError("missing key 'resonance.m' or 'resonance.n'");
  c.m_res = integer(res.at("m"), "resonance.m");
  c.n_res = integer(res.at("n"), "resonance.n");
  if (c.m_res < 1 || c.n_res < 1) throw ConfigError("key 'resonance' needs positive m and n");
  if (res.contains("interior")) c.interior = boolean(res.at("interior"), "resonance.interior");

  if (!doc.contains("jacobi")) throw ConfigError("missing key 'jacobi'");
  const Json& jc = doc.at("jacobi");
  if (jc.is_number()) {
    c.jacobi.push_back(number(jc, "jacobi"));
  } else if (jc.is_object()) {
    check_keys(jc, "jacobi", {"from", "to", "step"});
    if (!jc.contains("from") || !jc.contains("to") || !jc.contains("step"))
      throw ConfigError("key 'jacobi' sweep needs from, to and step");
    const double from = number(jc.at("from"), "jacobi.from"), to = number(jc.at("to"), "jacobi.to");
    const double step = number(jc.at("step"), "jacobi.step");
    if (step == 0.0 || (to - from) * step < 0.0) throw ConfigError("key 'jacobi.step' does not reach jacobi.to");
    const long n = std::lround(std::floor((to - from) / step + 1e-9));
    if (n > 10000) throw ConfigError("key 'jacobi' sweep has too many values");
    for (long i = 0; i <= n; ++i) c.jacobi.push_back(from + static_cast<double>(i) * step);
  } else {
    throw ConfigError("key 'jacobi' must be a number or {from, to, step}");
  }

  if (doc.contains("degree")) c.degree = integer(doc.at("degree"), "degree");
  if (c.degree < 5 || c.degree > 40) throw ConfigError("key 'degree' must lie in [5, 40]");
  if (doc.contains("e_tol")) c.e_tol = positive(doc.at("e_tol"), "e_tol");
  if (doc.contains("scale")) c.scale = positive(doc.at("scale"), "scale");

  if (doc.contains("grid")) {
    const Json& g = object_at(doc, "grid", "grid");
    check_keys(g, "grid", {"m_grid", "n_max"});
    if (g.contains("m_grid")) c.m_grid = integer(g.at("m_grid"), "grid.m_grid");
    if (g.contains("n_max")) c.n_max = integer(g.at("n_max"), "grid.n_max");
    if (c.m_grid < 2) throw ConfigError("key 'grid.m_grid' must be at least 2");
    if (c.n_max < 1) throw ConfigError("key 'grid.n_max' must be at least 1");
  }

  if (doc.contains("tolerances")) {
    const Json& t = object_at(doc, "tolerances", "tolerances");
    check_keys(t, "tolerances", {"ode_abs", "ode_rel", "series", "newton", "bisection", "residual"});
    if (t.contains("ode_abs")) c.ode_abs = positive(t.at("ode_abs"), "tolerances.ode_abs");
    if (t.contains("ode_rel")) c.ode_rel = positive(t.at("ode_rel"), "tolerances.ode_rel");
    if (t.contains("series")) c.series_tol = positive(t.at("series"), "tolerances.series");
    if (t.contains("newton")) c.newton = positive(t.at("newton"), "tolerances.newton");
    if (t.contains("bisection")) c.bisection = positive(t.at("bisection"), "tolerances.bisection");
    if (t.contains("residual")) c.residual = positive(t.at("residual"), "tolerances.residual");
  }

  if (doc.contains("hetero")) {
    const Json& h = object_at(doc, "hetero", "hetero");
    check_keys(h, "hetero", {"projection", "include_zero_pair"});
    if (h.contains("projection")) {
      try {
        c.projection = parse_projection(text(h.at("projection"), "hetero.projection"));
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw ConfigError("key 'hetero.projection': " + std::string(e.what()));
      }
    }
    if (h.contains("include_zero_pair"))
      c.include_zero_pair = boolean(h.at("include_zero_pair"), "hetero.include_zero_pair");
  }

  if (doc.contains("output_dir")) c.output_dir = text(doc.at("output_dir"), "output_dir");

  c.source = doc;
  c.hash = fnv1a_hex(doc.dump());
  return c;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  Json doc;
  try {
    doc = read_json_file(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_config(doc);
}

}  // namespace mshoot
