#pragma once

// Run configuration: a JSON document (comments allowed) with CLI overrides.

#include <optional>
#include <string>
#include <vector>

#include "mshoot/io.hpp"

namespace mshoot {

/// Malformed or out-of-range configuration; the message names the key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  SystemModel model;
  SectionKind section = SectionKind::periapse;
  int m_res = 3;
  int n_res = 1;
  bool interior = true;
  std::vector<double> jacobi;  // one value per orbit
  int degree = 20;
  double e_tol = 1e-6;
  std::optional<double> scale;  // alpha override
  int m_grid = 1000;
  int n_max = 8;
  double ode_abs = 1e-12;
  double ode_rel = 1e-12;
  /// Flows of the Taylor coefficients.
  double series_tol = 1e-14;
  double newton = 1e-12;
  double bisection = 1e-12;
  double residual = 1e-9;
  Projection projection = Projection::xy;
  bool include_zero_pair = false;
  std::string output_dir = "out";
  /// Canonical JSON the hash is computed from.
  Json source;
  std::string hash;
};

/// Applies "a.b.c=value" overrides; value is parsed as JSON, else taken as a string.
void apply_override(Json& doc, const std::string& assignment);

RunConfig parse_config(const Json& doc);
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

}  // namespace mshoot
