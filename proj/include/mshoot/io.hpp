#pragma once

// JSON / CSV serialization of orbits, manifold series, grids and solutions.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mshoot/connections.hpp"
#include "mshoot/manifolds.hpp"
#include "mshoot/orbits.hpp"

namespace mshoot {

using Json = nlohmann::ordered_json;

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

std::string orbit_id(const PeriodicOrbitData& o);

Json orbit_to_json(const PeriodicOrbitData& o);
/// Rebuilds an orbit record including its per-step STMs and monodromies.
PeriodicOrbitData orbit_from_json(const Json& j);

/// Coefficients plus all context needed to evaluate the flow and W_p.
Json series_to_json(const ManifoldSeries& S);
ManifoldSeries series_from_json(const Json& j);

/// `# key=value ...` provenance line, then the header and one row per point.
void write_grid_csv(const std::string& path, const ManifoldGrid& grid, const std::string& config_hash);
struct GridFile {
  ManifoldGrid grid;
  std::string config_hash;
};
/// Points only; grid metadata comes from the manifest. mu is read from the
/// provenance line when present.
GridFile read_grid_csv(const std::string& path);

Json solution_to_json(const HeteroclinicSolution& s);
HeteroclinicSolution solution_from_json(const Json& j);
Json report_to_json(const ScanReport& r);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace mshoot
