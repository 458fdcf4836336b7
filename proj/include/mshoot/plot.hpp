#pragma once

// Static SVG figures of manifold grids and connection points.

#include <string>
#include <vector>

#include "mshoot/connections.hpp"

namespace mshoot {

struct PlotSeries {
  std::string label;
  std::vector<GridPoint> points;
};

/// One polyline group per (k, half) of each series, broken at filtered
/// discontinuities and at angle wraps; markers at `solutions`.
std::string render_svg(const SystemModel& model, Projection coords, const std::vector<PlotSeries>& series,
                       const std::vector<Vec4>& solutions, const std::string& title = "");

}  // namespace mshoot
