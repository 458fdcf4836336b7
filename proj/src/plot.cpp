#include "mshoot/plot.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace mshoot {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
constexpr double kW = 900, kH = 650, kMargin = 60;

struct Bounds {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  void add(const Vec2& p) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1])) return;
    x0 = std::min(x0, p[0]);
    x1 = std::max(x1, p[0]);
    y0 = std::min(y0, p[1]);
    y1 = std::max(y1, p[1]);
  }
};

std::string escape(const std::string& s) {
  std::string r;
  for (char c : s) {
    if (c == '<') r += "&lt;";
    else if (c == '>') r += "&gt;";
    else if (c == '&') r += "&amp;";
    else r += c;
  }
  return r;
}

}  // namespace

std::string render_svg(const SystemModel& model, Projection coords, const std::vector<PlotSeries>& series,
                       const std::vector<Vec4>& solutions, const std::string& title) {
  std::vector<std::vector<Segment>> segs;
  Bounds b;
  for (const auto& s : series) {
    segs.push_back(polyline_segments(s.points, model, coords));
    for (const Segment& g : segs.back()) {
      b.add(g.p1);
      b.add(g.p2);
    }
  }
  std::vector<Vec2> marks;
  for (const Vec4& x : solutions) {
    try {
      marks.push_back(project(model, coords, x));
      b.add(marks.back());
    } catch (const Error&) {
    }
  }
  if (coords == Projection::Lg) {
    b.y0 = 0.0;
    b.y1 = kTwoPi;
  }
  if (!(b.x1 >= b.x0)) b = Bounds{-1, 1, -1, 1};
  if (b.x1 - b.x0 < 1e-12) b.x0 -= 0.5, b.x1 += 0.5;
  if (b.y1 - b.y0 < 1e-12) b.y0 -= 0.5, b.y1 += 0.5;
  const double sx = (kW - 2 * kMargin) / (b.x1 - b.x0), sy = (kH - 2 * kMargin) / (b.y1 - b.y0);
  auto X = [&](double x) { return kMargin + (x - b.x0) * sx; };
  auto Y = [&](double y) { return kH - kMargin - (y - b.y0) * sy; };

  std::ostringstream o;
  char buf[1024];
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
    << kW << ' ' << kH << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"#444\"/>\n", kMargin,
                kMargin, kW - 2 * kMargin, kH - 2 * kMargin);
  o << buf;
  const char* xl = coords == Projection::xy ? "x" : "L";
  const char* yl = coords == Projection::xy ? "y" : "g";
  std::snprintf(buf, sizeof buf,
                "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"14\">%s</text>\n"
                "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"14\">%s</text>\n",
                kW / 2, kH - 15, xl, 15.0, kH / 2, yl);
  o << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"11\">%.6g</text>"
                "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">%.6g</text>\n"
                "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">%.6g</text>"
                "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">%.6g</text>\n",
                kMargin, kH - kMargin + 15, b.x0, kW - kMargin, kH - kMargin + 15, b.x1, kMargin - 4, kH - kMargin,
                b.y0, kMargin - 4, kMargin + 10, b.y1);
  o << buf;
  if (!title.empty()) o << "<text x=\"" << kMargin << "\" y=\"30\" font-family=\"sans-serif\" font-size=\"16\">" << escape(title) << "</text>\n";

  for (std::size_t i = 0; i < segs.size(); ++i) {
    const char* color = kPalette[i % 6];
    o << "<g fill=\"none\" stroke=\"" << color << "\" stroke-width=\"0.8\"" << (i % 2 ? " stroke-dasharray=\"4 2\"" : "")
      << ">\n";
    bool open = false;
    Vec2 last{};
    int last_k = -1;
    for (const Segment& g : segs[i]) {
      const bool wrap = coords == Projection::Lg && std::abs(g.p2[1] - g.p1[1]) > kPi;
      if (wrap) continue;
      if (!open || g.k != last_k || g.p1 != last) {
        if (open) o << "\"/>\n";
        std::snprintf(buf, sizeof buf, "<path d=\"M%.2f,%.2f", X(g.p1[0]), Y(g.p1[1]));
        o << buf;
        open = true;
      }
      std::snprintf(buf, sizeof buf, " L%.2f,%.2f", X(g.p2[0]), Y(g.p2[1]));
      o << buf;
      last = g.p2;
      last_k = g.k;
    }
    if (open) o << "\"/>\n";
    o << "</g>\n";
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\" fill=\"%s\">%s</text>\n",
                  kW - kMargin - 220, kMargin + 18.0 + 16.0 * static_cast<double>(i), color,
                  escape(series[i].label).c_str());
    o << buf;
  }
  for (const Vec2& m : marks) {
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"black\" stroke=\"yellow\"/>\n",
                  X(m[0]), Y(m[1]));
    o << buf;
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace mshoot
