#include "lanecast/svg_plot.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace lanecast::plot {

namespace {

struct Bounds {
  double min_x = 1e18, min_y = 1e18, max_x = -1e18, max_y = -1e18;
  void grow(Vec2 p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
};

void polyline_tag(std::ostream& os, const std::vector<Vec2>& pts,
                  const Bounds& b, const char* color, double width,
                  double opacity) {
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
     << width << "\" stroke-opacity=\"" << opacity << "\" points=\"";
  for (const Vec2& p : pts)
    os << p.x - b.min_x << "," << b.max_y - p.y << " ";  // flip y for SVG
  os << "\"/>\n";
}

}  // namespace

void plot_scene_svg(const std::string& path, const map::Scene& scene,
                    const std::vector<std::vector<Vec2>>& predictions,
                    const std::vector<double>& probabilities) {
  Bounds b;
  for (const auto& [id, poly] : scene.lanes.segments)
    for (const Vec2& p : poly.nodes) b.grow(p);
  for (const Vec2& p : scene.target_past) b.grow(p);
  if (scene.gt_future)
    for (const Vec2& p : *scene.gt_future) b.grow(p);
  for (const auto& traj : predictions)
    for (const Vec2& p : traj) b.grow(p);
  const double pad = 10.0;
  b.min_x -= pad;
  b.min_y -= pad;
  b.max_x += pad;
  b.max_y += pad;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write SVG: " + path);
  const double w = b.max_x - b.min_x, h = b.max_y - b.min_y;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << w << " "
      << h << "\" width=\"" << w * 6 << "\" height=\"" << h * 6 << "\">\n";
  out << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";

  for (const auto& [id, poly] : scene.lanes.segments)
    polyline_tag(out, poly.nodes, b, "#999999", 0.4, 1.0);
  for (const auto& past : scene.social_pasts)
    polyline_tag(out, past, b, "#bbbbbb", 0.5, 1.0);
  polyline_tag(out, scene.target_past, b, "#ff8800", 0.6, 1.0);
  if (scene.gt_future)
    polyline_tag(out, *scene.gt_future, b, "#dd2222", 0.6, 1.0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double p = i < probabilities.size() ? probabilities[i] : 1.0;
    polyline_tag(out, predictions[i], b, "#2255dd", 0.6, p);
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("failed while writing SVG: " + path);
}

}  // namespace lanecast::plot
