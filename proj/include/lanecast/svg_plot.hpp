#pragma once

#include <string>
#include <vector>

#include "lanecast/scene.hpp"

namespace lanecast::plot {

using geom::Vec2;

// Standalone SVG of one scene: lanes grey, target history orange, ground
// truth red, predictions blue with stroke opacity equal to their probability.
void plot_scene_svg(const std::string& path, const map::Scene& scene,
                    const std::vector<std::vector<Vec2>>& predictions,
                    const std::vector<double>& probabilities);

}  // namespace lanecast::plot
