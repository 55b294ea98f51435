#pragma once

#include <string>
#include <vector>

#include "lanecast/scene.hpp"

namespace lanecast::map {

// Newline-delimited scene records, one JSON object per line. Unknown fields
// are ignored; missing required fields or malformed records raise an error
// naming the line number. Round-trips are lossless.
std::vector<Scene> load_scenes(const std::string& path);
void save_scenes(const std::string& path, const std::vector<Scene>& scenes);

nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);

}  // namespace lanecast::map
