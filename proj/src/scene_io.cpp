#include "lanecast/scene_io.hpp"

#include <fstream>
#include <stdexcept>

namespace lanecast::map {

namespace {

using nlohmann::json;

json points_to_json(const std::vector<Vec2>& pts) {
  json arr = json::array();
  for (const Vec2& p : pts) arr.push_back(json::array({p.x, p.y}));
  return arr;
}

std::vector<Vec2> points_from_json(const json& arr, const char* field) {
  if (!arr.is_array())
    throw std::invalid_argument(std::string(field) + " must be an array of points");
  std::vector<Vec2> out;
  out.reserve(arr.size());
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2)
      throw std::invalid_argument(std::string(field) + " has a malformed point");
    out.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return out;
}

json id_map_to_json(const std::map<int, std::vector<int>>& m) {
  json obj = json::object();
  for (const auto& [k, v] : m) obj[std::to_string(k)] = v;
  return obj;
}

json id_map_to_json(const std::map<int, int>& m) {
  json obj = json::object();
  for (const auto& [k, v] : m) obj[std::to_string(k)] = v;
  return obj;
}

}  // namespace

json scene_to_json(const Scene& scene) {
  json j;
  j["scene_id"] = scene.scene_id;
  j["target_past"] = points_to_json(scene.target_past);
  json socials = json::array();
  for (const auto& sp : scene.social_pasts) socials.push_back(points_to_json(sp));
  j["social_pasts"] = socials;
  json segs = json::array();
  for (const auto& [id, poly] : scene.lanes.segments)
    segs.push_back({{"id", id}, {"nodes", points_to_json(poly.nodes)}});
  j["lanes"] = {{"segments", segs},
                {"successors", id_map_to_json(scene.lanes.successors)},
                {"predecessors", id_map_to_json(scene.lanes.predecessors)},
                {"left", id_map_to_json(scene.lanes.left_neighbor)},
                {"right", id_map_to_json(scene.lanes.right_neighbor)}};
  if (scene.gt_future)
    j["gt_future"] = points_to_json(*scene.gt_future);
  else
    j["gt_future"] = nullptr;
  if (!scene.meta.is_null() && !scene.meta.empty()) j["meta"] = scene.meta;
  return j;
}

Scene scene_from_json(const json& j) {
  for (const char* field : {"scene_id", "target_past", "social_pasts", "lanes"})
    if (!j.contains(field))
      throw std::invalid_argument(std::string("missing required field '") +
                                  field + "'");
  Scene scene;
  scene.scene_id = j.at("scene_id").get<std::string>();
  scene.target_past = points_from_json(j.at("target_past"), "target_past");
  for (const auto& sp : j.at("social_pasts"))
    scene.social_pasts.push_back(points_from_json(sp, "social_pasts"));

  const json& lanes = j.at("lanes");
  for (const char* field : {"segments", "successors", "predecessors"})
    if (!lanes.contains(field))
      throw std::invalid_argument(std::string("lanes is missing '") + field + "'");
  for (const auto& seg : lanes.at("segments")) {
    Polyline poly;
    poly.nodes = points_from_json(seg.at("nodes"), "lane nodes");
    scene.lanes.segments[seg.at("id").get<int>()] = std::move(poly);
  }
  auto read_idvec = [](const json& obj, std::map<int, std::vector<int>>& out) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
      out[std::stoi(it.key())] = it.value().get<std::vector<int>>();
  };
  auto read_idmap = [](const json& obj, std::map<int, int>& out) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
      out[std::stoi(it.key())] = it.value().get<int>();
  };
  read_idvec(lanes.at("successors"), scene.lanes.successors);
  read_idvec(lanes.at("predecessors"), scene.lanes.predecessors);
  if (lanes.contains("left")) read_idmap(lanes.at("left"), scene.lanes.left_neighbor);
  if (lanes.contains("right"))
    read_idmap(lanes.at("right"), scene.lanes.right_neighbor);

  if (j.contains("gt_future") && !j.at("gt_future").is_null())
    scene.gt_future = points_from_json(j.at("gt_future"), "gt_future");
  if (j.contains("meta")) scene.meta = j.at("meta");

  scene.validate();
  return scene;
}

std::vector<Scene> load_scenes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene file: " + path);
  std::vector<Scene> scenes;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      scenes.push_back(scene_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": bad scene record: " + e.what());
    }
  }
  return scenes;
}

void save_scenes(const std::string& path, const std::vector<Scene>& scenes) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scene file: " + path);
  for (const Scene& s : scenes) out << scene_to_json(s).dump() << "\n";
}

}  // namespace lanecast::map
