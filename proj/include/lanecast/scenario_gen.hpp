#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lanecast/scene.hpp"

namespace lanecast::map {

// Template mix for the synthetic generator. Counts are scenario draws; the
// congestion template emits a matched pair of scenes (blocked + free lane)
// per draw, so it contributes twice its count to the output.
struct GenOptions {
  std::vector<std::pair<std::string, int>> mix;
};

// Known templates: straight, curve, fork, intersection, congestion.
// Deterministic for a given seed; throws on unknown template names.
std::vector<Scene> gen_synthetic(const GenOptions& options, std::uint64_t seed);

}  // namespace lanecast::map
