#pragma once

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lanecast/metrics.hpp"
#include "lanecast/model.hpp"
#include "lanecast/optim.hpp"
#include "lanecast/scenario_gen.hpp"

namespace lanecast::pipeline {

using geom::Vec2;

struct ExperimentConfig {
  std::uint64_t seed = 7;
  int d = 64;
  int h_nodes = 50;
  int max_n = 10;
  int k = 6;
  int tp = 20;  // fixed data contract
  int tf = 30;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lr = 1e-3;
  int batch_size = 8;
  int steps = 2000;
  double s2l_threshold = 7.5;
  std::vector<std::pair<std::string, int>> template_mix;
  std::string data_path;
  std::string out_path;

  void validate() const;
  model::ModelConfig model_config() const;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);
};

struct TrainResult {
  std::vector<std::string> loss_log;  // one line per step: csv of the terms
  std::int64_t steps_done = 0;
  int skipped = 0;  // scene visits skipped (off-map or ambiguous labels)
};

// Runs the training loop: sample batch, forward to the total loss, backward,
// averaged adaptive-moment step. Deterministic for a fixed seed and thread
// count independent (per-scene gradients are reduced in batch order).
TrainResult train(model::Model& m, AdamState& opt,
                  const std::vector<map::Scene>& scenes,
                  const ExperimentConfig& cfg, std::ostream* live_log = nullptr);

struct ScenePrediction {
  std::string scene_id;
  bool failed = false;
  std::string error;
  std::vector<std::vector<Vec2>> trajectories;  // world frame, K x Tf
  std::vector<double> probabilities;
};

std::vector<ScenePrediction> predict(const model::Model& m,
                                     const std::vector<map::Scene>& scenes,
                                     int k);

metrics::EvalReport evaluate(const model::Model& m,
                             const std::vector<map::Scene>& scenes, int k);

void save_predictions(const std::string& path,
                      const std::vector<ScenePrediction>& preds);
std::vector<ScenePrediction> load_predictions(const std::string& path);

// --- checkpointing ---------------------------------------------------------

struct Checkpoint {
  int format_version = 1;
  ExperimentConfig config;
  std::unique_ptr<model::Model> model;
  AdamState adam;
  std::int64_t step = 0;
};

void save_checkpoint(const std::string& path, const ExperimentConfig& cfg,
                     const model::Model& m, const AdamState& adam,
                     std::int64_t step);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace lanecast::pipeline
