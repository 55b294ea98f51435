#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lanecast/geometry.hpp"

namespace lanecast::metrics {

using geom::Vec2;

struct MinErrors {
  double min_ade = 0.0;
  double min_fde = 0.0;
  int best_k = 0;  // minFDE minimizer; the two minima are independent
};

// Best-of-K displacement errors against the ground truth.
MinErrors min_ade_fde(const std::vector<std::vector<Vec2>>& preds,
                      const std::vector<Vec2>& gt);

struct ProbMetrics {
  double p_ade = 0.0;
  double p_fde = 0.0;
  double brier_ade = 0.0;
  double brier_fde = 0.0;
  bool p_miss = false;
};

// Probability-penalized variants following the public benchmark convention:
// the log penalty min(-ln p, -ln 0.05) is added to the displacement of the
// corresponding minimizer, the brier variants add (1 - p)^2, and the
// probabilistic miss applies the 2 m rule to the penalized final error.
ProbMetrics prob_metrics(const std::vector<std::vector<Vec2>>& preds,
                         const std::vector<double>& probs,
                         const std::vector<Vec2>& gt);

struct SceneRecord {
  std::string scene_id;
  bool failed = false;
  double min_ade = 0.0, min_fde = 0.0;
  bool miss = false;
  int best_k = 0;
  ProbMetrics prob;
  std::vector<double> horizon_ade;  // per-horizon minADE, t = 1..Tf
  std::vector<double> horizon_fde;
};

struct EvalReport {
  std::vector<SceneRecord> scenes;
  int evaluated = 0;
  int failed = 0;
  double mean_min_ade = 0.0, mean_min_fde = 0.0;
  double miss_rate = 0.0;
  double mean_p_ade = 0.0, mean_p_fde = 0.0;
  double p_miss_rate = 0.0;
  double mean_brier_ade = 0.0, mean_brier_fde = 0.0;
  std::vector<double> horizon_ade;  // dataset means per horizon
  std::vector<double> horizon_fde;

  std::string text_table() const;
  nlohmann::json to_json() const;
};

// Fraction of evaluated scenes whose best final error exceeds 2 m (strictly;
// exactly 2 m is a hit).
double miss_rate(const std::vector<SceneRecord>& scenes);

// Per-horizon errors from predictions truncated to each t = 1..Tf.
void horizon_curves(const std::vector<std::vector<Vec2>>& preds,
                    const std::vector<Vec2>& gt, std::vector<double>& ade_out,
                    std::vector<double>& fde_out);

SceneRecord score_scene(const std::string& scene_id,
                        const std::vector<std::vector<Vec2>>& preds,
                        const std::vector<double>& probs,
                        const std::vector<Vec2>& gt);

EvalReport aggregate(std::vector<SceneRecord> scenes);

}  // namespace lanecast::metrics
