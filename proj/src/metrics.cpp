#include "lanecast/metrics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lanecast::metrics {

namespace {
constexpr double kMissRadius = 2.0;
constexpr double kLogPenaltyCap = 0.05;  // -ln p clamped at -ln 0.05

double ade_of(const std::vector<Vec2>& pred, const std::vector<Vec2>& gt,
              std::size_t upto) {
  double sum = 0.0;
  for (std::size_t t = 0; t < upto; ++t) sum += (pred[t] - gt[t]).norm();
  return sum / static_cast<double>(upto);
}
}  // namespace

MinErrors min_ade_fde(const std::vector<std::vector<Vec2>>& preds,
                      const std::vector<Vec2>& gt) {
  if (preds.empty()) throw std::invalid_argument("min_ade_fde: no predictions");
  MinErrors out;
  out.min_ade = std::numeric_limits<double>::infinity();
  out.min_fde = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < preds.size(); ++k) {
    if (preds[k].size() != gt.size())
      throw std::invalid_argument("min_ade_fde: horizon mismatch");
    const double ade = ade_of(preds[k], gt, gt.size());
    const double fde = (preds[k].back() - gt.back()).norm();
    if (ade < out.min_ade) out.min_ade = ade;
    if (fde < out.min_fde) {
      out.min_fde = fde;
      out.best_k = static_cast<int>(k);
    }
  }
  return out;
}

ProbMetrics prob_metrics(const std::vector<std::vector<Vec2>>& preds,
                         const std::vector<double>& probs,
                         const std::vector<Vec2>& gt) {
  if (probs.size() != preds.size())
    throw std::invalid_argument("prob_metrics: probability count mismatch");
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw std::invalid_argument("prob_metrics: negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::invalid_argument("prob_metrics: probabilities must sum to 1");

  int ade_k = 0, fde_k = 0;
  double best_ade = std::numeric_limits<double>::infinity();
  double best_fde = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const double ade = ade_of(preds[k], gt, gt.size());
    const double fde = (preds[k].back() - gt.back()).norm();
    if (ade < best_ade) {
      best_ade = ade;
      ade_k = static_cast<int>(k);
    }
    if (fde < best_fde) {
      best_fde = fde;
      fde_k = static_cast<int>(k);
    }
  }
  auto penalty = [](double p) {
    const double capped = std::max(p, kLogPenaltyCap);
    return -std::log(capped);
  };
  ProbMetrics out;
  out.p_ade = best_ade + penalty(probs[static_cast<std::size_t>(ade_k)]);
  out.p_fde = best_fde + penalty(probs[static_cast<std::size_t>(fde_k)]);
  out.brier_ade =
      best_ade + std::pow(1.0 - probs[static_cast<std::size_t>(ade_k)], 2);
  out.brier_fde =
      best_fde + std::pow(1.0 - probs[static_cast<std::size_t>(fde_k)], 2);
  out.p_miss = out.p_fde > kMissRadius;
  return out;
}

double miss_rate(const std::vector<SceneRecord>& scenes) {
  int total = 0, missed = 0;
  for (const auto& s : scenes) {
    if (s.failed) continue;
    ++total;
    missed += s.miss ? 1 : 0;
  }
  if (total == 0) throw std::invalid_argument("miss_rate: no evaluated scenes");
  return static_cast<double>(missed) / total;
}

void horizon_curves(const std::vector<std::vector<Vec2>>& preds,
                    const std::vector<Vec2>& gt, std::vector<double>& ade_out,
                    std::vector<double>& fde_out) {
  const std::size_t tf = gt.size();
  ade_out.assign(tf, 0.0);
  fde_out.assign(tf, 0.0);
  for (std::size_t t = 1; t <= tf; ++t) {
    double best_ade = std::numeric_limits<double>::infinity();
    double best_fde = std::numeric_limits<double>::infinity();
    for (const auto& pred : preds) {
      best_ade = std::min(best_ade, ade_of(pred, gt, t));
      best_fde = std::min(best_fde, (pred[t - 1] - gt[t - 1]).norm());
    }
    ade_out[t - 1] = best_ade;
    fde_out[t - 1] = best_fde;
  }
}

SceneRecord score_scene(const std::string& scene_id,
                        const std::vector<std::vector<Vec2>>& preds,
                        const std::vector<double>& probs,
                        const std::vector<Vec2>& gt) {
  SceneRecord rec;
  rec.scene_id = scene_id;
  const MinErrors me = min_ade_fde(preds, gt);
  rec.min_ade = me.min_ade;
  rec.min_fde = me.min_fde;
  rec.best_k = me.best_k;
  rec.miss = me.min_fde > kMissRadius;
  rec.prob = prob_metrics(preds, probs, gt);
  horizon_curves(preds, gt, rec.horizon_ade, rec.horizon_fde);
  return rec;
}

EvalReport aggregate(std::vector<SceneRecord> scenes) {
  EvalReport rep;
  rep.scenes = std::move(scenes);
  std::size_t tf = 0;
  for (const auto& s : rep.scenes)
    if (!s.failed) tf = std::max(tf, s.horizon_ade.size());
  rep.horizon_ade.assign(tf, 0.0);
  rep.horizon_fde.assign(tf, 0.0);

  for (const auto& s : rep.scenes) {
    if (s.failed) {
      ++rep.failed;
      continue;
    }
    ++rep.evaluated;
    rep.mean_min_ade += s.min_ade;
    rep.mean_min_fde += s.min_fde;
    rep.mean_p_ade += s.prob.p_ade;
    rep.mean_p_fde += s.prob.p_fde;
    rep.mean_brier_ade += s.prob.brier_ade;
    rep.mean_brier_fde += s.prob.brier_fde;
    rep.p_miss_rate += s.prob.p_miss ? 1.0 : 0.0;
    for (std::size_t t = 0; t < tf; ++t) {
      rep.horizon_ade[t] += s.horizon_ade[t];
      rep.horizon_fde[t] += s.horizon_fde[t];
    }
  }
  if (rep.evaluated > 0) {
    const double n = rep.evaluated;
    rep.mean_min_ade /= n;
    rep.mean_min_fde /= n;
    rep.mean_p_ade /= n;
    rep.mean_p_fde /= n;
    rep.mean_brier_ade /= n;
    rep.mean_brier_fde /= n;
    rep.p_miss_rate /= n;
    for (std::size_t t = 0; t < tf; ++t) {
      rep.horizon_ade[t] /= n;
      rep.horizon_fde[t] /= n;
    }
    rep.miss_rate = metrics::miss_rate(rep.scenes);
  }
  return rep;
}

std::string EvalReport::text_table() const {
  std::ostringstream os;
  os << "scenes evaluated: " << evaluated << " (failed: " << failed << ")\n";
  os << "log penalty in p-metrics clamped at -ln(0.05)\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %10s\n", "metric", "value");
  os << line;
  const std::pair<const char*, double> rows[] = {
      {"minADE", mean_min_ade},     {"minFDE", mean_min_fde},
      {"MR", miss_rate},            {"p-ADE", mean_p_ade},
      {"p-FDE", mean_p_fde},        {"p-MR", p_miss_rate},
      {"brier-ADE", mean_brier_ade}, {"brier-FDE", mean_brier_fde}};
  for (const auto& [name, value] : rows) {
    std::snprintf(line, sizeof line, "%-12s %10.4f\n", name, value);
    os << line;
  }
  os << "horizon minADE:";
  for (double v : horizon_ade) {
    std::snprintf(line, sizeof line, " %.3f", v);
    os << line;
  }
  os << "\nhorizon minFDE:";
  for (double v : horizon_fde) {
    std::snprintf(line, sizeof line, " %.3f", v);
    os << line;
  }
  os << "\n";
  return os.str();
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["evaluated"] = evaluated;
  j["failed"] = failed;
  j["log_penalty_clamp"] = "-ln(0.05)";
  j["min_ade"] = mean_min_ade;
  j["min_fde"] = mean_min_fde;
  j["miss_rate"] = miss_rate;
  j["p_ade"] = mean_p_ade;
  j["p_fde"] = mean_p_fde;
  j["p_miss_rate"] = p_miss_rate;
  j["brier_ade"] = mean_brier_ade;
  j["brier_fde"] = mean_brier_fde;
  j["horizon_min_ade"] = horizon_ade;
  j["horizon_min_fde"] = horizon_fde;
  nlohmann::json per_scene = nlohmann::json::array();
  for (const auto& s : scenes) {
    nlohmann::json js;
    js["scene_id"] = s.scene_id;
    js["failed"] = s.failed;
    if (!s.failed) {
      js["min_ade"] = s.min_ade;
      js["min_fde"] = s.min_fde;
      js["miss"] = s.miss;
      js["best_k"] = s.best_k;
      js["p_ade"] = s.prob.p_ade;
      js["p_fde"] = s.prob.p_fde;
      js["brier_ade"] = s.prob.brier_ade;
      js["brier_fde"] = s.prob.brier_fde;
    }
    per_scene.push_back(js);
  }
  j["scenes"] = per_scene;
  return j;
}

}  // namespace lanecast::metrics
