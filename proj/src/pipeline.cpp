#include "lanecast/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "lanecast/parallel.hpp"

namespace lanecast::pipeline {

using nlohmann::json;

void ExperimentConfig::validate() const {
  if (tp != map::kPastSteps || tf != map::kFutureSteps)
    throw std::invalid_argument("config: tp/tf are fixed at 20/30");
  if (d <= 0 || d % 4 != 0)
    throw std::invalid_argument("config: d must be a positive multiple of 4");
  if (h_nodes < 2 || max_n < 1 || k < 1 || batch_size < 1 || steps < 0)
    throw std::invalid_argument("config: counts must be positive");
  if (s2l_threshold <= 0.0 || lr < 0.0)
    throw std::invalid_argument("config: bad threshold or learning rate");
}

model::ModelConfig ExperimentConfig::model_config() const {
  model::ModelConfig mc;
  mc.d = d;
  mc.h_nodes = h_nodes;
  mc.max_n = max_n;
  mc.k_heads = k;
  mc.s2l_threshold = s2l_threshold;
  mc.lambda1 = lambda1;
  mc.lambda2 = lambda2;
  return mc;
}

json ExperimentConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["d"] = d;
  j["h"] = h_nodes;
  j["max_n"] = max_n;
  j["k"] = k;
  j["tp"] = tp;
  j["tf"] = tf;
  j["lambda1"] = lambda1;
  j["lambda2"] = lambda2;
  j["lr"] = lr;
  j["batch_size"] = batch_size;
  j["steps"] = steps;
  j["s2l_threshold"] = s2l_threshold;
  json mix = json::array();
  for (const auto& [name, count] : template_mix)
    mix.push_back({{"template", name}, {"count", count}});
  j["template_mix"] = mix;
  j["paths"] = {{"data", data_path}, {"out", out_path}};
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  c.seed = j.value("seed", c.seed);
  c.d = j.value("d", c.d);
  c.h_nodes = j.value("h", c.h_nodes);
  c.max_n = j.value("max_n", c.max_n);
  c.k = j.value("k", c.k);
  c.tp = j.value("tp", c.tp);
  c.tf = j.value("tf", c.tf);
  c.lambda1 = j.value("lambda1", c.lambda1);
  c.lambda2 = j.value("lambda2", c.lambda2);
  c.lr = j.value("lr", c.lr);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.steps = j.value("steps", c.steps);
  c.s2l_threshold = j.value("s2l_threshold", c.s2l_threshold);
  if (j.contains("template_mix"))
    for (const auto& e : j.at("template_mix"))
      c.template_mix.push_back(
          {e.at("template").get<std::string>(), e.at("count").get<int>()});
  if (j.contains("paths")) {
    c.data_path = j.at("paths").value("data", "");
    c.out_path = j.at("paths").value("out", "");
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j;
  in >> j;
  return from_json(j);
}

namespace {

std::string format_loss_line(std::int64_t step, double total, double reg,
                             double lane, double traj, int used, int skipped) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%d,%d",
                static_cast<long long>(step), total, reg, lane, traj, used,
                skipped);
  return buf;
}

}  // namespace

TrainResult train(model::Model& m, AdamState& opt,
                  const std::vector<map::Scene>& scenes,
                  const ExperimentConfig& cfg, std::ostream* live_log) {
  cfg.validate();
  if (scenes.empty()) throw std::invalid_argument("train: no scenes");
  for (const auto& s : scenes)
    if (!s.gt_future)
      throw std::invalid_argument("train: scene " + s.scene_id +
                                  " has no ground truth");

  // Normalization is deterministic, do it once.
  std::vector<map::NormalizedScene> normalized;
  normalized.reserve(scenes.size());
  for (const auto& s : scenes) normalized.push_back(map::to_agent_frame(s));

  Rng batch_rng(cfg.seed ^ 0xb47c5fd1a2e94c03ULL);
  opt.lr = cfg.lr;
  TrainResult result;

  struct SceneOut {
    bool used = false;
    std::string skip_reason;
    GradBuffers grads;
    double total = 0, reg = 0, lane = 0, traj = 0;
  };

  for (std::int64_t step = 1; step <= cfg.steps; ++step) {
    std::vector<int> batch(static_cast<std::size_t>(cfg.batch_size));
    for (int& idx : batch)
      idx = batch_rng.uniform_int(static_cast<int>(scenes.size()));

    std::vector<SceneOut> outs(batch.size());
    parallel_for(batch.size(), [&](std::size_t bi) {
      const map::NormalizedScene& ns =
          normalized[static_cast<std::size_t>(batch[bi])];
      SceneOut& out = outs[bi];
      ad::Graph g;
      model::TrainForward fwd;
      try {
        fwd = model::train_forward(g, m, ns);
      } catch (const std::runtime_error& e) {
        out.skip_reason = e.what();  // off-map scene
        return;
      }
      if (fwd.skipped) {
        out.skip_reason = fwd.skip_reason;
        return;
      }
      g.backward(fwd.loss.total);
      out.grads.resize(m.params.count());
      for (std::size_t p = 0; p < m.params.count(); ++p) {
        const auto gspan = g.grad(fwd.bound[static_cast<int>(p)]);
        out.grads[p].assign(gspan.begin(), gspan.end());
      }
      out.total = g.value_scalar(fwd.loss.total);
      out.reg = g.value_scalar(fwd.loss.reg);
      out.lane = g.value_scalar(fwd.loss.lane_ce);
      out.traj = g.value_scalar(fwd.loss.traj_ce);
      out.used = true;
    });

    // Reduce in batch order so the result does not depend on thread count.
    GradBuffers grads = make_grad_buffers(m.params);
    int used = 0;
    double total = 0, reg = 0, lane = 0, traj = 0;
    for (const SceneOut& out : outs) {
      if (!out.used) {
        ++result.skipped;
        continue;
      }
      ++used;
      total += out.total;
      reg += out.reg;
      lane += out.lane;
      traj += out.traj;
      for (std::size_t p = 0; p < grads.size(); ++p)
        for (std::size_t i = 0; i < grads[p].size(); ++i)
          grads[p][i] += out.grads[p][i];
    }
    if (used > 0) {
      const double inv = 1.0 / used;
      for (auto& gp : grads)
        for (double& v : gp) v *= inv;
      adam_step(m.params, grads, opt);
      total *= inv;
      reg *= inv;
      lane *= inv;
      traj *= inv;
    }
    result.loss_log.push_back(format_loss_line(
        step, total, reg, lane, traj, used, cfg.batch_size - used));
    if (live_log) (*live_log) << result.loss_log.back() << "\n";
    result.steps_done = step;
  }
  return result;
}

std::vector<ScenePrediction> predict(const model::Model& m,
                                     const std::vector<map::Scene>& scenes,
                                     int k) {
  std::vector<ScenePrediction> preds(scenes.size());
  parallel_for(scenes.size(), [&](std::size_t i) {
    ScenePrediction& out = preds[i];
    out.scene_id = scenes[i].scene_id;
    try {
      const map::NormalizedScene ns = map::to_agent_frame(scenes[i]);
      ad::Graph g;
      model::InferResult res = model::infer(g, m, ns, k);
      for (const auto& traj : res.preds.trajectories) {
        std::vector<Vec2> world;
        world.reserve(traj.size());
        for (const Vec2& p : traj) world.push_back(ns.frame.to_world(p));
        out.trajectories.push_back(std::move(world));
      }
      out.probabilities = res.preds.probabilities;
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = e.what();
    }
  });
  return preds;
}

metrics::EvalReport evaluate(const model::Model& m,
                             const std::vector<map::Scene>& scenes, int k) {
  const auto preds = predict(m, scenes, k);
  std::vector<metrics::SceneRecord> records(scenes.size());
  parallel_for(scenes.size(), [&](std::size_t i) {
    if (preds[i].failed || !scenes[i].gt_future) {
      records[i].scene_id = scenes[i].scene_id;
      records[i].failed = true;
      return;
    }
    records[i] = metrics::score_scene(scenes[i].scene_id, preds[i].trajectories,
                                      preds[i].probabilities,
                                      *scenes[i].gt_future);
  });
  return metrics::aggregate(std::move(records));
}

void save_predictions(const std::string& path,
                      const std::vector<ScenePrediction>& preds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write predictions: " + path);
  for (const auto& p : preds) {
    json j;
    j["scene_id"] = p.scene_id;
    if (p.failed) {
      j["failed"] = true;
      j["error"] = p.error;
    } else {
      json trajs = json::array();
      for (const auto& traj : p.trajectories) {
        json pts = json::array();
        for (const Vec2& q : traj) pts.push_back(json::array({q.x, q.y}));
        trajs.push_back(pts);
      }
      j["trajectories"] = trajs;
      j["probabilities"] = p.probabilities;
    }
    out << j.dump() << "\n";
  }
}

std::vector<ScenePrediction> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open predictions: " + path);
  std::vector<ScenePrediction> preds;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      ScenePrediction p;
      p.scene_id = j.at("scene_id").get<std::string>();
      p.failed = j.value("failed", false);
      if (!p.failed) {
        for (const auto& traj : j.at("trajectories")) {
          std::vector<Vec2> pts;
          for (const auto& q : traj)
            pts.push_back({q[0].get<double>(), q[1].get<double>()});
          p.trajectories.push_back(std::move(pts));
        }
        p.probabilities = j.at("probabilities").get<std::vector<double>>();
      } else {
        p.error = j.value("error", "");
      }
      preds.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": bad prediction record: " + e.what());
    }
  }
  return preds;
}

void save_checkpoint(const std::string& path, const ExperimentConfig& cfg,
                     const model::Model& m, const AdamState& adam,
                     std::int64_t step) {
  json j;
  j["format_version"] = 1;
  j["seed"] = m.seed;
  j["step"] = step;
  j["config"] = cfg.to_json();
  json params = json::array();
  for (std::size_t i = 0; i < m.params.count(); ++i) {
    const Tensor& t = m.params.at(static_cast<int>(i));
    params.push_back({{"name", m.params.name_of(static_cast<int>(i))},
                      {"shape", t.shape},
                      {"values", t.values}});
  }
  j["params"] = params;
  j["adam"] = {{"lr", adam.lr},     {"beta1", adam.beta1}, {"beta2", adam.beta2},
               {"eps", adam.eps},   {"step", adam.step},   {"m", adam.m},
               {"v", adam.v}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump();
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  json j;
  in >> j;
  Checkpoint ckpt;
  ckpt.format_version = j.at("format_version").get<int>();
  if (ckpt.format_version != 1)
    throw std::runtime_error("checkpoint: unsupported format version " +
                             std::to_string(ckpt.format_version));
  ckpt.config = ExperimentConfig::from_json(j.at("config"));
  ckpt.step = j.at("step").get<std::int64_t>();
  ckpt.model = std::make_unique<model::Model>(ckpt.config.model_config(),
                                              j.at("seed").get<std::uint64_t>());
  for (const auto& pj : j.at("params")) {
    const std::string name = pj.at("name").get<std::string>();
    const int idx = ckpt.model->params.index_of(name);
    if (idx < 0)
      throw std::runtime_error("checkpoint: unknown parameter '" + name + "'");
    Tensor& t = ckpt.model->params.at(idx);
    const auto shape = pj.at("shape").get<std::vector<int>>();
    if (shape != t.shape)
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
    t.values = pj.at("values").get<std::vector<double>>();
  }
  const json& a = j.at("adam");
  ckpt.adam.lr = a.at("lr").get<double>();
  ckpt.adam.beta1 = a.at("beta1").get<double>();
  ckpt.adam.beta2 = a.at("beta2").get<double>();
  ckpt.adam.eps = a.at("eps").get<double>();
  ckpt.adam.step = a.at("step").get<std::int64_t>();
  ckpt.adam.m = a.at("m").get<std::vector<std::vector<double>>>();
  ckpt.adam.v = a.at("v").get<std::vector<std::vector<double>>>();
  return ckpt;
}

}  // namespace lanecast::pipeline
