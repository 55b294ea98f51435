#include "lanecast/model.hpp"

#include <cmath>

namespace lanecast::model {

namespace {

LinearIdx add_linear(ParamStore& ps, const std::string& name, int in, int out) {
  return {ps.add(name + ".w", in, out, in), ps.add(name + ".b", 1, out, in)};
}

GruIdx add_gru(ParamStore& ps, const std::string& name, int in, int d) {
  return {ps.add(name + ".wx", in, 3 * d, in), ps.add(name + ".wh", d, 3 * d, d),
          ps.add(name + ".bx", 1, 3 * d, in), ps.add(name + ".bh", 1, 3 * d, d)};
}

ConvIdx add_conv(ParamStore& ps, const std::string& name, int k, int cin,
                 int cout) {
  return {ps.add(name + ".w", k * cin, cout, k * cin),
          ps.add(name + ".b", 1, cout, k * cin), k};
}

MultiScaleIdx add_multi_scale(ParamStore& ps, const std::string& name, int cin,
                              int d) {
  MultiScaleIdx idx;
  idx.k3 = add_conv(ps, name + ".conv3", 3, cin, d / 2);
  idx.k5 = add_conv(ps, name + ".conv5", 5, cin, d / 2);
  idx.k7 = add_conv(ps, name + ".conv7", 7, cin, d / 2);
  idx.proj = add_linear(ps, name + ".proj", 3 * (d / 2), d);
  return idx;
}

}  // namespace

Model::Model(const ModelConfig& config, std::uint64_t init_seed)
    : cfg(config), seed(init_seed) {
  const int d = cfg.d;
  const int dq = d / 4;

  target_enc = add_multi_scale(params, "target_enc", 4, d);
  social_enc = add_multi_scale(params, "social_enc", 4, d);
  social_gru = add_gru(params, "social_enc.gru", d, d);
  lane_enc = add_multi_scale(params, "lane_enc", 4, d);

  s2l_dist1 = add_linear(params, "s2l.dist1", 2, dq);
  s2l_dist2 = add_linear(params, "s2l.dist2", dq, dq);
  s2l_agg1 = add_linear(params, "s2l.agg1", d + dq + d, d);
  s2l_agg2 = add_linear(params, "s2l.agg2", d, d);
  s2l_res1 = add_linear(params, "s2l.res1", d, d);
  s2l_res2 = add_linear(params, "s2l.res2", d, d);
  s2l_mp1 = add_conv(params, "s2l.mp1", 3, d, d);
  s2l_mp2 = add_conv(params, "s2l.mp2", 3, d, d);

  wp_gru0 = add_gru(params, "rla.wp_gru0", 2, d);
  wp_gru1 = add_gru(params, "rla.wp_gru1", d, d);
  wp_head1 = add_linear(params, "rla.wp_head1", d, d);
  wp_head2 = add_linear(params, "rla.wp_head2", d, 2);
  next_gru0 = add_gru(params, "rla.next_gru0", 2 + d, d);
  next_gru1 = add_gru(params, "rla.next_gru1", d, d);
  attn_wq = params.add("rla.attn.wq", d, d, d);
  attn_wk = params.add("rla.attn.wk", d, d, d);
  attn_wv = params.add("rla.attn.wv", d, d, d);
  rmlp1 = add_linear(params, "rla.rel1", 2, dq);
  rmlp2 = add_linear(params, "rla.rel2", dq, dq);
  e_lane = params.add("rla.e_lane", d, d, d + dq);
  e_rel = params.add("rla.e_rel", dq, d, d + dq);
  e_bias = params.add("rla.e_bias", 1, d, d + dq);
  dec_token = params.add("rla.dec_token", 1, d, d);
  pred_trunk = add_linear(params, "rla.pred_trunk", d, d);
  for (int k = 0; k < cfg.k_heads; ++k)
    pred_heads.push_back(
        add_linear(params, "rla.pred_head" + std::to_string(k), d, 2));

  lane_sel1 = add_linear(params, "sel.lane1", d, d);
  lane_sel2 = add_linear(params, "sel.lane2", d, 1);
  traj_sel1 = add_linear(params, "sel.traj1", 2 * cfg.tf() + d, d);
  traj_sel2 = add_linear(params, "sel.traj2", d, 1);

  params.init_uniform(seed);
}

Bound bind_params(Graph& g, const Model& m) {
  Bound b;
  b.vars.reserve(m.params.count());
  for (std::size_t i = 0; i < m.params.count(); ++i) {
    const Tensor& t = m.params.at(static_cast<int>(i));
    b.vars.push_back(g.input(t.rows(), t.cols(), t.values, t.requires_grad));
  }
  return b;
}

namespace {

struct SceneEncoding {
  std::vector<map::LaneProposal> proposals;
  std::vector<LaneContext> lanes;
  std::vector<RlaState> encoded;
  std::vector<Var> lane_hiddens;
  Var lane_probs;
};

SceneEncoding encode_scene(Graph& g, const Model& m, const Bound& b,
                           const NormalizedScene& ns, ForwardTrace* trace) {
  SceneEncoding enc;
  enc.proposals =
      map::extract_lane_proposals(ns.scene, m.cfg.h_nodes, m.cfg.max_n);

  Var motion = encode_target(g, m, b, ns.scene.target_past);
  Var social = encode_social(g, m, b, ns.scene.social_pasts);

  std::vector<geom::Rollout> rollouts;
  std::vector<Vec2> agent_pos;
  for (const auto& past : ns.scene.social_pasts) {
    rollouts.push_back(geom::const_accel_rollout(past, m.cfg.tf(), map::kDt));
    agent_pos.push_back(past.back());
  }
  const std::vector<int> order = canonical_agent_order(ns.scene.social_pasts);

  for (const auto& prop : enc.proposals) {
    Var lane_feats = encode_lane(g, m, b, prop.nodes);
    const RelatednessMap rel =
        relatedness(prop.nodes, rollouts, m.cfg.s2l_threshold);
    Var fused = fuse_social_into_lane(g, m, b, lane_feats, social, rel,
                                      prop.nodes, agent_pos, order);
    Var instance = lane_message_pass(g, m, b, fused);
    enc.lanes.push_back(make_lane_context(g, m, b, prop.nodes, instance));
    enc.encoded.push_back(rla_encode(g, m, b, enc.lanes.back(),
                                     ns.scene.target_past, motion, trace));
    enc.lane_hiddens.push_back(enc.encoded.back().next_hidden[1]);
  }
  enc.lane_probs = lane_selector(g, m, b, enc.lane_hiddens, trace);
  return enc;
}

}  // namespace

TrainForward train_forward(Graph& g, const Model& m, const NormalizedScene& ns,
                           ForwardTrace* trace) {
  TrainForward out;
  if (!ns.scene.gt_future)
    throw std::invalid_argument("train_forward: scene has no ground truth");
  const std::vector<Vec2>& gt = *ns.scene.gt_future;

  out.bound = bind_params(g, m);
  const Bound& b = out.bound;
  SceneEncoding enc = encode_scene(g, m, b, ns, trace);
  out.n_lanes = static_cast<int>(enc.proposals.size());

  // Lane labels pick the training lane; near-uniform labels carry no signal.
  std::vector<double> d1 = lane_distance_weights(enc.proposals, gt);
  for (double& v : d1) v = -v;
  const std::vector<double> lane_label = stable_softmax(d1);
  const int n = static_cast<int>(lane_label.size());
  if (n >= 2 && entropy(lane_label) > std::log(static_cast<double>(n)) - 0.01) {
    out.skipped = true;
    out.skip_reason = "ambiguous lane labels";
    return out;
  }
  const int lane_star = static_cast<int>(
      std::max_element(lane_label.begin(), lane_label.end()) -
      lane_label.begin());
  out.trained_lane = lane_star;

  DecodeResult decoded = rla_decode(g, m, b, enc.lanes[lane_star],
                                    enc.encoded[lane_star], m.cfg.k_heads, trace);
  out.labels = make_labels(enc.proposals, decoded.trajectories, gt);

  Var traj_probs = trajectory_selector(g, m, b, decoded,
                                       enc.lane_hiddens[lane_star], trace);
  out.loss = total_loss(g, decoded, enc.lane_probs, traj_probs, out.labels, gt,
                        m.cfg.lambda1, m.cfg.lambda2);
  return out;
}

InferResult infer(Graph& g, const Model& m, const NormalizedScene& ns, int k_pick,
                  ForwardTrace* trace) {
  InferResult out;
  const Bound b = bind_params(g, m);
  SceneEncoding enc = encode_scene(g, m, b, ns, trace);
  out.n_lanes = static_cast<int>(enc.proposals.size());

  const auto lp = g.value(enc.lane_probs);
  out.scores.lane.assign(lp.begin(), lp.end());

  std::vector<std::vector<std::vector<Vec2>>> all_trajs;
  for (int i = 0; i < out.n_lanes; ++i) {
    DecodeResult decoded =
        rla_decode(g, m, b, enc.lanes[i], enc.encoded[i], m.cfg.k_heads, trace);
    Var tp = trajectory_selector(g, m, b, decoded, enc.lane_hiddens[i], trace);
    const auto tpv = g.value(tp);
    out.scores.traj.emplace_back(tpv.begin(), tpv.end());
    all_trajs.push_back(std::move(decoded.trajectories));
  }
  out.preds = combine_and_pick(out.scores.lane, out.scores.traj, all_trajs, k_pick);
  return out;
}

}  // namespace lanecast::model
