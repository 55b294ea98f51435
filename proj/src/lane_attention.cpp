#include "lanecast/lane_attention.hpp"

namespace lanecast::model {

LaneContext make_lane_context(Graph& g, const Model& m, const Bound& b,
                              const Polyline& proposal, Var fused_features) {
  LaneContext ctx;
  ctx.nodes = &proposal;
  ctx.tangents.resize(proposal.nodes.size());
  for (std::size_t i = 0; i < proposal.nodes.size(); ++i)
    ctx.tangents[i] = geom::lane_direction(proposal, static_cast<int>(i));
  ctx.features = fused_features;
  ctx.attn_lane_part = g.matmul(fused_features, b[m.e_lane]);
  return ctx;
}

Var waypoint_step(Graph& g, const Model& m, const Bound& b, RlaState& state,
                  Var prev_scaled) {
  state.wp_hidden[0] = nn::gru_cell(g, prev_scaled, state.wp_hidden[0],
                                    b.gru(m.wp_gru0, m.cfg.d));
  state.wp_hidden[1] = nn::gru_cell(g, state.wp_hidden[0], state.wp_hidden[1],
                                    b.gru(m.wp_gru1, m.cfg.d));
  return nn::mlp2(g, state.wp_hidden[1], b.lin(m.wp_head1), b.lin(m.wp_head2));
}

AttentionWindow attention_window(const Polyline& lane, Vec2 a_prev,
                                 Vec2 waypoint) {
  const int a = geom::nearest_node(lane, a_prev).index;
  const int b = geom::nearest_node(lane, waypoint).index;
  return {std::min(a, b), std::max(a, b)};
}

Var lane_attention_row(Graph& g, const Model& m, const Bound& b, Var hidden_row,
                       const LaneContext& lane, Vec2 a_prev,
                       double agent_heading, AttentionWindow win,
                       ForwardTrace* trace) {
  const int w = win.last - win.first + 1;
  std::vector<double> rel;
  rel.reserve(static_cast<std::size_t>(w) * 2);
  for (int h = win.first; h <= win.last; ++h) {
    const Vec2 node = lane.nodes->nodes[static_cast<std::size_t>(h)];
    rel.push_back(m.cfg.coord_scale * (node - a_prev).norm());
    rel.push_back(geom::angle_diff(agent_heading,
                                   lane.tangents[static_cast<std::size_t>(h)]));
  }
  Var r = nn::mlp2(g, g.constant(w, 2, rel), b.lin(m.rmlp1), b.lin(m.rmlp2));
  Var lane_part = g.slice_rows(lane.attn_lane_part, win.first, win.last + 1);
  Var e = g.relu(
      g.add_bias(g.add(lane_part, g.matmul(r, b[m.e_rel])), b[m.e_bias]));
  Var keys = g.matmul(e, b[m.attn_wk]);
  Var values = g.matmul(e, b[m.attn_wv]);
  Var q = g.matmul(hidden_row, b[m.attn_wq]);
  Var weights = g.scaled_dot_softmax(q, keys);
  if (trace) trace->attention_rows.push_back(weights);
  return g.add(hidden_row, g.matmul(weights, values));
}

namespace {

Var scaled_point(Graph& g, const ModelConfig& cfg, Vec2 p) {
  const std::vector<double> v{cfg.coord_scale * p.x, cfg.coord_scale * p.y};
  return g.constant(1, 2, v);
}

}  // namespace

RlaState rla_encode(Graph& g, const Model& m, const Bound& b,
                    const LaneContext& lane, const std::vector<Vec2>& past,
                    Var motion_feats, ForwardTrace* trace) {
  const int d = m.cfg.d;
  RlaState state;
  state.wp_hidden = {g.zeros(1, d), g.zeros(1, d)};
  state.next_hidden = {g.zeros(1, d), g.zeros(1, d)};

  for (std::size_t s = 0; s < past.size(); ++s) {
    const Vec2 a_prev = past[s == 0 ? 0 : s - 1];
    Var prev_scaled = scaled_point(g, m.cfg, a_prev);

    Var waypoint = waypoint_step(g, m, b, state, prev_scaled);
    const auto wp_val = g.value(waypoint);
    const AttentionWindow win =
        attention_window(*lane.nodes, a_prev, {wp_val[0], wp_val[1]});

    const double hdg = geom::heading(past, s == 0 ? 0 : s - 1);
    state.next_hidden[1] = lane_attention_row(g, m, b, state.next_hidden[1],
                                              lane, a_prev, hdg, win, trace);

    std::vector<Var> xin{prev_scaled,
                         g.slice_rows(motion_feats, static_cast<int>(s),
                                      static_cast<int>(s) + 1)};
    Var x = g.concat_cols(xin);
    state.next_hidden[0] =
        nn::gru_cell(g, x, state.next_hidden[0], b.gru(m.next_gru0, d));
    state.next_hidden[1] = nn::gru_cell(g, state.next_hidden[0],
                                        state.next_hidden[1],
                                        b.gru(m.next_gru1, d));
  }
  return state;
}

DecodeResult rla_decode(Graph& g, const Model& m, const Bound& b,
                        const LaneContext& lane, const RlaState& encoded,
                        int k_heads, ForwardTrace* trace) {
  if (k_heads < 1)
    throw std::invalid_argument("rla_decode: need at least one head");
  const int d = m.cfg.d;
  const int tf = m.cfg.tf();

  // Tile the encoder state over the K heads.
  RlaState state;
  for (int layer = 0; layer < 2; ++layer) {
    std::vector<Var> wp(static_cast<std::size_t>(k_heads),
                        encoded.wp_hidden[layer]);
    std::vector<Var> nx(static_cast<std::size_t>(k_heads),
                        encoded.next_hidden[layer]);
    state.wp_hidden[layer] = g.concat_rows(wp);
    state.next_hidden[layer] = g.concat_rows(nx);
  }

  std::vector<Var> token_rows(static_cast<std::size_t>(k_heads),
                              b[m.dec_token]);
  Var token = g.concat_rows(token_rows);

  Var positions = g.zeros(k_heads, 2);  // decoding starts at the agent origin
  std::vector<Vec2> cur(static_cast<std::size_t>(k_heads), Vec2{0, 0});
  std::vector<Vec2> prev(cur);

  DecodeResult out;
  out.trajectories.assign(static_cast<std::size_t>(k_heads), {});
  for (auto& t : out.trajectories) t.reserve(static_cast<std::size_t>(tf));

  for (int t = 1; t <= tf; ++t) {
    Var prev_scaled = g.scale(positions, m.cfg.coord_scale);
    Var waypoints = waypoint_step(g, m, b, state, prev_scaled);
    const auto wp_val = g.value(waypoints);

    std::vector<Var> updated_rows;
    updated_rows.reserve(static_cast<std::size_t>(k_heads));
    for (int k = 0; k < k_heads; ++k) {
      const Vec2 wp{wp_val[static_cast<std::size_t>(k) * 2],
                    wp_val[static_cast<std::size_t>(k) * 2 + 1]};
      const AttentionWindow win = attention_window(*lane.nodes, cur[k], wp);
      const Vec2 step = cur[k] - prev[k];
      const double hdg =
          step.norm() >= 1e-6 ? std::atan2(step.y, step.x) : 0.0;
      Var row = g.slice_rows(state.next_hidden[1], k, k + 1);
      updated_rows.push_back(
          lane_attention_row(g, m, b, row, lane, cur[k], hdg, win, trace));
    }
    Var attended = g.concat_rows(updated_rows);

    std::vector<Var> xin{prev_scaled, token};
    Var x = g.concat_cols(xin);
    state.next_hidden[0] =
        nn::gru_cell(g, x, state.next_hidden[0], b.gru(m.next_gru0, d));
    state.next_hidden[1] =
        nn::gru_cell(g, state.next_hidden[0], attended, b.gru(m.next_gru1, d));

    Var trunk = g.relu(nn::linear(g, state.next_hidden[1], b.lin(m.pred_trunk)));
    std::vector<Var> delta_rows;
    delta_rows.reserve(static_cast<std::size_t>(k_heads));
    for (int k = 0; k < k_heads; ++k)
      delta_rows.push_back(nn::linear(g, g.slice_rows(trunk, k, k + 1),
                                      b.lin(m.pred_heads[static_cast<std::size_t>(k)])));
    Var deltas = g.concat_rows(delta_rows);
    positions = g.add(positions, deltas);

    out.step_offsets.push_back(deltas);
    out.step_positions.push_back(positions);
    const auto pv = g.value(positions);
    prev = cur;
    for (int k = 0; k < k_heads; ++k) {
      cur[k] = {pv[static_cast<std::size_t>(k) * 2],
                pv[static_cast<std::size_t>(k) * 2 + 1]};
      out.trajectories[static_cast<std::size_t>(k)].push_back(cur[k]);
    }
  }
  return out;
}

}  // namespace lanecast::model
