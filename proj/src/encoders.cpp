#include "lanecast/encoders.hpp"

namespace lanecast::model {

Var multi_scale_conv(Graph& g, const Bound& b, const MultiScaleIdx& idx, Var x) {
  Var c3 = g.relu(g.conv1d_same(x, b[idx.k3.w], b[idx.k3.b], 3));
  Var c5 = g.relu(g.conv1d_same(x, b[idx.k5.w], b[idx.k5.b], 5));
  Var c7 = g.relu(g.conv1d_same(x, b[idx.k7.w], b[idx.k7.b], 7));
  std::vector<Var> parts{c3, c5, c7};
  return g.relu(nn::linear(g, g.concat_cols(parts), b.lin(idx.proj)));
}

namespace {

// (x, y, dx, dy) channels, coordinate-scaled; the first step has no
// predecessor so its displacement is zero.
Var motion_channels(Graph& g, const ModelConfig& cfg,
                    const std::vector<Vec2>& past) {
  const double cs = cfg.coord_scale;
  std::vector<double> rows;
  rows.reserve(past.size() * 4);
  for (std::size_t t = 0; t < past.size(); ++t) {
    const Vec2 p = past[t];
    const Vec2 d = t == 0 ? Vec2{0, 0} : past[t] - past[t - 1];
    rows.insert(rows.end(), {cs * p.x, cs * p.y, cs * d.x, cs * d.y});
  }
  return g.constant(static_cast<int>(past.size()), 4, rows);
}

}  // namespace

Var encode_target(Graph& g, const Model& m, const Bound& b,
                  const std::vector<Vec2>& past) {
  return multi_scale_conv(g, b, m.target_enc, motion_channels(g, m.cfg, past));
}

Var encode_social(Graph& g, const Model& m, const Bound& b,
                  const std::vector<std::vector<Vec2>>& pasts) {
  if (pasts.empty()) return Var{};
  std::vector<Var> rows;
  rows.reserve(pasts.size());
  const nn::GruLayer gru = b.gru(m.social_gru, m.cfg.d);
  for (const auto& past : pasts) {
    Var feats = multi_scale_conv(g, b, m.social_enc,
                                 motion_channels(g, m.cfg, past));
    Var h = g.zeros(1, m.cfg.d);
    for (int t = 0; t < static_cast<int>(past.size()); ++t)
      h = nn::gru_cell(g, g.slice_rows(feats, t, t + 1), h, gru);
    rows.push_back(h);
  }
  return g.concat_rows(rows);
}

Var encode_lane(Graph& g, const Model& m, const Bound& b, const Polyline& prop) {
  const double cs = m.cfg.coord_scale;
  const int h = static_cast<int>(prop.nodes.size());
  std::vector<double> rows;
  rows.reserve(static_cast<std::size_t>(h) * 4);
  for (int i = 0; i < h; ++i) {
    const Vec2 p = prop.nodes[static_cast<std::size_t>(i)];
    const double dir = geom::lane_direction(prop, i);
    rows.insert(rows.end(), {cs * p.x, cs * p.y, std::sin(dir), std::cos(dir)});
  }
  return multi_scale_conv(g, b, m.lane_enc, g.constant(h, 4, rows));
}

}  // namespace lanecast::model
