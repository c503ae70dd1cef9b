#include "healvit/model.hpp"

#include <stdexcept>
#include <string>

#include "healvit/rng.hpp"

namespace healvit::model {

namespace {

constexpr std::size_t kForecast = 54;
constexpr std::size_t kStatics = 2;
constexpr std::size_t kInput = 2 * kForecast + kStatics;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("ModelConfig: " + what);
}

windowing::WindowLayout layout_for(hpx::MeshLevel level, int w, bool shifted) {
  if (w == 0) return windowing::make_layout(windowing::build_global_window(level));
  return windowing::make_layout(
      shifted ? windowing::build_shifted_windows(level, w)
              : windowing::build_windows(level, w));
}

void check_manifest(const GridField& f, const std::vector<std::string>& want,
                    const GridSpec& grid, const char* what) {
  if (!(f.grid == grid)) {
    throw std::invalid_argument(std::string(what) + ": grid mismatch");
  }
  if (f.channels != want) {
    throw std::invalid_argument(std::string(what) + ": channel manifest mismatch");
  }
}

}  // namespace

void ModelConfig::validate() const {
  require(n_lat >= 2 && n_lon >= 4, "grid must be at least 2x4");
  require(fine_level >= 1, "fine_level must be >= 1");
  require(latent_dim >= 1, "latent_dim must be >= 1");
  require(head_dim >= 1, "head_dim must be >= 1");
  require(latent_dim % head_dim == 0, "head_dim must divide latent_dim");
  require(processor_depth >= 0 && processor_depth % 2 == 0,
          "processor_depth must be even (blocks alternate plain/shifted)");
  require(fine_window >= 1 && fine_window <= fine_level,
          "fine_window must be in [1, fine_level]");
  require(coarse_window >= 0 && coarse_window <= fine_level - 1,
          "coarse_window must be in [0, fine_level - 1]");
  require(threads >= 1, "threads must be >= 1");
}

NormStats NormStats::identity(std::size_t channels, std::size_t statics) {
  NormStats s;
  s.mean.assign(channels, 0.0);
  s.stddev.assign(channels, 1.0);
  s.static_mean.assign(statics, 0.0);
  s.static_stddev.assign(statics, 1.0);
  return s;
}

void NormStats::validate() const {
  if (mean.size() != stddev.size() ||
      static_mean.size() != static_stddev.size()) {
    throw std::invalid_argument("NormStats: mean/stddev size mismatch");
  }
  for (double s : stddev) {
    if (!(s > 0.0)) throw std::invalid_argument("NormStats: nonpositive stddev");
  }
  for (double s : static_stddev) {
    if (!(s > 0.0)) {
      throw std::invalid_argument("NormStats: nonpositive static stddev");
    }
  }
}

nn::Var gather_concat_scatter(nn::Tape& tape, nn::Var state,
                              nn::Var edge_emb_rows,
                              const graphs::BipartiteGraph& g) {
  const nn::Var gathered = tape.gather_rows(state, g.sources);
  const nn::Var cat = tape.concat_cols(edge_emb_rows, gathered);
  return tape.scatter_add_rows(cat, g.targets,
                               static_cast<std::size_t>(g.target_count));
}

HealVit::HealVit(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), grid_(cfg.n_lat, cfg.n_lon) {
  cfg_.validate();
  const hpx::MeshLevel fine(cfg_.fine_level);
  const hpx::MeshLevel coarse(cfg_.fine_level - 1);

  g2m_ = graphs::build_grid2mesh(grid_, fine);
  m2g_ = graphs::build_mesh2grid(grid_, fine, cfg_.threads);
  down_ = graphs::build_downsample(fine);
  up_ = graphs::build_upsample(fine, cfg_.threads);

  fine_plain_ = layout_for(fine, cfg_.fine_window, false);
  fine_shift_ = layout_for(fine, cfg_.fine_window, true);
  coarse_plain_ = layout_for(coarse, cfg_.coarse_window, false);
  coarse_shift_ = layout_for(coarse, cfg_.coarse_window, true);

  const std::size_t c = static_cast<std::size_t>(cfg_.latent_dim);
  const std::size_t c2 = 2 * c;
  const std::size_t emb = kEdgeEmbeddingDim;
  Rng rng(seed);

  const auto make_embedding = [&](const std::string& name,
                                  const graphs::BipartiteGraph& g) {
    const std::size_t rows =
        cfg_.shared_edge_embeddings ? 1 : g.edge_count();
    nn::Parameter& p = store_.create(name, {rows, emb});
    nn::init_truncated_normal(p, rng, 0.02);
    return &p;
  };
  const auto make_weight = [&](const std::string& name, std::size_t in,
                               std::size_t out) {
    nn::Parameter& p = store_.create(name, {in, out});
    nn::init_truncated_normal(p, rng, 0.02);
    return &p;
  };
  const auto make_bias = [&](const std::string& name, std::size_t dim) {
    nn::Parameter& p = store_.create(name, {dim});
    p.decay_exempt = true;
    return &p;
  };
  const auto make_ln = [&](const std::string& prefix, std::size_t dim,
                           nn::Parameter** gain, nn::Parameter** offset) {
    *gain = &store_.create(prefix + ".ln_gain", {dim});
    nn::init_constant(**gain, 1.0);
    (*gain)->decay_exempt = true;
    *offset = make_bias(prefix + ".ln_offset", dim);
  };

  g2m_emb_ = make_embedding("g2m.edge_emb", g2m_);
  enc_w1_ = make_weight("encoder.w1", emb + kInput, c);
  enc_b1_ = make_bias("encoder.b1", c);
  make_ln("encoder", c, &enc_ln_gain_, &enc_ln_offset_);
  enc_w2_ = make_weight("encoder.w2", c, c);
  enc_b2_ = make_bias("encoder.b2", c);

  for (int i = 0; i < 2; ++i) {
    fine_in_.push_back(nn::make_vit_block_params(
        store_, "fine_in." + std::to_string(i), c, rng));
  }

  down_emb_ = make_embedding("down.edge_emb", down_);
  make_ln("down", emb + c, &down_ln_gain_, &down_ln_offset_);
  down_w_ = make_weight("down.w", emb + c, c2);
  down_b_ = make_bias("down.b", c2);

  for (int i = 0; i < cfg_.processor_depth; ++i) {
    coarse_.push_back(nn::make_vit_block_params(
        store_, "coarse." + std::to_string(i), c2, rng));
  }

  up_emb_ = make_embedding("up.edge_emb", up_);
  make_ln("up", emb + c2, &up_ln_gain_, &up_ln_offset_);
  up_w_ = make_weight("up.w", emb + c2, c);
  up_b_ = make_bias("up.b", c);

  for (int i = 0; i < 2; ++i) {
    fine_out_.push_back(nn::make_vit_block_params(
        store_, "fine_out." + std::to_string(i), c2, rng));
  }

  m2g_emb_ = make_embedding("m2g.edge_emb", m2g_);
  make_ln("decoder", emb + c2, &dec_ln_gain_, &dec_ln_offset_);
  dec_w_ = make_weight("decoder.w", emb + c2, kForecast);
  dec_b_ = make_bias("decoder.b", kForecast);

  norm_ = NormStats::identity(kForecast, kStatics);
}

nn::Var HealVit::embedding_rows(nn::Tape& tape, nn::Parameter& emb,
                                std::size_t edges) const {
  const nn::Var v = tape.param(emb);
  if (emb.value.rows() == edges) return v;
  return tape.gather_rows(v, std::vector<std::uint32_t>(edges, 0));
}

nn::Var HealVit::encode(nn::Tape& tape, nn::Var grid_features) const {
  if (tape.value(grid_features).cols() != kInput ||
      tape.value(grid_features).rows() !=
          static_cast<std::size_t>(grid_.node_count())) {
    throw std::invalid_argument("encode: input must be [nodes, 110]");
  }
  const std::size_t c = static_cast<std::size_t>(cfg_.latent_dim);
  const nn::Var emb = embedding_rows(tape, *g2m_emb_, g2m_.edge_count());
  const nn::Var gathered = tape.gather_rows(grid_features, g2m_.sources);
  const nn::Var z = tape.gelu(tape.linear(tape.concat_cols(emb, gathered),
                                          tape.param(*enc_w1_),
                                          tape.param(*enc_b1_)));
  const nn::Var mesh = tape.scatter_add_rows(
      z, g2m_.targets, static_cast<std::size_t>(g2m_.target_count));
  const nn::Var normed = tape.layer_norm(mesh, tape.param(*enc_ln_gain_),
                                         tape.param(*enc_ln_offset_), c);
  return tape.linear(normed, tape.param(*enc_w2_), tape.param(*enc_b2_));
}

nn::Var HealVit::process(nn::Tape& tape, nn::Var mesh_state) const {
  const std::size_t c = static_cast<std::size_t>(cfg_.latent_dim);
  const std::size_t c2 = 2 * c;
  const std::size_t emb = kEdgeEmbeddingDim;
  const nn::AttentionConfig fine_cfg{static_cast<std::size_t>(cfg_.head_dim),
                                     c / cfg_.head_dim};
  const nn::AttentionConfig coarse_cfg{static_cast<std::size_t>(cfg_.head_dim),
                                       c2 / cfg_.head_dim};

  nn::Var x = nn::vit_block(tape, mesh_state, fine_plain_, nullptr, fine_in_[0],
                            fine_cfg);
  x = nn::vit_block(tape, x, fine_shift_, nullptr, fine_in_[1], fine_cfg);
  const nn::Var skip = x;

  nn::Var d = gather_concat_scatter(
      tape, x, embedding_rows(tape, *down_emb_, down_.edge_count()), down_);
  d = tape.layer_norm(d, tape.param(*down_ln_gain_),
                      tape.param(*down_ln_offset_), emb + c);
  d = tape.linear(d, tape.param(*down_w_), tape.param(*down_b_));

  for (int i = 0; i < cfg_.processor_depth; ++i) {
    d = nn::vit_block(tape, d, i % 2 ? coarse_shift_ : coarse_plain_, nullptr,
                      coarse_[i], coarse_cfg);
  }

  nn::Var u = gather_concat_scatter(
      tape, d, embedding_rows(tape, *up_emb_, up_.edge_count()), up_);
  u = tape.layer_norm(u, tape.param(*up_ln_gain_), tape.param(*up_ln_offset_),
                      emb + c2);
  u = tape.linear(u, tape.param(*up_w_), tape.param(*up_b_));

  nn::Var y = tape.concat_cols(u, skip);
  y = nn::vit_block(tape, y, fine_plain_, nullptr, fine_out_[0], coarse_cfg);
  y = nn::vit_block(tape, y, fine_shift_, nullptr, fine_out_[1], coarse_cfg);
  return y;
}

nn::Var HealVit::decode(nn::Tape& tape, nn::Var mesh_state) const {
  const std::size_t c2 = 2 * static_cast<std::size_t>(cfg_.latent_dim);
  nn::Var g = gather_concat_scatter(
      tape, mesh_state, embedding_rows(tape, *m2g_emb_, m2g_.edge_count()),
      m2g_);
  g = tape.layer_norm(g, tape.param(*dec_ln_gain_), tape.param(*dec_ln_offset_),
                      kEdgeEmbeddingDim + c2);
  return tape.linear(g, tape.param(*dec_w_), tape.param(*dec_b_));
}

nn::Var HealVit::forward_normalized(nn::Tape& tape, nn::Var grid_features) const {
  return decode(tape, process(tape, encode(tape, grid_features)));
}

nn::TensorData HealVit::assemble_input(const GridField& x_t,
                                       const GridField& x_prev,
                                       const GridField& statics) const {
  check_manifest(x_t, forecast_channel_manifest(), grid_, "assemble_input x_t");
  check_manifest(x_prev, forecast_channel_manifest(), grid_,
                 "assemble_input x_prev");
  check_manifest(statics, static_channel_manifest(), grid_,
                 "assemble_input statics");
  norm_.validate();
  const std::size_t nodes = static_cast<std::size_t>(grid_.node_count());
  nn::TensorData x = nn::TensorData::zeros({nodes, kInput});
  for (std::size_t i = 0; i < nodes; ++i) {
    double* row = x.v.data() + i * kInput;
    for (std::size_t ch = 0; ch < kForecast; ++ch) {
      row[ch] = (x_prev.channel_data(ch)[i] - norm_.mean[ch]) / norm_.stddev[ch];
      row[kForecast + ch] =
          (x_t.channel_data(ch)[i] - norm_.mean[ch]) / norm_.stddev[ch];
    }
    for (std::size_t s = 0; s < kStatics; ++s) {
      row[2 * kForecast + s] =
          (statics.channel_data(s)[i] - norm_.static_mean[s]) /
          norm_.static_stddev[s];
    }
  }
  return x;
}

GridField HealVit::to_grid_field(const nn::TensorData& normalized) const {
  const std::size_t nodes = static_cast<std::size_t>(grid_.node_count());
  if (normalized.rows() != nodes || normalized.cols() != kForecast) {
    throw std::invalid_argument("to_grid_field: expected [nodes, 54]");
  }
  GridField f(grid_, forecast_channel_manifest());
  for (std::size_t ch = 0; ch < kForecast; ++ch) {
    double* out = f.channel_data(ch);
    for (std::size_t i = 0; i < nodes; ++i) {
      out[i] = normalized.v[i * kForecast + ch] * norm_.stddev[ch] +
               norm_.mean[ch];
    }
  }
  return f;
}

nn::TensorData HealVit::normalized_state(const GridField& x) const {
  check_manifest(x, forecast_channel_manifest(), grid_, "normalized_state");
  const std::size_t nodes = static_cast<std::size_t>(grid_.node_count());
  nn::TensorData t = nn::TensorData::zeros({nodes, kForecast});
  for (std::size_t ch = 0; ch < kForecast; ++ch) {
    const double* in = x.channel_data(ch);
    for (std::size_t i = 0; i < nodes; ++i) {
      t.v[i * kForecast + ch] = (in[i] - norm_.mean[ch]) / norm_.stddev[ch];
    }
  }
  return t;
}

nn::TensorData HealVit::normalized_statics(const GridField& statics) const {
  check_manifest(statics, static_channel_manifest(), grid_,
                 "normalized_statics");
  const std::size_t nodes = static_cast<std::size_t>(grid_.node_count());
  nn::TensorData t = nn::TensorData::zeros({nodes, kStatics});
  for (std::size_t s = 0; s < kStatics; ++s) {
    const double* in = statics.channel_data(s);
    for (std::size_t i = 0; i < nodes; ++i) {
      t.v[i * kStatics + s] =
          (in[i] - norm_.static_mean[s]) / norm_.static_stddev[s];
    }
  }
  return t;
}

GridField HealVit::forward_step(const GridField& x_t, const GridField& x_prev,
                                const GridField& statics) const {
  nn::Tape tape;
  const nn::Var x = tape.leaf(assemble_input(x_t, x_prev, statics));
  const nn::Var y = forward_normalized(tape, x);
  return to_grid_field(tape.value(y));
}

std::vector<GridField> HealVit::rollout(const GridField& x_t0,
                                        const GridField& x_prev,
                                        const GridField& statics,
                                        int steps) const {
  if (steps < 1 || steps > 40) {
    throw std::invalid_argument("rollout: steps must be in [1, 40]");
  }
  std::vector<GridField> out;
  out.reserve(steps);
  GridField prev = x_prev;
  GridField cur = x_t0;
  for (int j = 0; j < steps; ++j) {
    out.push_back(forward_step(cur, prev, statics));
    prev = std::move(cur);
    cur = out.back();
  }
  return out;
}

void HealVit::set_normalization(NormStats stats) {
  stats.validate();
  if (stats.mean.size() != kForecast || stats.static_mean.size() != kStatics) {
    throw std::invalid_argument("set_normalization: wrong channel counts");
  }
  norm_ = std::move(stats);
}

std::int64_t HealVit::parameter_count(bool include_edge_embeddings) const {
  std::int64_t n = 0;
  for (const auto& p : store_.entries()) {
    const bool is_embedding =
        p->name.size() >= 9 &&
        p->name.compare(p->name.size() - 9, 9, ".edge_emb") == 0;
    if (is_embedding && !include_edge_embeddings) continue;
    n += static_cast<std::int64_t>(p->value.size());
  }
  return n;
}

}  // namespace healvit::model
