#pragma once

#include <cstdint>
#include <vector>

#include "healvit/blocks.hpp"
#include "healvit/graphs.hpp"
#include "healvit/grid.hpp"
#include "healvit/tape.hpp"
#include "healvit/windowing.hpp"

namespace healvit::model {

inline constexpr int kEdgeEmbeddingDim = 32;

struct ModelConfig {
  int n_lat = 46;
  int n_lon = 90;
  int fine_level = 3;       // mesh refinement of the encoder/decoder level
  int latent_dim = 16;      // encoder output width C; processor peaks at 2C
  int processor_depth = 4;  // blocks on the coarse mesh; even, plain/shifted
  int head_dim = 8;
  int fine_window = 3;      // window parameter for fine-level blocks
  int coarse_window = 2;    // 0 puts the whole coarse mesh in one window
  // One trainable embedding per edge when false; a single embedding shared
  // by all edges of a graph when true.
  bool shared_edge_embeddings = false;
  int threads = 1;  // graph construction only

  // Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

// Per-channel normalization applied to inputs and inverted on outputs. The
// forecast statistics are shared between the two input time steps.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<double> static_mean;
  std::vector<double> static_stddev;

  // Identity stats (mean 0, stddev 1) for the given channel counts.
  static NormStats identity(std::size_t channels, std::size_t statics);
  void validate() const;  // sizes and strictly positive spreads
};

// Shared plumbing of the message-passing stages: every edge contributes
// concat(embedding row, state[source]) to the sum at its target node.
// edge_emb_rows must already have one row per edge.
nn::Var gather_concat_scatter(nn::Tape& tape, nn::Var state,
                              nn::Var edge_emb_rows,
                              const graphs::BipartiteGraph& g);

// Encoder / processor / decoder forecasting model on the HEALPix mesh.
//
// encode: per grid node, concat(edge embedding, input features) through a
//         GeLU MLP, summed onto the containing pixel, LayerNorm, linear to C.
// process: 2 windowed transformer blocks at C, downsample to the next
//          coarser mesh at 2C, processor_depth blocks, upsample back to C,
//          concat with the pre-downsample skip, 2 final blocks at 2C.
// decode: per grid node, sum over the 4 nearest pixels of concat(edge
//         embedding, mesh state), LayerNorm, linear to the 54 channels.
//
// Blocks alternate plain and shifted window partitions.
class HealVit {
 public:
  HealVit(const ModelConfig& cfg, std::uint64_t seed);

  nn::Var encode(nn::Tape& tape, nn::Var grid_features) const;
  nn::Var process(nn::Tape& tape, nn::Var mesh_state) const;
  nn::Var decode(nn::Tape& tape, nn::Var mesh_state) const;
  // encode, process, decode on a [nodes, 110] normalized input.
  nn::Var forward_normalized(nn::Tape& tape, nn::Var grid_features) const;

  // One forecast step on raw fields: normalize, predict, de-normalize.
  GridField forward_step(const GridField& x_t, const GridField& x_prev,
                         const GridField& statics) const;
  // Autoregressive forecast; step j feeds on predictions j-1 and j-2.
  // steps must be in [1, 40].
  std::vector<GridField> rollout(const GridField& x_t0,
                                 const GridField& x_prev,
                                 const GridField& statics, int steps) const;

  // [nodes, 110] normalized rows ordered (previous state, current state,
  // statics); validates manifests and grids.
  nn::TensorData assemble_input(const GridField& x_t, const GridField& x_prev,
                                const GridField& statics) const;
  // De-normalizes a [nodes, 54] prediction into a grid field.
  GridField to_grid_field(const nn::TensorData& normalized) const;
  // [nodes, 54] normalized rows of a raw forecast-state field.
  nn::TensorData normalized_state(const GridField& x) const;
  // [nodes, 2] normalized rows of the static inputs.
  nn::TensorData normalized_statics(const GridField& statics) const;

  const ModelConfig& config() const { return cfg_; }
  const GridSpec& grid() const { return grid_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }
  const NormStats& normalization() const { return norm_; }
  void set_normalization(NormStats stats);

  // Trainable scalar count; edge embeddings are the only part that scales
  // with resolution, so they can be excluded for architecture comparisons.
  std::int64_t parameter_count(bool include_edge_embeddings) const;

 private:
  nn::Var embedding_rows(nn::Tape& tape, nn::Parameter& emb,
                         std::size_t edges) const;

  ModelConfig cfg_;
  GridSpec grid_;
  graphs::BipartiteGraph g2m_;
  graphs::BipartiteGraph m2g_;
  graphs::BipartiteGraph down_;
  graphs::BipartiteGraph up_;
  windowing::WindowLayout fine_plain_;
  windowing::WindowLayout fine_shift_;
  windowing::WindowLayout coarse_plain_;
  windowing::WindowLayout coarse_shift_;

  nn::ParamStore store_;
  NormStats norm_;

  nn::Parameter* g2m_emb_ = nullptr;
  nn::Parameter* enc_w1_ = nullptr;
  nn::Parameter* enc_b1_ = nullptr;
  nn::Parameter* enc_ln_gain_ = nullptr;
  nn::Parameter* enc_ln_offset_ = nullptr;
  nn::Parameter* enc_w2_ = nullptr;
  nn::Parameter* enc_b2_ = nullptr;
  std::vector<nn::VitBlockParams> fine_in_;
  nn::Parameter* down_emb_ = nullptr;
  nn::Parameter* down_ln_gain_ = nullptr;
  nn::Parameter* down_ln_offset_ = nullptr;
  nn::Parameter* down_w_ = nullptr;
  nn::Parameter* down_b_ = nullptr;
  std::vector<nn::VitBlockParams> coarse_;
  nn::Parameter* up_emb_ = nullptr;
  nn::Parameter* up_ln_gain_ = nullptr;
  nn::Parameter* up_ln_offset_ = nullptr;
  nn::Parameter* up_w_ = nullptr;
  nn::Parameter* up_b_ = nullptr;
  std::vector<nn::VitBlockParams> fine_out_;
  nn::Parameter* m2g_emb_ = nullptr;
  nn::Parameter* dec_ln_gain_ = nullptr;
  nn::Parameter* dec_ln_offset_ = nullptr;
  nn::Parameter* dec_w_ = nullptr;
  nn::Parameter* dec_b_ = nullptr;
};

}  // namespace healvit::model
