#pragma once

#include <string>
#include <vector>

#include "healvit/rng.hpp"
#include "healvit/tape.hpp"
#include "healvit/windowing.hpp"

namespace healvit::nn {

struct AttentionConfig {
  std::size_t head_dim = 32;
  std::size_t num_heads = 1;

  std::size_t model_dim() const { return head_dim * num_heads; }
};

// Windowed multi-head attention with query/key LayerNorm and no biases in
// the q/k/v projections.
struct AttentionParams {
  Parameter* wq = nullptr;
  Parameter* wk = nullptr;
  Parameter* wv = nullptr;
  Parameter* q_gain = nullptr;  // per-head LayerNorm gains, no offsets
  Parameter* k_gain = nullptr;
  Parameter* wo = nullptr;
  Parameter* bo = nullptr;
};

// Transformer block with parallel MLP and attention branches reading the
// same pre-normalized input, and a 4x hidden MLP.
struct VitBlockParams {
  Parameter* ln_gain = nullptr;
  Parameter* ln_offset = nullptr;
  AttentionParams attn;
  Parameter* mlp_w1 = nullptr;
  Parameter* mlp_b1 = nullptr;
  Parameter* mlp_w2 = nullptr;
  Parameter* mlp_b2 = nullptr;
};

void init_truncated_normal(Parameter& p, Rng& rng, double stddev);
void init_constant(Parameter& p, double value);

AttentionParams make_attention_params(ParamStore& store,
                                      const std::string& prefix,
                                      std::size_t dim, Rng& rng);

VitBlockParams make_vit_block_params(ParamStore& store,
                                     const std::string& prefix,
                                     std::size_t dim, Rng& rng);

Var windowed_attention(Tape& tape, Var x, const windowing::WindowLayout& layout,
                       const std::vector<std::uint8_t>* mask,
                       const AttentionParams& params, AttentionConfig cfg);

Var vit_block(Tape& tape, Var x, const windowing::WindowLayout& layout,
              const std::vector<std::uint8_t>* mask,
              const VitBlockParams& params, AttentionConfig cfg);

}  // namespace healvit::nn
