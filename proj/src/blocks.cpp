#include "healvit/blocks.hpp"

#include <stdexcept>

namespace healvit::nn {

void init_truncated_normal(Parameter& p, Rng& rng, double stddev) {
  for (auto& v : p.value.v) v = rng.truncated_normal(stddev);
}

void init_constant(Parameter& p, double value) {
  for (auto& v : p.value.v) v = value;
}

AttentionParams make_attention_params(ParamStore& store,
                                      const std::string& prefix,
                                      std::size_t dim, Rng& rng) {
  AttentionParams p;
  p.wq = &store.create(prefix + ".wq", {dim, dim});
  p.wk = &store.create(prefix + ".wk", {dim, dim});
  p.wv = &store.create(prefix + ".wv", {dim, dim});
  p.q_gain = &store.create(prefix + ".q_gain", {dim});
  p.k_gain = &store.create(prefix + ".k_gain", {dim});
  p.wo = &store.create(prefix + ".wo", {dim, dim});
  p.bo = &store.create(prefix + ".bo", {dim});
  init_truncated_normal(*p.wq, rng, 0.02);
  init_truncated_normal(*p.wk, rng, 0.02);
  init_truncated_normal(*p.wv, rng, 0.02);
  init_constant(*p.q_gain, 1.0);
  init_constant(*p.k_gain, 1.0);
  init_truncated_normal(*p.wo, rng, 0.02);
  p.q_gain->decay_exempt = true;
  p.k_gain->decay_exempt = true;
  p.bo->decay_exempt = true;
  return p;
}

VitBlockParams make_vit_block_params(ParamStore& store,
                                     const std::string& prefix,
                                     std::size_t dim, Rng& rng) {
  VitBlockParams p;
  p.ln_gain = &store.create(prefix + ".ln_gain", {dim});
  p.ln_offset = &store.create(prefix + ".ln_offset", {dim});
  init_constant(*p.ln_gain, 1.0);
  p.ln_gain->decay_exempt = true;
  p.ln_offset->decay_exempt = true;
  p.attn = make_attention_params(store, prefix + ".attn", dim, rng);
  const std::size_t hidden = 4 * dim;
  p.mlp_w1 = &store.create(prefix + ".mlp_w1", {dim, hidden});
  p.mlp_b1 = &store.create(prefix + ".mlp_b1", {hidden});
  p.mlp_w2 = &store.create(prefix + ".mlp_w2", {hidden, dim});
  p.mlp_b2 = &store.create(prefix + ".mlp_b2", {dim});
  init_truncated_normal(*p.mlp_w1, rng, 0.02);
  init_truncated_normal(*p.mlp_w2, rng, 0.02);
  p.mlp_b1->decay_exempt = true;
  p.mlp_b2->decay_exempt = true;
  return p;
}

Var windowed_attention(Tape& tape, Var x, const windowing::WindowLayout& layout,
                       const std::vector<std::uint8_t>* mask,
                       const AttentionParams& params, AttentionConfig cfg) {
  if (tape.value(x).cols() != cfg.model_dim()) {
    throw std::invalid_argument("windowed_attention: dim mismatch");
  }
  const Var q = tape.linear(x, tape.param(*params.wq));
  const Var k = tape.linear(x, tape.param(*params.wk));
  const Var v = tape.linear(x, tape.param(*params.wv));
  const Var qn =
      tape.layer_norm(q, tape.param(*params.q_gain), std::nullopt, cfg.head_dim);
  const Var kn =
      tape.layer_norm(k, tape.param(*params.k_gain), std::nullopt, cfg.head_dim);
  const Var core = tape.window_attention_core(qn, kn, v, layout, mask,
                                              cfg.num_heads, cfg.head_dim);
  return tape.linear(core, tape.param(*params.wo), tape.param(*params.bo));
}

Var vit_block(Tape& tape, Var x, const windowing::WindowLayout& layout,
              const std::vector<std::uint8_t>* mask,
              const VitBlockParams& params, AttentionConfig cfg) {
  const std::size_t dim = cfg.model_dim();
  const Var normed = tape.layer_norm(x, tape.param(*params.ln_gain),
                                     tape.param(*params.ln_offset), dim);
  const Var attn_out =
      windowed_attention(tape, normed, layout, mask, params.attn, cfg);
  const Var hidden =
      tape.gelu(tape.linear(normed, tape.param(*params.mlp_w1),
                            tape.param(*params.mlp_b1)));
  const Var mlp_out = tape.linear(hidden, tape.param(*params.mlp_w2),
                                  tape.param(*params.mlp_b2));
  return tape.add(tape.add(x, mlp_out), attn_out);
}

}  // namespace healvit::nn
