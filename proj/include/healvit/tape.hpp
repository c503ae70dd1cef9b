#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "healvit/tensor.hpp"
#include "healvit/windowing.hpp"

namespace healvit::nn {

// Reverse-mode autodiff over a linear tape. Values are computed eagerly;
// backward() replays the tape in reverse, accumulating gradients in a fixed
// order so results are bitwise reproducible.
//
// The primary instantiation uses 64-bit floats; a 32-bit instantiation
// exists for the reduced-precision mode (gradient tolerances relax to 1e-3).
template <typename T>
class TapeT {
 public:
  using Tensor = TensorDataT<T>;

  struct Var {
    std::uint32_t id = 0;
  };

  TapeT() = default;
  TapeT(const TapeT&) = delete;
  TapeT& operator=(const TapeT&) = delete;

  // Constant with no gradient tracking.
  Var leaf(Tensor value);
  // Differentiable input; gradient readable via grad() after backward().
  Var input(Tensor value);
  // Parameter leaf; backward() accumulates into p.grad.
  Var param(ParameterT<T>& p);

  Var add(Var a, Var b);
  Var scale(Var a, double s);
  // y = x W (+ b). x: [N, Din], W: [Din, Dout], b: [Dout].
  Var linear(Var x, Var w, std::optional<Var> b = std::nullopt);
  // Exact erf-based Gaussian error linear unit.
  Var gelu(Var x);
  // Normalizes each contiguous group of `group` columns of every row to zero
  // mean, unit variance (epsilon 1e-5), then applies per-column gain and
  // optional offset. group must divide the column count.
  Var layer_norm(Var x, Var gain, std::optional<Var> offset, std::size_t group);
  Var concat_cols(Var a, Var b);
  // out[i] = x[indices[i]].
  Var gather_rows(Var x, std::vector<std::uint32_t> indices);
  // out[t] = sum of x rows whose index maps to t. Rows accumulate in input
  // order; targets without contributors stay zero.
  Var scatter_add_rows(Var x, std::vector<std::uint32_t> indices,
                       std::size_t target_rows);
  // Scaled dot-product attention within each window of the layout. q, k, v
  // are [N, heads*head_dim]; rows listed in the layout attend to each other,
  // padded slots are ignored. An optional mask (same extent as layout.valid)
  // removes further slots; a window row with no unmasked keys is an error.
  Var window_attention_core(Var q, Var k, Var v,
                            const windowing::WindowLayout& layout,
                            const std::vector<std::uint8_t>* mask,
                            std::size_t heads, std::size_t head_dim);
  // Latitude-weighted mean absolute error against a constant target:
  // sum_ic row_weight[i] * |pred[i,c] - target[i,c]| / (rows * cols).
  Var weighted_l1(Var pred, Tensor target, std::vector<double> row_weights);
  // Arithmetic mean of scalar variables.
  Var mean_of(const std::vector<Var>& scalars);
  // sum(x * coeffs); used to form scalar losses in tests.
  Var weighted_sum(Var x, Tensor coeffs);

  void backward(Var scalar_loss);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void()> backprop;  // empty for leaves
    ParameterT<T>* param = nullptr;
    bool needs_grad = false;
  };

  Var push(Tensor value, bool needs_grad);
  Node& node(Var v) { return nodes_[v.id]; }

  std::vector<Node> nodes_;
};

using Tape = TapeT<double>;
using Var = Tape::Var;

}  // namespace healvit::nn
