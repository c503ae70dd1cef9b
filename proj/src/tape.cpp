#include "healvit/tape.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace healvit::nn {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kLnEpsilon = 1e-5;

}  // namespace

template <typename T>
typename TapeT<T>::Var TapeT<T>::push(Tensor value, bool needs_grad) {
  Node n;
  n.grad = Tensor::zeros(value.shape);
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
typename TapeT<T>::Var TapeT<T>::leaf(Tensor value) {
  return push(std::move(value), false);
}

template <typename T>
typename TapeT<T>::Var TapeT<T>::input(Tensor value) {
  return push(std::move(value), true);
}

template <typename T>
typename TapeT<T>::Var TapeT<T>::param(ParameterT<T>& p) {
  Var v = push(p.value, true);
  node(v).param = &p;
  const std::uint32_t id = v.id;
  node(v).backprop = [this, id]() {
    Node& n = nodes_[id];
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      n.param->grad.v[i] += n.grad.v[i];
    }
  };
  return v;
}

template <typename T>
typename TapeT<T>::Var TapeT<T>::add(Var a, Var b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!va.same_shape(vb)) throw std::invalid_argument("add: shape mismatch");
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += vb.v[i];
  const bool ng = node(a).needs_grad || node(b).needs_grad;
  Var y = push(std::move(out), ng);
  if (ng) {
    node(y).backprop = [this, a, b, y]() {
      const Tensor& g = nodes_[y.id].grad;
      if (nodes_[a.id].needs_grad) {
        Tensor& ga = nodes_[a.id].grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i];
      }
      if (nodes_[b.id].needs_grad) {
        Tensor& gb = nodes_[b.id].grad;
        for (std::size_t i = 0; i < g.size(); ++i) gb.v[i] += g.v[i];
      }
    };
  }
  return y;
}

template <typename T>
typename TapeT<T>::Var TapeT<T>::scale(Var a, double s) {
  Tensor out = value(a);
  for (auto& x : out.v) x = static_cast<T>(x * s);
  const bool ng = node(a).needs_grad;
  Var y = push(std::move(out), ng);
  if (ng) {
    node(y).backprop = [this, a, y, s]() {
      const Tensor& g = nodes_[y.id].grad;
      Tensor& ga = nodes_[a.id].grad;
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga.v[i] += static_cast<T>(g.v[i] * s);
      }
    };
  }
  return y;
}

template <typename T>
typename TapeT<T>::Var TapeT<T>::linear(Var x, Var w, std::optional<Var> b) {
  const Tensor& vx = value(x);
  const Tensor& vw = value(w);
  if (vw.shape.size() != 2) throw std::invalid_argument("linear: W must be rank 2");
  const std::size_t n = vx.rows();
  const std::size_t din = vx.cols();
  const std::size_t dout = vw.shape[1];
  if (vw.shape[0] != din) {
    throw std::invalid_argument("linear: W rows " + std::to_string(vw.shape[0]) +
                                " != input cols " + std::to_string(din));
  }
  if (b && value(*b).size() != dout) {
    throw std::invalid_argument("linear: bias size mismatch");
  }
  Tensor out = Tensor::zeros({n, dout});
  for (std::size_t i = 0; i < n; ++i) {
    T* oi = out.v.data() + i * dout;
    const T* xi = vx.v.data() + i * din;
    for (std::size_t k = 0; k < din; ++k) {
      const T xv = xi[k];
      const T* wk = vw.v.data() + k * dout;
      for (std::size_t j = 0; j < dout; ++j) oi[j] += xv * wk[j];
    }
    if (b) {
      const T* bv = value(*b).v.data();
      for (std::size_t j = 0; j < dout; ++j) oi[j] += bv[j];
    }
  }
  const bool ng = node(x).needs_grad || node(w).needs_grad ||
                  (b && node(*b).needs_grad);
  Var y = push(std::move(out), ng);
  if (ng) {
    node(y).backprop = [this, x, w, b, y, n, din, dout]() {
      const Tensor& g = nodes_[y.id].grad;
      const Tensor& vx = nodes_[x.id].value;
      const Tensor& vw = nodes_[w.id].value;
      if (nodes_[x.id].needs_grad) {
        Tensor& gx = nodes_[x.id].grad;
        for (std::size_t i = 0; i < n; ++i) {
          T* gxi = gx.v.data() + i * din;
          const T* gi = g.v.data() + i * dout;
          for (std::size_t k = 0; k < din; ++k) {
            const T* wk = vw.v.data() + k * dout;
            T acc = 0;
            for (std::size_t j = 0; j < dout; ++j) acc += gi[j] * wk[j];
            gxi[k] += acc;
          }
        }
      }
      if (nodes_[w.id].needs_grad) {
        Tensor& gw = nodes_[w.id].grad;
        for (std::size_t i = 0; i < n; ++i) {
          const T* xi = vx.v.data() + i * din;
          const T* gi = g.v.data() + i * dout;
          for (std::size_t k = 0; k < din; ++k) {
            T* gwk = gw.v.data() + k * dout;
            const T xv = xi[k];
            for (std::size_t j = 0; j < dout; ++j) gwk[j] += xv * gi[j];
          }
        }
      }
      if (b && nodes_[b->id].needs_grad) {
        Tensor& gb = nodes_[b->id].grad;
        for (std::size_t i = 0; i < n; ++i) {
          const T* gi = g.v.data() + i * dout;
          for (std::size_t j = 0; j < dout; ++j) gb.v[j] += gi[j];
        }
      }
    };
  }
  return y;
}

template <typename T>
typename TapeT<T>::Var TapeT<T>::gelu(Var x) {
  const Tensor& vx = value(x);
  Tensor out = vx;
  for (auto& e : out.v) {
    const double xv = static_cast<double>(e);
    e = static_cast<T>(0.5 * xv * (1.0 + std::erf(xv * kInvSqrt2)));
  }
  const bool ng = node(x).needs_grad;
  Var y = push(std::move(out), ng);
  if (ng) {
    node(y).backprop = [this, x, y]() {
      const Tensor& g = nodes_[y.id].grad;
      const Tensor& vx = nodes_[x.id].value;
      Tensor& gx = nodes_[x.id].grad;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double xv = static_cast<double>(vx.v[i]);
        const double cdf = 0.5 * (1.0 + std::erf(xv * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * xv * xv);
        gx.v[i] += static_cast<T>(static_cast<double>(g.v[i]) * (cdf + xv * pdf));
      }
    };
  }
  return y;
}

template <typename T>
typename TapeT<T>::Var TapeT<T>::layer_norm(Var x, Var gain,
                                            std::optional<Var> offset,
                                            std::size_t group) {
  const Tensor& vx = value(x);
  const std::size_t d = vx.cols();
  const std::size_t n = vx.rows();
  if (group == 0 || d % group != 0) {
    throw std::invalid_argument("layer_norm: group must divide columns");
  }
  if (value(gain).size() != d) {
    throw std::invalid_argument("layer_norm: gain size mismatch");
  }
  if (offset && value(*offset).size() != d) {
    throw std::invalid_argument("layer_norm: offset size mismatch");
  }
  const std::size_t groups_per_row = d / group;
  // Normalized values and inverse stddevs are reused by the backward pass.
  auto xhat = std::make_shared<std::vector<T>>(vx.size());
  auto inv_std = std::make_shared<std::vector<T>>(n * groups_per_row);
  Tensor out = Tensor::zeros(vx.shape);
  const T* gv = value(gain).v.data();
  const T* ov = offset ? value(*offset).v.data() : nullptr;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t g = 0; g < groups_per_row; ++g) {
      const std::size_t base = i * d + g * group;
      T mean = 0;
      for (std::size_t c = 0; c < group; ++c) mean += vx.v[base + c];
      mean /= static_cast<T>(group);
      T var = 0;
      for (std::size_t c = 0; c < group; ++c) {
        const T dx = vx.v[base + c] - mean;
        var += dx * dx;
      }
      var /= static_cast<T>(group);
      const T is = T(1) / std::sqrt(var + static_cast<T>(kLnEpsilon));
      (*inv_std)[i * groups_per_row + g] = is;
      for (std::size_t c = 0; c < group; ++c) {
        const T xh = (vx.v[base + c] - mean) * is;
        (*xhat)[base + c] = xh;
        const std::size_t col = g * group + c;
        out.v[base + c] = gv[col] * xh + (ov ? ov[col] : T(0));
      }
    }
  }
  const bool ng = node(x).needs_grad || node(gain).needs_grad ||
                  (offset && node(*offset).needs_grad);
  Var y = push(std::move(out), ng);
  if (ng) {
    node(y).backprop = [this, x, gain, offset, y, xhat, inv_std, n, d, group,
                        groups_per_row]() {
      const Tensor& g = nodes_[y.id].grad;
      const T* gv = nodes_[gain.id].value.v.data();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t gr = 0; gr < groups_per_row; ++gr) {
          const std::size_t base = i * d + gr * group;
          const T is = (*inv_std)[i * groups_per_row + gr];
          // dxh = dy * gain; reduce to the two sums the backward needs.
          T sum_dxh = 0, sum_dxh_xh = 0;
          for (std::size_t c = 0; c < group; ++c) {
            const std::size_t col = gr * group + c;
            const T dxh = g.v[base + c] * gv[col];
            sum_dxh += dxh;
            sum_dxh_xh += dxh * (*xhat)[base + c];
          }
          if (nodes_[x.id].needs_grad) {
            Tensor& gx = nodes_[x.id].grad;
            const T inv_g = T(1) / static_cast<T>(group);
            for (std::size_t c = 0; c < group; ++c) {
              const std::size_t col = gr * group + c;
              const T dxh = g.v[base + c] * gv[col];
              gx.v[base + c] +=
                  is * (dxh - inv_g * sum_dxh -
                        inv_g * (*xhat)[base + c] * sum_dxh_xh);
            }
          }
          if (nodes_[gain.id].needs_grad) {
            Tensor& gg = nodes_[gain.id].grad;
            for (std::size_t c = 0; c < group; ++c) {
              const std::size_t col = gr * group + c;
              gg.v[col] += g.v[base + c] * (*xhat)[base + c];
            }
          }
          if (offset && nodes_[offset->id].needs_grad) {
            Tensor& go = nodes_[offset->id].grad;
            for (std::size_t c = 0; c < group; ++c) {
              go.v[gr * group + c] += g.v[base + c];
            }
          }
        }
      }
    };
  }
  return y;
}

template <typename T>
typename TapeT<T>::Var TapeT<T>::concat_cols(Var a, Var b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  const std::size_t n = va.rows();
  if (vb.rows() != n) throw std::invalid_argument("concat_cols: row mismatch");
  const std::size_t ca = va.cols();
  const std::size_t cb = vb.cols();
  Tensor out = Tensor::zeros({n, ca + cb});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < ca; ++c) out.v[i * (ca + cb) + c] = va.v[i * ca + c];
    for (std::size_t c = 0; c < cb; ++c) {
      out.v[i * (ca + cb) + ca + c] = vb.v[i * cb + c];
    }
  }
  const bool ng = node(a).needs_grad || node(b).needs_grad;
  Var y = push(std::move(out), ng);
  if (ng) {
    node(y).backprop = [this, a, b, y, n, ca, cb]() {
      const Tensor& g = nodes_[y.id].grad;
      if (nodes_[a.id].needs_grad) {
        Tensor& ga = nodes_[a.id].grad;
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t c = 0; c < ca; ++c) {
            ga.v[i * ca + c] += g.v[i * (ca + cb) + c];
          }
        }
      }
      if (nodes_[b.id].needs_grad) {
        Tensor& gb = nodes_[b.id].grad;
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t c = 0; c < cb; ++c) {
            gb.v[i * cb + c] += g.v[i * (ca + cb) + ca + c];
          }
        }
      }
    };
  }
  return y;
}

template <typename T>
typename TapeT<T>::Var TapeT<T>::gather_rows(Var x,
                                             std::vector<std::uint32_t> indices) {
  const Tensor& vx = value(x);
  const std::size_t d = vx.cols();
  const std::size_t rows = vx.rows();
  Tensor out = Tensor::zeros({indices.size(), d});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows) throw std::out_of_range("gather_rows: index");
    for (std::size_t c = 0; c < d; ++c) {
      out.v[i * d + c] = vx.v[indices[i] * d + c];
    }
  }
  const bool ng = node(x).needs_grad;
  Var y = push(std::move(out), ng);
  if (ng) {
    auto idx = std::make_shared<std::vector<std::uint32_t>>(std::move(indices));
    node(y).backprop = [this, x, y, idx, d]() {
      const Tensor& g = nodes_[y.id].grad;
      Tensor& gx = nodes_[x.id].grad;
      for (std::size_t i = 0; i < idx->size(); ++i) {
        for (std::size_t c = 0; c < d; ++c) {
          gx.v[(*idx)[i] * d + c] += g.v[i * d + c];
        }
      }
    };
  }
  return y;
}

template <typename T>
typename TapeT<T>::Var TapeT<T>::scatter_add_rows(
    Var x, std::vector<std::uint32_t> indices, std::size_t target_rows) {
  const Tensor& vx = value(x);
  const std::size_t d = vx.cols();
  if (indices.size() != vx.rows()) {
    throw std::invalid_argument("scatter_add_rows: one index per input row");
  }
  Tensor out = Tensor::zeros({target_rows, d});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= target_rows) {
      throw std::out_of_range("scatter_add_rows: index");
    }
    for (std::size_t c = 0; c < d; ++c) {
      out.v[indices[i] * d + c] += vx.v[i * d + c];
    }
  }
  const bool ng = node(x).needs_grad;
  Var y = push(std::move(out), ng);
  if (ng) {
    auto idx = std::make_shared<std::vector<std::uint32_t>>(std::move(indices));
    node(y).backprop = [this, x, y, idx, d]() {
      const Tensor& g = nodes_[y.id].grad;
      Tensor& gx = nodes_[x.id].grad;
      for (std::size_t i = 0; i < idx->size(); ++i) {
        for (std::size_t c = 0; c < d; ++c) {
          gx.v[i * d + c] += g.v[(*idx)[i] * d + c];
        }
      }
    };
  }
  return y;
}

template <typename T>
typename TapeT<T>::Var TapeT<T>::window_attention_core(
    Var q, Var k, Var v, const windowing::WindowLayout& layout,
    const std::vector<std::uint8_t>* mask, std::size_t heads,
    std::size_t head_dim) {
  const Tensor& vq = value(q);
  const Tensor& vk = value(k);
  const Tensor& vv = value(v);
  const std::size_t dm = heads * head_dim;
  if (vq.cols() != dm || !vq.same_shape(vk) || !vq.same_shape(vv)) {
    throw std::invalid_argument("window_attention_core: shape mismatch");
  }
  if (mask && mask->size() != layout.valid.size()) {
    throw std::invalid_argument("window_attention_core: mask size mismatch");
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(head_dim));

  // Member row ids per window after masking, and softmax probabilities
  // (heads x members x members per window), kept for the backward pass.
  auto members = std::make_shared<std::vector<std::vector<std::uint32_t>>>(
      layout.num_windows);
  auto probs = std::make_shared<std::vector<std::vector<T>>>(layout.num_windows);

  Tensor out = Tensor::zeros(vq.shape);
  for (std::size_t w = 0; w < layout.num_windows; ++w) {
    auto& mem = (*members)[w];
    for (std::size_t s = 0; s < layout.max_size; ++s) {
      const std::size_t slot = w * layout.max_size + s;
      if (!layout.valid[slot]) continue;
      if (mask && !(*mask)[slot]) continue;
      mem.push_back(static_cast<std::uint32_t>(layout.members[slot]));
    }
    const std::size_t s = mem.size();
    if (s == 0) continue;
    auto& pw = (*probs)[w];
    pw.assign(heads * s * s, T(0));
    std::vector<T> scores(s);
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t hoff = h * head_dim;
      for (std::size_t i = 0; i < s; ++i) {
        const T* qi = vq.v.data() + mem[i] * dm + hoff;
        T max_score = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < s; ++j) {
          const T* kj = vk.v.data() + mem[j] * dm + hoff;
          T dot = 0;
          for (std::size_t c = 0; c < head_dim; ++c) dot += qi[c] * kj[c];
          scores[j] = dot * static_cast<T>(inv_sqrt_d);
          max_score = std::max(max_score, scores[j]);
        }
        T denom = 0;
        for (std::size_t j = 0; j < s; ++j) {
          scores[j] = std::exp(scores[j] - max_score);
          denom += scores[j];
        }
        T* pi = pw.data() + (h * s + i) * s;
        T* oi = out.v.data() + mem[i] * dm + hoff;
        for (std::size_t j = 0; j < s; ++j) {
          pi[j] = scores[j] / denom;
          const T* vj = vv.v.data() + mem[j] * dm + hoff;
          for (std::size_t c = 0; c < head_dim; ++c) oi[c] += pi[j] * vj[c];
        }
      }
    }
  }
  const bool ng =
      node(q).needs_grad || node(k).needs_grad || node(v).needs_grad;
  Var y = push(std::move(out), ng);
  if (ng) {
    node(y).backprop = [this, q, k, v, y, members, probs, heads, head_dim, dm,
                        inv_sqrt_d]() {
      const Tensor& g = nodes_[y.id].grad;
      const Tensor& vq = nodes_[q.id].value;
      const Tensor& vk = nodes_[k.id].value;
      const Tensor& vv = nodes_[v.id].value;
      Tensor& gq = nodes_[q.id].grad;
      Tensor& gk = nodes_[k.id].grad;
      Tensor& gv = nodes_[v.id].grad;
      const bool nq = nodes_[q.id].needs_grad;
      const bool nk = nodes_[k.id].needs_grad;
      const bool nv = nodes_[v.id].needs_grad;
      for (std::size_t w = 0; w < members->size(); ++w) {
        const auto& mem = (*members)[w];
        const std::size_t s = mem.size();
        if (s == 0) continue;
        const auto& pw = (*probs)[w];
        std::vector<T> dscore(s);
        for (std::size_t h = 0; h < heads; ++h) {
          const std::size_t hoff = h * head_dim;
          for (std::size_t i = 0; i < s; ++i) {
            const T* pi = pw.data() + (h * s + i) * s;
            const T* gi = g.v.data() + mem[i] * dm + hoff;
            // dp[j] = g_i . v_j ; dscore = p * (dp - sum_l p_l dp_l)
            T dot_sum = 0;
            for (std::size_t j = 0; j < s; ++j) {
              const T* vj = vv.v.data() + mem[j] * dm + hoff;
              T dp = 0;
              for (std::size_t c = 0; c < head_dim; ++c) dp += gi[c] * vj[c];
              dscore[j] = dp;
              dot_sum += pi[j] * dp;
              if (nv) {
                T* gvj = gv.v.data() + mem[j] * dm + hoff;
                for (std::size_t c = 0; c < head_dim; ++c) {
                  gvj[c] += pi[j] * gi[c];
                }
              }
            }
            for (std::size_t j = 0; j < s; ++j) {
              const T ds =
                  pi[j] * (dscore[j] - dot_sum) * static_cast<T>(inv_sqrt_d);
              if (nq) {
                T* gqi = gq.v.data() + mem[i] * dm + hoff;
                const T* kj = vk.v.data() + mem[j] * dm + hoff;
                for (std::size_t c = 0; c < head_dim; ++c) gqi[c] += ds * kj[c];
              }
              if (nk) {
                T* gkj = gk.v.data() + mem[j] * dm + hoff;
                const T* qi = vq.v.data() + mem[i] * dm + hoff;
                for (std::size_t c = 0; c < head_dim; ++c) gkj[c] += ds * qi[c];
              }
            }
          }
        }
      }
    };
  }
  return y;
}

template <typename T>
typename TapeT<T>::Var TapeT<T>::weighted_l1(Var pred, Tensor target,
                                             std::vector<double> row_weights) {
  const Tensor& vp = value(pred);
  if (!vp.same_shape(target)) {
    throw std::invalid_argument("weighted_l1: shape mismatch");
  }
  const std::size_t n = vp.rows();
  const std::size_t d = vp.cols();
  if (row_weights.size() != n) {
    throw std::invalid_argument("weighted_l1: one weight per row");
  }
  const double inv = 1.0 / (static_cast<double>(n) * static_cast<double>(d));
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0;
    for (std::size_t c = 0; c < d; ++c) {
      row += std::abs(static_cast<double>(vp.v[i * d + c]) -
                      static_cast<double>(target.v[i * d + c]));
    }
    acc += row_weights[i] * row;
  }
  Tensor out = Tensor::zeros({1});
  out.v[0] = static_cast<T>(acc * inv);
  const bool ng = node(pred).needs_grad;
  Var y = push(std::move(out), ng);
  if (ng) {
    auto tgt = std::make_shared<Tensor>(std::move(target));
    auto w = std::make_shared<std::vector<double>>(std::move(row_weights));
    node(y).backprop = [this, pred, y, tgt, w, n, d, inv]() {
      const T gy = nodes_[y.id].grad.v[0];
      const Tensor& vp = nodes_[pred.id].value;
      Tensor& gp = nodes_[pred.id].grad;
      for (std::size_t i = 0; i < n; ++i) {
        const double wi = (*w)[i] * inv;
        for (std::size_t c = 0; c < d; ++c) {
          const double diff = static_cast<double>(vp.v[i * d + c]) -
                              static_cast<double>(tgt->v[i * d + c]);
          const double s = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
          gp.v[i * d + c] += static_cast<T>(static_cast<double>(gy) * wi * s);
        }
      }
    };
  }
  return y;
}

template <typename T>
typename TapeT<T>::Var TapeT<T>::mean_of(const std::vector<Var>& scalars) {
  if (scalars.empty()) throw std::invalid_argument("mean_of: empty");
  double acc = 0;
  bool ng = false;
  for (Var s : scalars) {
    if (value(s).size() != 1) throw std::invalid_argument("mean_of: non-scalar");
    acc += static_cast<double>(value(s).v[0]);
    ng = ng || node(s).needs_grad;
  }
  Tensor out = Tensor::zeros({1});
  out.v[0] = static_cast<T>(acc / static_cast<double>(scalars.size()));
  Var y = push(std::move(out), ng);
  if (ng) {
    auto ids = std::make_shared<std::vector<Var>>(scalars);
    node(y).backprop = [this, y, ids]() {
      const T g = nodes_[y.id].grad.v[0] / static_cast<T>(ids->size());
      for (Var s : *ids) {
        if (nodes_[s.id].needs_grad) nodes_[s.id].grad.v[0] += g;
      }
    };
  }
  return y;
}

template <typename T>
typename TapeT<T>::Var TapeT<T>::weighted_sum(Var x, Tensor coeffs) {
  const Tensor& vx = value(x);
  if (!vx.same_shape(coeffs)) {
    throw std::invalid_argument("weighted_sum: shape mismatch");
  }
  double acc = 0;
  for (std::size_t i = 0; i < vx.size(); ++i) {
    acc += static_cast<double>(vx.v[i]) * static_cast<double>(coeffs.v[i]);
  }
  Tensor out = Tensor::zeros({1});
  out.v[0] = static_cast<T>(acc);
  const bool ng = node(x).needs_grad;
  Var y = push(std::move(out), ng);
  if (ng) {
    auto c = std::make_shared<Tensor>(std::move(coeffs));
    node(y).backprop = [this, x, y, c]() {
      const T g = nodes_[y.id].grad.v[0];
      Tensor& gx = nodes_[x.id].grad;
      for (std::size_t i = 0; i < gx.size(); ++i) gx.v[i] += g * c->v[i];
    };
  }
  return y;
}

template <typename T>
void TapeT<T>::backward(Var scalar_loss) {
  if (value(scalar_loss).size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar");
  }
  node(scalar_loss).grad.v[0] = T(1);
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (nodes_[i].needs_grad && nodes_[i].backprop) nodes_[i].backprop();
  }
}

template class TapeT<double>;
template class TapeT<float>;

}  // namespace healvit::nn
