#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace healvit::nn {

// Dense row-major tensor. Most code treats it as [rows, cols] with the last
// extent as the feature axis.
template <typename T>
struct TensorDataT {
  std::vector<std::size_t> shape;
  std::vector<T> v;

  TensorDataT() = default;

  static TensorDataT zeros(std::vector<std::size_t> extents) {
    TensorDataT t;
    t.shape = std::move(extents);
    t.v.assign(t.element_count(t.shape), T{0});
    return t;
  }

  static std::size_t element_count(const std::vector<std::size_t>& extents) {
    std::size_t n = 1;
    for (std::size_t e : extents) n *= e;
    return n;
  }

  std::size_t size() const { return v.size(); }
  // Last extent; 1 for rank-0/scalars.
  std::size_t cols() const { return shape.empty() ? 1 : shape.back(); }
  std::size_t rows() const { return cols() == 0 ? 0 : size() / cols(); }

  bool same_shape(const TensorDataT& o) const { return shape == o.shape; }
};

using TensorData = TensorDataT<double>;

template <typename T>
struct ParameterT {
  std::string name;
  TensorDataT<T> value;
  TensorDataT<T> grad;
  bool trainable = true;
  // Excluded from weight decay (LayerNorm gains/offsets, biases).
  bool decay_exempt = false;
};

using Parameter = ParameterT<double>;

// Owns model parameters. Registration order is fixed, so optimizer sweeps
// and checkpoints are deterministic.
template <typename T>
class ParamStoreT {
 public:
  ParameterT<T>& create(const std::string& name,
                        std::vector<std::size_t> shape) {
    if (find(name) != nullptr) {
      throw std::invalid_argument("ParamStore: duplicate parameter " + name);
    }
    auto p = std::make_unique<ParameterT<T>>();
    p->name = name;
    p->value = TensorDataT<T>::zeros(shape);
    p->grad = TensorDataT<T>::zeros(std::move(shape));
    entries_.push_back(std::move(p));
    return *entries_.back();
  }

  ParameterT<T>* find(const std::string& name) {
    for (auto& p : entries_) {
      if (p->name == name) return p.get();
    }
    return nullptr;
  }

  const std::vector<std::unique_ptr<ParameterT<T>>>& entries() const {
    return entries_;
  }

  std::int64_t total_size() const {
    std::int64_t n = 0;
    for (const auto& p : entries_) n += static_cast<std::int64_t>(p->value.size());
    return n;
  }

  void zero_grads() {
    for (auto& p : entries_) {
      std::fill(p->grad.v.begin(), p->grad.v.end(), T{0});
    }
  }

 private:
  std::vector<std::unique_ptr<ParameterT<T>>> entries_;
};

using ParamStore = ParamStoreT<double>;

}  // namespace healvit::nn
