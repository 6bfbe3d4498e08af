#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nop/autodiff/tensor.hpp"

namespace nop::ad {

/// Named trainable tensors in registration order.
template <typename T>
class ParameterSet {
 public:
  Tensor<T>& add(std::string name, Tensor<T> t) {
    for (const auto& [n, _] : items_) {
      if (n == name) throw std::invalid_argument("duplicate parameter name " + name);
    }
    t.set_requires_grad(true);
    items_.emplace_back(std::move(name), std::move(t));
    return items_.back().second;
  }

  std::size_t size() const { return items_.size(); }
  const std::string& name(std::size_t i) const { return items_[i].first; }
  Tensor<T>& operator[](std::size_t i) { return items_[i].second; }
  const Tensor<T>& operator[](std::size_t i) const { return items_[i].second; }

  std::vector<Tensor<T>> tensors() const {
    std::vector<Tensor<T>> out;
    out.reserve(items_.size());
    for (const auto& [_, t] : items_) out.push_back(t);
    return out;
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : items_) n += t.numel();
    return n;
  }

  void zero_grad() {
    for (auto& [_, t] : items_) t.zero_grad();
  }

 private:
  std::vector<std::pair<std::string, Tensor<T>>> items_;
};

}  // namespace nop::ad
