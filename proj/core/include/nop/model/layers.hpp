#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "nop/autodiff/parameters.hpp"
#include "nop/autodiff/tensor.hpp"
#include "nop/rng.hpp"

namespace nop::model {

using ad::ParameterSet;
using ad::Tensor;

/// Weights drawn uniformly from +-1/sqrt(fan_in).
template <typename T>
Tensor<T> uniform_init(ad::Shape shape, std::size_t fan_in, Rng& rng);

/// y = x W + b, W stored as [in, out].
template <typename T>
struct Linear {
  Tensor<T> weight;
  Tensor<T> bias;  // undefined when built without bias

  Linear() = default;
  Linear(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
         bool with_bias = true);

  Tensor<T> operator()(const Tensor<T>& x) const;
};

template <typename T>
struct LayerNorm {
  Tensor<T> gain;
  Tensor<T> bias;

  LayerNorm() = default;
  LayerNorm(ParameterSet<T>& params, const std::string& name, std::size_t dim);

  Tensor<T> operator()(const Tensor<T>& x) const;
};

template <typename T>
struct FeedForward {
  Linear<T> inner;
  Linear<T> outer;

  FeedForward() = default;
  FeedForward(ParameterSet<T>& params, const std::string& name, std::size_t dim, std::size_t hidden, Rng& rng);

  Tensor<T> operator()(const Tensor<T>& x) const;
};

/// Scaled dot-product attention with `heads` heads over [n, dim] inputs.
template <typename T>
struct MultiHeadAttention {
  /// Keys and values already projected and split, [heads, n_keys, dim/heads].
  struct KeyValues {
    Tensor<T> keys;
    Tensor<T> values;
  };

  Linear<T> wq, wk, wv, wo;
  std::size_t heads = 1;
  std::size_t dim = 0;

  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterSet<T>& params, const std::string& name, std::size_t dim, std::size_t heads,
                     Rng& rng);

  KeyValues project(const Tensor<T>& keys, const Tensor<T>& values) const;

  /// query: [nq, dim]. Keys whose mask byte is non-zero are excluded; the
  /// mask is empty or has one byte per key.
  Tensor<T> attend(const Tensor<T>& query, const KeyValues& kv, std::span<const std::uint8_t> key_mask = {}) const;

  Tensor<T> operator()(const Tensor<T>& query, const Tensor<T>& keys, const Tensor<T>& values,
                       std::span<const std::uint8_t> key_mask = {}) const {
    return attend(query, project(keys, values), key_mask);
  }

 private:
  Tensor<T> split(const Tensor<T>& x) const;  // [n, dim] -> [heads, n, dim/heads]
};

}  // namespace nop::model
