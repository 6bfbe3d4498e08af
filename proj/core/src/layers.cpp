#include "nop/model/layers.hpp"

#include <cmath>
#include <limits>

#include "nop/autodiff/ops.hpp"

namespace nop::model {

template <typename T>
Tensor<T> uniform_init(ad::Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::vector<T> v(ad::shape_numel(shape));
  for (auto& x : v) x = static_cast<T>(rng.uniform(-bound, bound));
  return Tensor<T>::parameter(std::move(shape), std::move(v));
}

template <typename T>
Linear<T>::Linear(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
                  bool with_bias) {
  weight = params.add(name + ".weight", uniform_init<T>({in, out}, in, rng));
  if (with_bias) bias = params.add(name + ".bias", uniform_init<T>({out}, in, rng));
}

template <typename T>
Tensor<T> Linear<T>::operator()(const Tensor<T>& x) const {
  Tensor<T> y;
  if (x.rank() == 1) {
    y = ad::reshape(ad::matmul(ad::reshape(x, {1, x.dim(0)}), weight), {weight.dim(1)});
  } else {
    y = ad::matmul(x, weight);
  }
  return bias.defined() ? ad::add(y, bias) : y;
}

template <typename T>
LayerNorm<T>::LayerNorm(ParameterSet<T>& params, const std::string& name, std::size_t dim) {
  gain = params.add(name + ".gain", Tensor<T>::parameter({dim}, std::vector<T>(dim, T(1))));
  bias = params.add(name + ".bias", Tensor<T>::parameter({dim}, std::vector<T>(dim, T(0))));
}

template <typename T>
Tensor<T> LayerNorm<T>::operator()(const Tensor<T>& x) const {
  return ad::layer_norm(x, gain, bias);
}

template <typename T>
FeedForward<T>::FeedForward(ParameterSet<T>& params, const std::string& name, std::size_t dim,
                            std::size_t hidden, Rng& rng)
    : inner(params, name + ".inner", dim, hidden, rng), outer(params, name + ".outer", hidden, dim, rng) {}

template <typename T>
Tensor<T> FeedForward<T>::operator()(const Tensor<T>& x) const {
  return outer(ad::relu(inner(x)));
}

template <typename T>
MultiHeadAttention<T>::MultiHeadAttention(ParameterSet<T>& params, const std::string& name, std::size_t dim_,
                                          std::size_t heads_, Rng& rng)
    : wq(params, name + ".q", dim_, dim_, rng, false),
      wk(params, name + ".k", dim_, dim_, rng, false),
      wv(params, name + ".v", dim_, dim_, rng, false),
      wo(params, name + ".o", dim_, dim_, rng, false),
      heads(heads_),
      dim(dim_) {
  if (heads == 0 || dim % heads != 0) throw std::invalid_argument("attention dim must divide into heads");
}

template <typename T>
Tensor<T> MultiHeadAttention<T>::split(const Tensor<T>& x) const {
  const std::size_t n = x.dim(0);
  return ad::permute(ad::reshape(x, {n, heads, dim / heads}), {1, 0, 2});
}

template <typename T>
typename MultiHeadAttention<T>::KeyValues MultiHeadAttention<T>::project(const Tensor<T>& keys,
                                                                        const Tensor<T>& values) const {
  return {split(wk(keys)), split(wv(values))};
}

template <typename T>
Tensor<T> MultiHeadAttention<T>::attend(const Tensor<T>& query, const KeyValues& kv,
                                        std::span<const std::uint8_t> key_mask) const {
  const std::size_t nq = query.dim(0);
  const std::size_t nk = kv.keys.dim(1);
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dim / heads)));
  Tensor<T> scores = ad::scale(ad::matmul(split(wq(query)), kv.keys, true), inv_sqrt);  // [h, nq, nk]
  if (!key_mask.empty()) {
    scores = ad::masked_fill(scores, key_mask, ad::Shape{nk}, -std::numeric_limits<T>::infinity());
  }
  Tensor<T> ctx = ad::matmul(ad::softmax(scores), kv.values);  // [h, nq, dh]
  return wo(ad::reshape(ad::permute(ctx, {1, 0, 2}), {nq, dim}));
}

template Tensor<float> uniform_init<float>(ad::Shape, std::size_t, Rng&);
template Tensor<double> uniform_init<double>(ad::Shape, std::size_t, Rng&);
template struct Linear<float>;
template struct Linear<double>;
template struct LayerNorm<float>;
template struct LayerNorm<double>;
template struct FeedForward<float>;
template struct FeedForward<double>;
template struct MultiHeadAttention<float>;
template struct MultiHeadAttention<double>;

}  // namespace nop::model
