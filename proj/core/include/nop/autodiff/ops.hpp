#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nop/autodiff/tensor.hpp"

namespace nop::ad {

// Binary elementwise ops accept either equal shapes or a right operand
// whose shape equals the trailing dimensions of the left one (broadcast
// over leading batch dimensions). Anything else throws ShapeError.

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T s);

/// a: [..., m, k]; b: [k, n] shared by every batch entry, or [..., k, n]
/// with the same leading dimensions as a. With transpose_b, b holds
/// [n, k] (resp. [..., n, k]) and is used transposed.
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_b = false);

template <typename T> Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis);
template <typename T> Tensor<T> slice(const Tensor<T>& a, std::size_t axis, std::size_t begin, std::size_t end);
template <typename T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);
template <typename T> Tensor<T> permute(const Tensor<T>& a, const std::vector<std::size_t>& perm);

template <typename T> Tensor<T> softmax(const Tensor<T>& a);      // last axis
template <typename T> Tensor<T> log_softmax(const Tensor<T>& a);  // last axis
template <typename T> Tensor<T> tanh(const Tensor<T>& a);
template <typename T> Tensor<T> relu(const Tensor<T>& a);

/// Mean over one axis (the axis is removed).
template <typename T> Tensor<T> mean(const Tensor<T>& a, std::size_t axis);
/// Sum of all elements, as a scalar.
template <typename T> Tensor<T> sum(const Tensor<T>& a);

/// x: [C, H, W] or [N, C, H, W]; w: [O, C, K, K]; bias: [O]. Zero padding.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, std::size_t stride,
                 std::size_t padding);

/// Rows of table [V, D] at `indices`, as [indices.size(), D].
template <typename T> Tensor<T> gather_rows(const Tensor<T>& table, std::span<const int> indices);

/// Element `index` of a (flat), as a scalar.
template <typename T> Tensor<T> pick(const Tensor<T>& a, std::size_t index);

/// Replaces entries whose mask byte is non-zero with `value`. The mask has
/// a's shape or its trailing shape. Masked entries receive no gradient.
template <typename T>
Tensor<T> masked_fill(const Tensor<T>& a, std::span<const std::uint8_t> mask, const Shape& mask_shape,
                      T value);

/// Normalizes each vector along the last axis to zero mean and unit
/// variance, then applies gain and bias (both [D]).
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& a, const Tensor<T>& gain, const Tensor<T>& bias, T eps = T(1e-5));

}  // namespace nop::ad
