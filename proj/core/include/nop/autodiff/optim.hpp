#pragma once

#include <span>
#include <vector>

#include "nop/autodiff/tensor.hpp"

namespace nop::ad {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update in place; `step` is the 1-based update
/// count. Throws ShapeError when the spans differ in length.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, std::span<T> m, std::span<T> v,
               long step, const AdamConfig& cfg);

template <typename T>
class Adam {
 public:
  Adam(std::vector<Tensor<T>> params, AdamConfig cfg = {});

  /// Applies one update from the parameters' accumulated gradients.
  void step();
  void zero_grad();

  long steps() const { return steps_; }
  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  std::vector<Tensor<T>> params_;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
  AdamConfig cfg_;
  long steps_ = 0;
};

/// Global L2 norm of all gradients; when above max_norm every gradient is
/// scaled down to reach it. Returns the norm before clipping.
template <typename T>
double clip_grad_norm(const std::vector<Tensor<T>>& params, double max_norm);

}  // namespace nop::ad
