#pragma once

// Central finite differences against the tape's analytic gradients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "nop/autodiff/tensor.hpp"

namespace oracle {

using nop::ad::Tensor;

struct GradCheck {
  double max_error = 0.0;  // |analytic - numeric| / max(1, |analytic|, |numeric|)
  std::size_t checked = 0;
};

/// `loss` must build a fresh graph from `inputs` each call. When `subset`
/// is non-empty only those (input, element) pairs are perturbed.
inline GradCheck check_gradients(const std::function<Tensor<double>()>& loss, std::vector<Tensor<double>>& inputs,
                                 double h = 1e-3,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& subset = {}) {
  for (auto& x : inputs) {
    x.set_requires_grad(true);
    x.zero_grad();
  }
  {
    nop::ad::Tape<double> tape;
    tape.backward(loss());
  }
  std::vector<std::vector<double>> analytic;
  for (auto& x : inputs) {
    auto g = x.grad();
    analytic.emplace_back(x.numel(), 0.0);
    std::copy(g.begin(), g.end(), analytic.back().begin());
  }

  GradCheck out;
  auto probe = [&](std::size_t t, std::size_t i) {
    auto v = inputs[t].values_mut();
    const double keep = v[i];
    v[i] = keep + h;
    const double up = loss().item();
    v[i] = keep - h;
    const double down = loss().item();
    v[i] = keep;
    const double numeric = (up - down) / (2 * h);
    const double a = analytic[t][i];
    const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
    out.max_error = std::max(out.max_error, err);
    ++out.checked;
  };
  if (subset.empty()) {
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      for (std::size_t i = 0; i < inputs[t].numel(); ++i) probe(t, i);
    }
  } else {
    for (const auto& [t, i] : subset) probe(t, i);
  }
  return out;
}

}  // namespace oracle
