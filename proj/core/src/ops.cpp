#include "nop/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace nop::ad {
namespace {

template <typename T>
using NodePtr = std::shared_ptr<TensorNode<T>>;

template <typename T>
bool tracking(std::initializer_list<const Tensor<T>*> inputs) {
  if (Tape<T>::current() == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor<T>* t) { return t->requires_grad(); });
}

template <typename T>
Tensor<T> make_output(Shape shape, bool track) {
  Tensor<T> out(std::move(shape));
  if (track) out.set_requires_grad(true);
  return out;
}

template <typename T, typename Fn>
void record(const Tensor<T>& out, Fn&& fn) {
  Tape<T>::current()->record(out.node_ptr(), std::forward<Fn>(fn));
}

/// Gradient buffer of an input, or nullptr when it does not need one.
template <typename T>
T* grad_buffer(const NodePtr<T>& n) {
  if (!n->requires_grad) return nullptr;
  n->ensure_grad();
  return n->grad.data();
}

void check(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

/// Inner (broadcast) extent for a binary op; see the header for the rule.
std::size_t broadcast_extent(const Shape& a, const Shape& b, const char* op) {
  if (a == b) return shape_numel(a);
  if (b.size() <= a.size() && std::equal(b.rbegin(), b.rend(), a.rbegin())) return shape_numel(b);
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

// C[m,n] += A[m,k] B[k,n]
template <typename T>
void gemm_nn(const T* A, const T* B, T* C, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* c = C + i * n;
    const T* a = A + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[p];
      if (av == T(0)) continue;
      const T* b = B + p * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += av * b[j];
    }
  }
}

// C[m,n] += A[m,k] B[n,k]^T
template <typename T>
void gemm_nt(const T* A, const T* B, T* C, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* a = A + i * k;
    T* c = C + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const T* b = B + j * k;
      T acc = T(0);
      for (std::size_t p = 0; p < k; ++p) acc += a[p] * b[p];
      c[j] += acc;
    }
  }
}

// C[k,n] += A[m,k]^T B[m,n]
template <typename T>
void gemm_tn(const T* A, const T* B, T* C, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* a = A + i * k;
    const T* b = B + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[p];
      if (av == T(0)) continue;
      T* c = C + p * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += av * b[j];
    }
  }
}

template <typename T>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b, const char* name, int kind) {
  const std::size_t inner = broadcast_extent(a.shape(), b.shape(), name);
  const std::size_t total = a.numel();
  const bool track = tracking<T>({&a, &b});
  Tensor<T> out = make_output<T>(a.shape(), track);
  const T* x = a.values().data();
  const T* y = b.values().data();
  T* z = out.values_mut().data();
  for (std::size_t o = 0; o < total; o += inner) {
    for (std::size_t i = 0; i < inner; ++i) {
      switch (kind) {
        case 0: z[o + i] = x[o + i] + y[i]; break;
        case 1: z[o + i] = x[o + i] - y[i]; break;
        default: z[o + i] = x[o + i] * y[i]; break;
      }
    }
  }
  if (track) {
    record(out, [an = a.node_ptr(), bn = b.node_ptr(), on = out.node(), inner, total, kind] {
      const T* g = on->grad.data();
      if (T* ga = grad_buffer(an)) {
        const T* y = bn->value.data();
        for (std::size_t o = 0; o < total; o += inner) {
          for (std::size_t i = 0; i < inner; ++i) ga[o + i] += kind == 2 ? g[o + i] * y[i] : g[o + i];
        }
      }
      if (T* gb = grad_buffer(bn)) {
        const T* x = an->value.data();
        for (std::size_t o = 0; o < total; o += inner) {
          for (std::size_t i = 0; i < inner; ++i) {
            switch (kind) {
              case 0: gb[i] += g[o + i]; break;
              case 1: gb[i] -= g[o + i]; break;
              default: gb[i] += g[o + i] * x[o + i]; break;
            }
          }
        }
      }
    });
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, "add", 0);
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, "sub", 1);
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, "mul", 2);
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  const bool track = tracking<T>({&a});
  Tensor<T> out = make_output<T>(a.shape(), track);
  auto x = a.values();
  auto z = out.values_mut();
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] * s;
  if (track) {
    record(out, [an = a.node_ptr(), on = out.node(), s] {
      T* ga = grad_buffer(an);
      const T* g = on->grad.data();
      for (std::size_t i = 0; i < on->grad.size(); ++i) ga[i] += g[i] * s;
    });
  }
  return out;
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_b) {
  const auto& as = a.shape();
  const auto& bs = b.shape();
  const std::string desc = "matmul: incompatible shapes " + shape_str(as) + " and " + shape_str(bs) +
                           (transpose_b ? " (b transposed)" : "");
  check(as.size() >= 2 && bs.size() >= 2, desc);
  const std::size_t m = as[as.size() - 2];
  const std::size_t k = as.back();
  const std::size_t bk = transpose_b ? bs.back() : bs[bs.size() - 2];
  const std::size_t n = transpose_b ? bs[bs.size() - 2] : bs.back();
  check(k == bk, desc);
  const bool shared = bs.size() == 2;
  if (!shared) {
    check(bs.size() == as.size() && std::equal(as.begin(), as.end() - 2, bs.begin()), desc);
  }
  const std::size_t batch = a.numel() / (m * k);

  Shape os(as.begin(), as.end() - 1);
  os.push_back(n);
  const bool track = tracking<T>({&a, &b});
  Tensor<T> out = make_output<T>(os, track);
  const T* A = a.values().data();
  const T* B = b.values().data();
  T* C = out.values_mut().data();
  if (shared) {
    if (transpose_b) gemm_nt(A, B, C, batch * m, k, n);
    else gemm_nn(A, B, C, batch * m, k, n);
  } else {
    for (std::size_t t = 0; t < batch; ++t) {
      if (transpose_b) gemm_nt(A + t * m * k, B + t * n * k, C + t * m * n, m, k, n);
      else gemm_nn(A + t * m * k, B + t * k * n, C + t * m * n, m, k, n);
    }
  }

  if (track) {
    record(out, [an = a.node_ptr(), bn = b.node_ptr(), on = out.node(), m, k, n, batch, shared,
                 transpose_b] {
      const T* G = on->grad.data();
      const T* A = an->value.data();
      const T* B = bn->value.data();
      T* GA = grad_buffer(an);
      T* GB = grad_buffer(bn);
      const std::size_t rows = shared ? batch * m : m;
      const std::size_t reps = shared ? 1 : batch;
      for (std::size_t t = 0; t < reps; ++t) {
        const T* g = G + t * m * n;
        const T* x = A + t * m * k;
        const T* y = B + (shared ? 0 : t * n * k);
        if (GA) {
          T* ga = GA + t * m * k;
          if (transpose_b) gemm_nn(g, y, ga, rows, n, k);  // dA = dC B
          else gemm_nt(g, y, ga, rows, n, k);             // dA = dC B^T
        }
        if (GB) {
          T* gb = GB + (shared ? 0 : t * n * k);
          if (transpose_b) gemm_tn(g, x, gb, rows, n, k);  // dB = dC^T A
          else gemm_tn(x, g, gb, rows, k, n);              // dB = A^T dC
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  check(!parts.empty(), "concat: no inputs");
  const Shape& s0 = parts.front().shape();
  check(axis < s0.size(), "concat: axis out of range for shape " + shape_str(s0));
  std::size_t outer = 1, inner = 1, total_axis = 0;
  for (std::size_t d = 0; d < axis; ++d) outer *= s0[d];
  for (std::size_t d = axis + 1; d < s0.size(); ++d) inner *= s0[d];
  bool track = false;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == s0.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == s0[d];
    if (!ok) throw ShapeError("concat: incompatible shapes " + shape_str(s0) + " and " + shape_str(s));
    total_axis += s[axis];
    widths.push_back(s[axis] * inner);
    track = track || tracking<T>({&p});
  }
  Shape os = s0;
  os[axis] = total_axis;
  Tensor<T> out = make_output<T>(os, track);
  T* z = out.values_mut().data();
  const std::size_t row = total_axis * inner;
  std::size_t off = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const T* x = parts[p].values().data();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(x + o * widths[p], widths[p], z + o * row + off);
    }
    off += widths[p];
  }
  if (track) {
    std::vector<NodePtr<T>> nodes;
    for (const auto& p : parts) nodes.push_back(p.node_ptr());
    record(out, [nodes, widths, on = out.node(), outer, row] {
      const T* g = on->grad.data();
      std::size_t off = 0;
      for (std::size_t p = 0; p < nodes.size(); ++p) {
        if (T* gp = grad_buffer(nodes[p])) {
          for (std::size_t o = 0; o < outer; ++o) {
            const T* src = g + o * row + off;
            T* dst = gp + o * widths[p];
            for (std::size_t i = 0; i < widths[p]; ++i) dst[i] += src[i];
          }
        }
        off += widths[p];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> slice(const Tensor<T>& a, std::size_t axis, std::size_t begin, std::size_t end) {
  const Shape& s = a.shape();
  check(axis < s.size() && begin <= end && end <= s[axis],
        "slice: range [" + std::to_string(begin) + ", " + std::to_string(end) + ") on axis " +
            std::to_string(axis) + " invalid for shape " + shape_str(s));
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s[d];
  for (std::size_t d = axis + 1; d < s.size(); ++d) inner *= s[d];
  Shape os = s;
  os[axis] = end - begin;
  const bool track = tracking<T>({&a});
  Tensor<T> out = make_output<T>(os, track);
  const std::size_t src_row = s[axis] * inner;
  const std::size_t width = (end - begin) * inner;
  const T* x = a.values().data();
  T* z = out.values_mut().data();
  for (std::size_t o = 0; o < outer; ++o) std::copy_n(x + o * src_row + begin * inner, width, z + o * width);
  if (track) {
    record(out, [an = a.node_ptr(), on = out.node(), outer, src_row, width, off = begin * inner] {
      T* ga = grad_buffer(an);
      const T* g = on->grad.data();
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < width; ++i) ga[o * src_row + off + i] += g[o * width + i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  check(shape_numel(shape) == a.numel(),
        "reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  const bool track = tracking<T>({&a});
  Tensor<T> out(std::move(shape), std::vector<T>(a.values().begin(), a.values().end()));
  if (track) {
    out.set_requires_grad(true);
    record(out, [an = a.node_ptr(), on = out.node()] {
      T* ga = grad_buffer(an);
      const T* g = on->grad.data();
      for (std::size_t i = 0; i < on->grad.size(); ++i) ga[i] += g[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> permute(const Tensor<T>& a, const std::vector<std::size_t>& perm) {
  const Shape& s = a.shape();
  std::vector<std::size_t> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  bool valid = perm.size() == s.size();
  for (std::size_t i = 0; valid && i < sorted.size(); ++i) valid = sorted[i] == i;
  check(valid, "permute: invalid permutation for shape " + shape_str(s));

  const std::size_t r = s.size();
  std::vector<std::size_t> in_stride(r, 1);
  for (std::size_t d = r; d-- > 1;) in_stride[d - 1] = in_stride[d] * s[d];
  Shape os(r);
  for (std::size_t d = 0; d < r; ++d) os[d] = s[perm[d]];

  const std::size_t total = a.numel();
  std::vector<std::size_t> src(total);
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t off = 0;
    for (std::size_t d = 0; d < r; ++d) off += idx[d] * in_stride[perm[d]];
    src[i] = off;
    for (std::size_t d = r; d-- > 0;) {
      if (++idx[d] < os[d]) break;
      idx[d] = 0;
    }
  }
  const bool track = tracking<T>({&a});
  Tensor<T> out = make_output<T>(os, track);
  const T* x = a.values().data();
  T* z = out.values_mut().data();
  for (std::size_t i = 0; i < total; ++i) z[i] = x[src[i]];
  if (track) {
    record(out, [an = a.node_ptr(), on = out.node(), src = std::move(src)] {
      T* ga = grad_buffer(an);
      const T* g = on->grad.data();
      for (std::size_t i = 0; i < src.size(); ++i) ga[src[i]] += g[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& a) {
  check(a.rank() >= 1, "softmax: needs rank >= 1, got " + shape_str(a.shape()));
  const std::size_t d = a.shape().back();
  const std::size_t rows = d ? a.numel() / d : 0;
  const bool track = tracking<T>({&a});
  Tensor<T> out = make_output<T>(a.shape(), track);
  const T* x = a.values().data();
  T* y = out.values_mut().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x + r * d;
    T* yr = y + r * d;
    const T mx = *std::max_element(xr, xr + d);
    if (mx == -std::numeric_limits<T>::infinity()) throw std::domain_error("softmax: row is fully masked");
    T total = 0;
    for (std::size_t i = 0; i < d; ++i) total += (yr[i] = std::exp(xr[i] - mx));
    const T inv = T(1) / total;
    for (std::size_t i = 0; i < d; ++i) yr[i] *= inv;
  }
  if (track) {
    record(out, [an = a.node_ptr(), on = out.node(), d, rows] {
      T* ga = grad_buffer(an);
      const T* g = on->grad.data();
      const T* y = on->value.data();
      for (std::size_t r = 0; r < rows; ++r) {
        T dotp = 0;
        for (std::size_t i = 0; i < d; ++i) dotp += g[r * d + i] * y[r * d + i];
        for (std::size_t i = 0; i < d; ++i) ga[r * d + i] += y[r * d + i] * (g[r * d + i] - dotp);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& a) {
  check(a.rank() >= 1, "log_softmax: needs rank >= 1, got " + shape_str(a.shape()));
  const std::size_t d = a.shape().back();
  const std::size_t rows = d ? a.numel() / d : 0;
  const bool track = tracking<T>({&a});
  Tensor<T> out = make_output<T>(a.shape(), track);
  const T* x = a.values().data();
  T* y = out.values_mut().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x + r * d;
    T* yr = y + r * d;
    const T mx = *std::max_element(xr, xr + d);
    if (mx == -std::numeric_limits<T>::infinity()) throw std::domain_error("log_softmax: row is fully masked");
    // shift first: x - (mx + log total) rounds at the scale of mx
    double total = 0;
    for (std::size_t i = 0; i < d; ++i) total += std::exp(static_cast<double>(xr[i] - mx));
    const double log_total = std::log(total);
    for (std::size_t i = 0; i < d; ++i) yr[i] = static_cast<T>(static_cast<double>(xr[i] - mx) - log_total);
  }
  if (track) {
    record(out, [an = a.node_ptr(), on = out.node(), d, rows] {
      T* ga = grad_buffer(an);
      const T* g = on->grad.data();
      const T* y = on->value.data();
      for (std::size_t r = 0; r < rows; ++r) {
        T gs = 0;
        for (std::size_t i = 0; i < d; ++i) gs += g[r * d + i];
        for (std::size_t i = 0; i < d; ++i) ga[r * d + i] += g[r * d + i] - std::exp(y[r * d + i]) * gs;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  const bool track = tracking<T>({&a});
  Tensor<T> out = make_output<T>(a.shape(), track);
  auto x = a.values();
  auto y = out.values_mut();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  if (track) {
    record(out, [an = a.node_ptr(), on = out.node()] {
      T* ga = grad_buffer(an);
      const T* g = on->grad.data();
      const T* y = on->value.data();
      for (std::size_t i = 0; i < on->grad.size(); ++i) ga[i] += g[i] * (T(1) - y[i] * y[i]);
    });
  }
  return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  const bool track = tracking<T>({&a});
  Tensor<T> out = make_output<T>(a.shape(), track);
  auto x = a.values();
  auto y = out.values_mut();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  if (track) {
    record(out, [an = a.node_ptr(), on = out.node()] {
      T* ga = grad_buffer(an);
      const T* g = on->grad.data();
      const T* x = an->value.data();
      for (std::size_t i = 0; i < on->grad.size(); ++i) {
        if (x[i] > T(0)) ga[i] += g[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a, std::size_t axis) {
  const Shape& s = a.shape();
  check(axis < s.size() && s[axis] > 0, "mean: axis " + std::to_string(axis) + " invalid for shape " + shape_str(s));
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s[d];
  for (std::size_t d = axis + 1; d < s.size(); ++d) inner *= s[d];
  const std::size_t n = s[axis];
  Shape os = s;
  os.erase(os.begin() + static_cast<std::ptrdiff_t>(axis));
  const bool track = tracking<T>({&a});
  Tensor<T> out = make_output<T>(os, track);
  const T* x = a.values().data();
  T* y = out.values_mut().data();
  const T inv = T(1) / static_cast<T>(n);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < inner; ++i) y[o * inner + i] += x[(o * n + j) * inner + i];
    }
    for (std::size_t i = 0; i < inner; ++i) y[o * inner + i] *= inv;
  }
  if (track) {
    record(out, [an = a.node_ptr(), on = out.node(), outer, inner, n, inv] {
      T* ga = grad_buffer(an);
      const T* g = on->grad.data();
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t j = 0; j < n; ++j) {
          for (std::size_t i = 0; i < inner; ++i) ga[(o * n + j) * inner + i] += g[o * inner + i] * inv;
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  const bool track = tracking<T>({&a});
  Tensor<T> out = make_output<T>(Shape{}, track);
  T total = 0;
  for (T v : a.values()) total += v;
  out.values_mut()[0] = total;
  if (track) {
    record(out, [an = a.node_ptr(), on = out.node()] {
      T* ga = grad_buffer(an);
      const T g = on->grad[0];
      for (std::size_t i = 0; i < an->value.size(); ++i) ga[i] += g;
    });
  }
  return out;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, std::size_t stride,
                 std::size_t padding) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  const std::string desc = "conv2d: incompatible shapes input " + shape_str(xs) + ", weight " +
                           shape_str(ws) + ", bias " + shape_str(bias.shape());
  check((xs.size() == 3 || xs.size() == 4) && ws.size() == 4 && ws[2] == ws[3] && stride >= 1, desc);
  const bool batched = xs.size() == 4;
  const std::size_t N = batched ? xs[0] : 1;
  const std::size_t C = xs[xs.size() - 3], H = xs[xs.size() - 2], W = xs.back();
  const std::size_t O = ws[0], K = ws[2];
  check(ws[1] == C && bias.shape() == Shape{O} && H + 2 * padding >= K && W + 2 * padding >= K, desc);
  const std::size_t OH = (H + 2 * padding - K) / stride + 1;
  const std::size_t OW = (W + 2 * padding - K) / stride + 1;
  const std::size_t CKK = C * K * K, P = OH * OW;

  // im2col: cols[n][(c*K + ky)*K + kx][oy*OW + ox]
  std::vector<T> cols(N * CKK * P, T(0));
  const T* X = x.values().data();
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t ky = 0; ky < K; ++ky) {
        for (std::size_t kx = 0; kx < K; ++kx) {
          T* col = cols.data() + (n * CKK + (c * K + ky) * K + kx) * P;
          for (std::size_t oy = 0; oy < OH; ++oy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(padding);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
            const T* xrow = X + ((n * C + c) * H + static_cast<std::size_t>(iy)) * W;
            for (std::size_t ox = 0; ox < OW; ++ox) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(padding);
              if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(W)) col[oy * OW + ox] = xrow[ix];
            }
          }
        }
      }
    }
  }

  Shape os = batched ? Shape{N, O, OH, OW} : Shape{O, OH, OW};
  const bool track = tracking<T>({&x, &w, &bias});
  Tensor<T> out = make_output<T>(os, track);
  T* Y = out.values_mut().data();
  const T* Wt = w.values().data();
  const T* B = bias.values().data();
  for (std::size_t n = 0; n < N; ++n) {
    T* y = Y + n * O * P;
    for (std::size_t o = 0; o < O; ++o) std::fill_n(y + o * P, P, B[o]);
    gemm_nn(Wt, cols.data() + n * CKK * P, y, O, CKK, P);
  }

  if (track) {
    record(out, [xn = x.node_ptr(), wn = w.node_ptr(), bn = bias.node_ptr(), on = out.node(),
                 cols = std::move(cols), N, C, H, W, O, K, OH, OW, CKK, P, stride, padding] {
      const T* G = on->grad.data();
      if (T* gw = grad_buffer(wn)) {
        for (std::size_t n = 0; n < N; ++n) gemm_nt(G + n * O * P, cols.data() + n * CKK * P, gw, O, P, CKK);
      }
      if (T* gb = grad_buffer(bn)) {
        for (std::size_t n = 0; n < N; ++n) {
          for (std::size_t o = 0; o < O; ++o) {
            const T* g = G + (n * O + o) * P;
            T acc = 0;
            for (std::size_t i = 0; i < P; ++i) acc += g[i];
            gb[o] += acc;
          }
        }
      }
      if (T* gx = grad_buffer(xn)) {
        std::vector<T> dcol(CKK * P);
        for (std::size_t n = 0; n < N; ++n) {
          std::fill(dcol.begin(), dcol.end(), T(0));
          gemm_tn(wn->value.data(), G + n * O * P, dcol.data(), O, CKK, P);
          for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t ky = 0; ky < K; ++ky) {
              for (std::size_t kx = 0; kx < K; ++kx) {
                const T* col = dcol.data() + ((c * K + ky) * K + kx) * P;
                for (std::size_t oy = 0; oy < OH; ++oy) {
                  const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(padding);
                  if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                  T* xrow = gx + ((n * C + c) * H + static_cast<std::size_t>(iy)) * W;
                  for (std::size_t ox = 0; ox < OW; ++ox) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(padding);
                    if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(W)) xrow[ix] += col[oy * OW + ox];
                  }
                }
              }
            }
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& table, std::span<const int> indices) {
  check(table.rank() == 2, "gather_rows: table must be rank 2, got " + shape_str(table.shape()));
  const std::size_t V = table.dim(0), D = table.dim(1);
  for (int i : indices) {
    if (i < 0 || static_cast<std::size_t>(i) >= V) {
      throw std::out_of_range("gather_rows: index " + std::to_string(i) + " outside table " +
                              shape_str(table.shape()));
    }
  }
  const bool track = tracking<T>({&table});
  Tensor<T> out = make_output<T>(Shape{indices.size(), D}, track);
  const T* x = table.values().data();
  T* y = out.values_mut().data();
  for (std::size_t r = 0; r < indices.size(); ++r) std::copy_n(x + static_cast<std::size_t>(indices[r]) * D, D, y + r * D);
  if (track) {
    record(out, [tn = table.node_ptr(), on = out.node(), idx = std::vector<int>(indices.begin(), indices.end()), D] {
      T* gt = grad_buffer(tn);
      const T* g = on->grad.data();
      for (std::size_t r = 0; r < idx.size(); ++r) {
        T* dst = gt + static_cast<std::size_t>(idx[r]) * D;
        for (std::size_t j = 0; j < D; ++j) dst[j] += g[r * D + j];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> pick(const Tensor<T>& a, std::size_t index) {
  if (index >= a.numel()) {
    throw std::out_of_range("pick: index " + std::to_string(index) + " outside " + shape_str(a.shape()));
  }
  const bool track = tracking<T>({&a});
  Tensor<T> out = make_output<T>(Shape{}, track);
  out.values_mut()[0] = a[index];
  if (track) {
    record(out, [an = a.node_ptr(), on = out.node(), index] { grad_buffer(an)[index] += on->grad[0]; });
  }
  return out;
}

template <typename T>
Tensor<T> masked_fill(const Tensor<T>& a, std::span<const std::uint8_t> mask, const Shape& mask_shape,
                      T value) {
  const std::size_t inner = broadcast_extent(a.shape(), mask_shape, "masked_fill");
  check(mask.size() == inner, "masked_fill: mask has " + std::to_string(mask.size()) +
                                  " entries for shape " + shape_str(mask_shape));
  const bool track = tracking<T>({&a});
  Tensor<T> out = make_output<T>(a.shape(), track);
  auto x = a.values();
  auto y = out.values_mut();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = mask[i % inner] ? value : x[i];
  if (track) {
    record(out, [an = a.node_ptr(), on = out.node(), m = std::vector<std::uint8_t>(mask.begin(), mask.end()), inner] {
      T* ga = grad_buffer(an);
      const T* g = on->grad.data();
      for (std::size_t i = 0; i < on->grad.size(); ++i) {
        if (!m[i % inner]) ga[i] += g[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& a, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
  check(a.rank() >= 1 && gain.shape() == Shape{a.shape().back()} && bias.shape() == gain.shape(),
        "layer_norm: incompatible shapes input " + shape_str(a.shape()) + ", gain " +
            shape_str(gain.shape()) + ", bias " + shape_str(bias.shape()));
  const std::size_t d = a.shape().back();
  const std::size_t rows = a.numel() / d;
  const bool track = tracking<T>({&a, &gain, &bias});
  Tensor<T> out = make_output<T>(a.shape(), track);
  std::vector<T> xhat(a.numel());
  std::vector<T> rstd(rows);
  const T* x = a.values().data();
  const T* gm = gain.values().data();
  const T* bt = bias.values().data();
  T* y = out.values_mut().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x + r * d;
    T mu = 0;
    for (std::size_t i = 0; i < d; ++i) mu += xr[i];
    mu /= static_cast<T>(d);
    T var = 0;
    for (std::size_t i = 0; i < d; ++i) var += (xr[i] - mu) * (xr[i] - mu);
    var /= static_cast<T>(d);
    rstd[r] = T(1) / std::sqrt(var + eps);
    for (std::size_t i = 0; i < d; ++i) {
      xhat[r * d + i] = (xr[i] - mu) * rstd[r];
      y[r * d + i] = xhat[r * d + i] * gm[i] + bt[i];
    }
  }
  if (track) {
    record(out, [an = a.node_ptr(), gn = gain.node_ptr(), bn = bias.node_ptr(), on = out.node(),
                 xhat = std::move(xhat), rstd = std::move(rstd), d, rows] {
      const T* g = on->grad.data();
      T* gg = grad_buffer(gn);
      T* gb = grad_buffer(bn);
      T* ga = grad_buffer(an);
      const T* gm = gn->value.data();
      for (std::size_t r = 0; r < rows; ++r) {
        const T* gr = g + r * d;
        const T* xh = xhat.data() + r * d;
        if (gg) for (std::size_t i = 0; i < d; ++i) gg[i] += gr[i] * xh[i];
        if (gb) for (std::size_t i = 0; i < d; ++i) gb[i] += gr[i];
        if (ga) {
          T m1 = 0, m2 = 0;
          for (std::size_t i = 0; i < d; ++i) {
            const T gx = gr[i] * gm[i];
            m1 += gx;
            m2 += gx * xh[i];
          }
          m1 /= static_cast<T>(d);
          m2 /= static_cast<T>(d);
          for (std::size_t i = 0; i < d; ++i) ga[r * d + i] += rstd[r] * (gr[i] * gm[i] - m1 - xh[i] * m2);
        }
      }
    });
  }
  return out;
}

#define NOP_INSTANTIATE_OPS(T)                                                                     \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                      \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                      \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                      \
  template Tensor<T> scale(const Tensor<T>&, T);                                                   \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&, bool);                             \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, std::size_t);                           \
  template Tensor<T> slice(const Tensor<T>&, std::size_t, std::size_t, std::size_t);               \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                             \
  template Tensor<T> permute(const Tensor<T>&, const std::vector<std::size_t>&);                   \
  template Tensor<T> softmax(const Tensor<T>&);                                                    \
  template Tensor<T> log_softmax(const Tensor<T>&);                                                \
  template Tensor<T> tanh(const Tensor<T>&);                                                       \
  template Tensor<T> relu(const Tensor<T>&);                                                       \
  template Tensor<T> mean(const Tensor<T>&, std::size_t);                                          \
  template Tensor<T> sum(const Tensor<T>&);                                                        \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t,     \
                            std::size_t);                                                          \
  template Tensor<T> gather_rows(const Tensor<T>&, std::span<const int>);                          \
  template Tensor<T> pick(const Tensor<T>&, std::size_t);                                          \
  template Tensor<T> masked_fill(const Tensor<T>&, std::span<const std::uint8_t>, const Shape&, T); \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);

NOP_INSTANTIATE_OPS(float)
NOP_INSTANTIATE_OPS(double)

}  // namespace nop::ad
