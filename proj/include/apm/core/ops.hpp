#pragma once

// Differentiable operator set. Every op returns a Var whose backward closure
// reads its inputs through Node::inputs, in the order they were passed.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "apm/core/rng.hpp"
#include "apm/core/var.hpp"

namespace apm::ops {

namespace detail {

template <typename T>
Node<T>& input(Node<T>& self, std::size_t i) {
  return *self.inputs[i];
}

template <typename T>
bool wants(Node<T>& self, std::size_t i) {
  return self.inputs[i]->requires_grad;
}

template <typename T>
void require_rank(const Var<T>& x, std::size_t rank, const char* op) {
  if (x.shape().size() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + shape_string(x.shape()));
  }
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

inline AxisSplit split_axis(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for shape " + shape_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  a.value().require_same_shape(b.value(), "add");
  Tensor<T> out = a.value();
  out += b.value();
  return Var<T>::from_op(std::move(out), {a, b}, [](Node<T>& self) {
    for (std::size_t i = 0; i < 2; ++i) {
      if (detail::wants(self, i)) detail::input(self, i).grad_buffer() += self.grad;
    }
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  a.value().require_same_shape(b.value(), "sub");
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return Var<T>::from_op(std::move(out), {a, b}, [](Node<T>& self) {
    if (detail::wants(self, 0)) detail::input(self, 0).grad_buffer() += self.grad;
    if (detail::wants(self, 1)) {
      auto& g = detail::input(self, 1).grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  a.value().require_same_shape(b.value(), "mul");
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return Var<T>::from_op(std::move(out), {a, b}, [](Node<T>& self) {
    auto& na = detail::input(self, 0);
    auto& nb = detail::input(self, 1);
    if (na.requires_grad) {
      auto& g = na.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * nb.value[i];
    }
    if (nb.requires_grad) {
      auto& g = nb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * na.value[i];
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  Tensor<T> out = a.value();
  for (auto& v : out.data()) v *= factor;
  return Var<T>::from_op(std::move(out), {a}, [factor](Node<T>& self) {
    auto& g = detail::input(self, 0).grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
  });
}

/// a * s where s holds a single (learnable) element.
template <typename T>
Var<T> mul_scalar(const Var<T>& a, const Var<T>& s) {
  if (s.value().size() != 1) {
    throw DimensionError("mul_scalar: scalar operand has shape " + shape_string(s.shape()));
  }
  const T sv = s.value()[0];
  Tensor<T> out = a.value();
  for (auto& v : out.data()) v *= sv;
  return Var<T>::from_op(std::move(out), {a, s}, [](Node<T>& self) {
    auto& na = detail::input(self, 0);
    auto& ns = detail::input(self, 1);
    if (na.requires_grad) {
      auto& g = na.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * ns.value[0];
    }
    if (ns.requires_grad) {
      T acc{0};
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * na.value[i];
      ns.grad_buffer()[0] += acc;
    }
  });
}

namespace detail {

template <typename T>
std::size_t row_broadcast_width(const Var<T>& a, const Var<T>& b, const char* op) {
  const std::size_t n = b.value().size();
  if (a.shape().empty() || a.shape().back() != n) {
    throw DimensionError(std::string(op) + ": cannot broadcast " + shape_string(b.shape()) +
                         " across rows of " + shape_string(a.shape()));
  }
  return n;
}

}  // namespace detail

/// a + b with b broadcast over every leading index of a (bias add).
template <typename T>
Var<T> add_row(const Var<T>& a, const Var<T>& b) {
  const std::size_t n = detail::row_broadcast_width(a, b, "add_row");
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i % n];
  return Var<T>::from_op(std::move(out), {a, b}, [n](Node<T>& self) {
    if (detail::wants(self, 0)) detail::input(self, 0).grad_buffer() += self.grad;
    if (detail::wants(self, 1)) {
      auto& g = detail::input(self, 1).grad_buffer();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i % n] += self.grad[i];
    }
  });
}

/// a * b with b broadcast over every leading index of a (per-channel scale).
template <typename T>
Var<T> mul_row(const Var<T>& a, const Var<T>& b) {
  const std::size_t n = detail::row_broadcast_width(a, b, "mul_row");
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i % n];
  return Var<T>::from_op(std::move(out), {a, b}, [n](Node<T>& self) {
    auto& na = detail::input(self, 0);
    auto& nb = detail::input(self, 1);
    if (na.requires_grad) {
      auto& g = na.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * nb.value[i % n];
    }
    if (nb.requires_grad) {
      auto& g = nb.grad_buffer();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i % n] += self.grad[i] * na.value[i];
    }
  });
}

template <typename T>
Var<T> relu(const Var<T>& a) {
  Tensor<T> out = a.value();
  for (auto& v : out.data()) v = v > T{0} ? v : T{0};
  return Var<T>::from_op(std::move(out), {a}, [](Node<T>& self) {
    auto& na = detail::input(self, 0);
    auto& g = na.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (na.value[i] > T{0}) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Var<T> log(const Var<T>& a) {
  Tensor<T> out = a.value();
  for (auto& v : out.data()) v = std::log(v);
  return Var<T>::from_op(std::move(out), {a}, [](Node<T>& self) {
    auto& na = detail::input(self, 0);
    auto& g = na.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] / na.value[i];
  });
}

// ---------------------------------------------------------------------------
// Linear algebra

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  detail::require_rank(a, 2, "matmul");
  detail::require_rank(b, 2, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul: inner extents disagree between " + shape_string(a.shape()) +
                         " and " + shape_string(b.shape()));
  }
  Tensor<T> out({m, n});
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = av[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
    }
  }
  return Var<T>::from_op(std::move(out), {a, b}, [m, k, n](Node<T>& self) {
    auto& na = detail::input(self, 0);
    auto& nb = detail::input(self, 1);
    const auto& g = self.grad;
    if (na.requires_grad) {
      auto& ga = na.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          T acc{0};
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * nb.value[p * n + j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (nb.requires_grad) {
      auto& gb = nb.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const T aip = na.value[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
        }
      }
    }
  });
}

template <typename T>
Var<T> transpose(const Var<T>& a) {
  detail::require_rank(a, 2, "transpose");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  Tensor<T> out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.value()[i * n + j];
  return Var<T>::from_op(std::move(out), {a}, [m, n](Node<T>& self) {
    auto& g = detail::input(self, 0).grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j * m + i];
  });
}

/// x·W + b for x [M×in], W [in×out], b [out]; b may be undefined.
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  Var<T> y = matmul(x, weight);
  return bias.defined() ? add_row(y, bias) : y;
}

// ---------------------------------------------------------------------------
// Shape manipulation

template <typename T>
Var<T> reshape(const Var<T>& a, Shape shape) {
  Tensor<T> out = a.value().reshaped(std::move(shape));
  return Var<T>::from_op(std::move(out), {a}, [](Node<T>& self) {
    auto& g = detail::input(self, 0).grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

template <typename T>
Var<T> slice(const Var<T>& a, std::size_t axis, std::size_t begin, std::size_t end) {
  const auto s = detail::split_axis(a.shape(), axis, "slice");
  if (begin >= end || end > s.extent) {
    throw DimensionError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") invalid for axis " + std::to_string(axis) + " of " +
                         shape_string(a.shape()));
  }
  Shape shape = a.shape();
  shape[axis] = end - begin;
  Tensor<T> out(shape);
  const std::size_t len = end - begin;
  for (std::size_t o = 0; o < s.outer; ++o) {
    const T* src = a.value().data().data() + (o * s.extent + begin) * s.inner;
    std::copy(src, src + len * s.inner, out.data().data() + o * len * s.inner);
  }
  return Var<T>::from_op(std::move(out), {a}, [s, begin, len](Node<T>& self) {
    auto& g = detail::input(self, 0).grad_buffer();
    for (std::size_t o = 0; o < s.outer; ++o) {
      T* dst = g.data().data() + (o * s.extent + begin) * s.inner;
      const T* src = self.grad.data().data() + o * len * s.inner;
      for (std::size_t i = 0; i < len * s.inner; ++i) dst[i] += src[i];
    }
  });
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const Shape& ref = parts.front().shape();
  std::vector<std::size_t> extents;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& sh = p.shape();
    bool ok = sh.size() == ref.size() && axis < sh.size();
    for (std::size_t i = 0; ok && i < sh.size(); ++i) ok = (i == axis) || sh[i] == ref[i];
    if (!ok) {
      throw DimensionError("concat: shape " + shape_string(sh) + " incompatible with " +
                           shape_string(ref) + " along axis " + std::to_string(axis));
    }
    extents.push_back(sh[axis]);
    total += sh[axis];
  }
  Shape shape = ref;
  shape[axis] = total;
  const auto s = detail::split_axis(shape, axis, "concat");
  Tensor<T> out(shape);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const std::size_t len = extents[p];
    for (std::size_t o = 0; o < s.outer; ++o) {
      const T* src = parts[p].value().data().data() + o * len * s.inner;
      std::copy(src, src + len * s.inner, out.data().data() + (o * total + offset) * s.inner);
    }
    offset += len;
  }
  return Var<T>::from_op(std::move(out), parts, [s, extents, total](Node<T>& self) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < extents.size(); ++p) {
      const std::size_t len = extents[p];
      if (detail::wants(self, p)) {
        auto& g = detail::input(self, p).grad_buffer();
        for (std::size_t o = 0; o < s.outer; ++o) {
          const T* src = self.grad.data().data() + (o * total + offset) * s.inner;
          T* dst = g.data().data() + o * len * s.inner;
          for (std::size_t i = 0; i < len * s.inner; ++i) dst[i] += src[i];
        }
      }
      offset += len;
    }
  });
}

/// Single element at a flat index, as a one-element tensor.
template <typename T>
Var<T> take(const Var<T>& a, std::size_t index) {
  if (index >= a.value().size()) {
    throw DimensionError("take: index " + std::to_string(index) + " outside " +
                         shape_string(a.shape()));
  }
  Tensor<T> out({1}, a.value()[index]);
  return Var<T>::from_op(std::move(out), {a}, [index](Node<T>& self) {
    detail::input(self, 0).grad_buffer()[index] += self.grad[0];
  });
}

// ---------------------------------------------------------------------------
// Reductions

template <typename T>
Var<T> sum(const Var<T>& a) {
  T acc{0};
  for (T v : a.value().data()) acc += v;
  return Var<T>::from_op(Tensor<T>({1}, acc), {a}, [](Node<T>& self) {
    auto& g = detail::input(self, 0).grad_buffer();
    for (auto& v : g.data()) v += self.grad[0];
  });
}

template <typename T>
Var<T> mean(const Var<T>& a) {
  return scale(sum(a), T{1} / static_cast<T>(a.value().size()));
}

/// Average over the leading axis of a 2-D tensor: [M×N] -> [1×N].
template <typename T>
Var<T> mean_rows(const Var<T>& a) {
  detail::require_rank(a, 2, "mean_rows");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  Tensor<T> out({1, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += a.value()[i * n + j];
  const T inv = T{1} / static_cast<T>(m);
  for (auto& v : out.data()) v *= inv;
  return Var<T>::from_op(std::move(out), {a}, [m, n, inv](Node<T>& self) {
    auto& g = detail::input(self, 0).grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j] * inv;
  });
}

/// Euclidean norm of each row: [M×N] -> [M×1]. The gradient at a zero row is 0.
template <typename T>
Var<T> row_norm(const Var<T>& a) {
  detail::require_rank(a, 2, "row_norm");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  Tensor<T> out({m, 1});
  for (std::size_t i = 0; i < m; ++i) {
    T acc{0};
    for (std::size_t j = 0; j < n; ++j) acc += a.value()[i * n + j] * a.value()[i * n + j];
    out[i] = std::sqrt(acc);
  }
  return Var<T>::from_op(std::move(out), {a}, [m, n](Node<T>& self) {
    auto& na = detail::input(self, 0);
    auto& g = na.grad_buffer();
    for (std::size_t i = 0; i < m; ++i) {
      const T norm = self.value[i];
      if (norm == T{0}) continue;
      const T coef = self.grad[i] / norm;
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += coef * na.value[i * n + j];
    }
  });
}

/// Cosine similarity of every row of `rows` [K×C] with `v` [1×C] -> [1×K].
/// The norm product is clamped from below by eps.
template <typename T>
Var<T> cosine_rows(const Var<T>& rows, const Var<T>& v, T eps = T(1e-8)) {
  detail::require_rank(rows, 2, "cosine_rows");
  const std::size_t k = rows.shape()[0], c = rows.shape()[1];
  if (v.value().size() != c) {
    throw DimensionError("cosine_rows: vector " + shape_string(v.shape()) +
                         " does not match rows of " + shape_string(rows.shape()));
  }
  const auto& R = rows.value();
  const auto& a = v.value();
  T na2{0};
  for (std::size_t j = 0; j < c; ++j) na2 += a[j] * a[j];
  const T na = std::sqrt(na2);
  std::vector<T> norms(k);
  Tensor<T> out({1, k});
  for (std::size_t i = 0; i < k; ++i) {
    T d{0}, r2{0};
    for (std::size_t j = 0; j < c; ++j) {
      d += R[i * c + j] * a[j];
      r2 += R[i * c + j] * R[i * c + j];
    }
    norms[i] = std::sqrt(r2);
    out[i] = d / std::max(norms[i] * na, eps);
  }
  return Var<T>::from_op(std::move(out), {rows, v}, [k, c, na, eps, norms](Node<T>& self) {
    auto& nr = detail::input(self, 0);
    auto& nv = detail::input(self, 1);
    for (std::size_t i = 0; i < k; ++i) {
      const T g = self.grad[i];
      const T denom = norms[i] * na;
      if (denom <= eps) {
        // Clamped branch: cos = dot / eps.
        if (nr.requires_grad) {
          auto& gr = nr.grad_buffer();
          for (std::size_t j = 0; j < c; ++j) gr[i * c + j] += g * nv.value[j] / eps;
        }
        if (nv.requires_grad) {
          auto& gv = nv.grad_buffer();
          for (std::size_t j = 0; j < c; ++j) gv[j] += g * nr.value[i * c + j] / eps;
        }
        continue;
      }
      const T cosv = self.value[i];
      if (nr.requires_grad) {
        auto& gr = nr.grad_buffer();
        const T r2 = norms[i] * norms[i];
        for (std::size_t j = 0; j < c; ++j) {
          gr[i * c + j] += g * (nv.value[j] / denom - cosv * nr.value[i * c + j] / r2);
        }
      }
      if (nv.requires_grad) {
        auto& gv = nv.grad_buffer();
        const T a2 = na * na;
        for (std::size_t j = 0; j < c; ++j) {
          gv[j] += g * (nr.value[i * c + j] / denom - cosv * nv.value[j] / a2);
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Normalization and probability

template <typename T>
Var<T> softmax(const Var<T>& x, std::size_t axis) {
  const auto s = detail::split_axis(x.shape(), axis, "softmax");
  Tensor<T> out(x.shape());
  const auto& xv = x.value();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.extent * s.inner + in;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t e = 0; e < s.extent; ++e) mx = std::max(mx, xv[base + e * s.inner]);
      T total{0};
      for (std::size_t e = 0; e < s.extent; ++e) {
        const T ev = std::exp(xv[base + e * s.inner] - mx);
        out[base + e * s.inner] = ev;
        total += ev;
      }
      for (std::size_t e = 0; e < s.extent; ++e) out[base + e * s.inner] /= total;
    }
  }
  return Var<T>::from_op(std::move(out), {x}, [s](Node<T>& self) {
    auto& g = detail::input(self, 0).grad_buffer();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = o * s.extent * s.inner + in;
        T dot{0};
        for (std::size_t e = 0; e < s.extent; ++e) {
          const std::size_t idx = base + e * s.inner;
          dot += self.grad[idx] * self.value[idx];
        }
        for (std::size_t e = 0; e < s.extent; ++e) {
          const std::size_t idx = base + e * s.inner;
          g[idx] += self.value[idx] * (self.grad[idx] - dot);
        }
      }
    }
  });
}

/// Per-row normalization of [M×N] with learnable gain/bias of length N.
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& bias, T eps = T(1e-5)) {
  detail::require_rank(x, 2, "layer_norm");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (gain.value().size() != n || bias.value().size() != n) {
    throw DimensionError("layer_norm: affine parameters do not match " + shape_string(x.shape()));
  }
  Tensor<T> normed({m, n});
  std::vector<T> inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    T mu{0};
    for (std::size_t j = 0; j < n; ++j) mu += x.value()[i * n + j];
    mu /= static_cast<T>(n);
    T var{0};
    for (std::size_t j = 0; j < n; ++j) {
      const T d = x.value()[i * n + j] - mu;
      var += d * d;
    }
    var /= static_cast<T>(n);
    inv_std[i] = T{1} / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) normed[i * n + j] = (x.value()[i * n + j] - mu) * inv_std[i];
  }
  Tensor<T> out({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[i * n + j] = normed[i * n + j] * gain.value()[j] + bias.value()[j];
  return Var<T>::from_op(std::move(out), {x, gain, bias},
                         [m, n, normed, inv_std](Node<T>& self) {
    auto& nx = detail::input(self, 0);
    auto& ng = detail::input(self, 1);
    auto& nb = detail::input(self, 2);
    if (ng.requires_grad) {
      auto& gg = ng.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gg[j] += self.grad[i * n + j] * normed[i * n + j];
    }
    if (nb.requires_grad) {
      auto& gb = nb.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += self.grad[i * n + j];
    }
    if (nx.requires_grad) {
      auto& gx = nx.grad_buffer();
      const T inv_n = T{1} / static_cast<T>(n);
      for (std::size_t i = 0; i < m; ++i) {
        T sum_d{0}, sum_dx{0};
        for (std::size_t j = 0; j < n; ++j) {
          const T d = self.grad[i * n + j] * ng.value[j];
          sum_d += d;
          sum_dx += d * normed[i * n + j];
        }
        for (std::size_t j = 0; j < n; ++j) {
          const T d = self.grad[i * n + j] * ng.value[j];
          gx[i * n + j] += inv_std[i] * (d - inv_n * sum_d - normed[i * n + j] * inv_n * sum_dx);
        }
      }
    }
  });
}

/// Running statistics owned by a batch-normalization layer.
template <typename T>
struct BatchNormState {
  Tensor<T>* running_mean = nullptr;
  Tensor<T>* running_var = nullptr;
  T momentum = T(0.1);
  T eps = T(1e-5);
};

/// Normalizes each column of [M×N] over its M rows. In training mode batch
/// statistics are used and the running estimates are updated; in evaluation
/// mode the running estimates are used.
template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& bias,
                  const BatchNormState<T>& state, bool training) {
  detail::require_rank(x, 2, "batch_norm");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (gain.value().size() != n || bias.value().size() != n) {
    throw DimensionError("batch_norm: affine parameters do not match " + shape_string(x.shape()));
  }
  std::vector<T> mu(n, T{0}), inv_std(n);
  const auto& xv = x.value();
  if (training) {
    std::vector<T> var(n, T{0});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) mu[j] += xv[i * n + j];
    for (auto& v : mu) v /= static_cast<T>(m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const T d = xv[i * n + j] - mu[j];
        var[j] += d * d;
      }
    for (std::size_t j = 0; j < n; ++j) {
      const T biased = var[j] / static_cast<T>(m);
      inv_std[j] = T{1} / std::sqrt(biased + state.eps);
      if (state.running_mean && state.running_var) {
        const T unbiased = m > 1 ? var[j] / static_cast<T>(m - 1) : biased;
        auto& rm = (*state.running_mean)[j];
        auto& rv = (*state.running_var)[j];
        rm = (T{1} - state.momentum) * rm + state.momentum * mu[j];
        rv = (T{1} - state.momentum) * rv + state.momentum * unbiased;
      }
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      mu[j] = (*state.running_mean)[j];
      inv_std[j] = T{1} / std::sqrt((*state.running_var)[j] + state.eps);
    }
  }
  Tensor<T> normed({m, n});
  Tensor<T> out({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      normed[i * n + j] = (xv[i * n + j] - mu[j]) * inv_std[j];
      out[i * n + j] = normed[i * n + j] * gain.value()[j] + bias.value()[j];
    }
  return Var<T>::from_op(std::move(out), {x, gain, bias},
                         [m, n, normed, inv_std, training](Node<T>& self) {
    auto& nx = detail::input(self, 0);
    auto& ng = detail::input(self, 1);
    auto& nb = detail::input(self, 2);
    if (ng.requires_grad) {
      auto& gg = ng.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gg[j] += self.grad[i * n + j] * normed[i * n + j];
    }
    if (nb.requires_grad) {
      auto& gb = nb.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += self.grad[i * n + j];
    }
    if (!nx.requires_grad) return;
    auto& gx = nx.grad_buffer();
    if (!training) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          gx[i * n + j] += self.grad[i * n + j] * ng.value[j] * inv_std[j];
      return;
    }
    const T inv_m = T{1} / static_cast<T>(m);
    for (std::size_t j = 0; j < n; ++j) {
      T sum_d{0}, sum_dx{0};
      for (std::size_t i = 0; i < m; ++i) {
        const T d = self.grad[i * n + j] * ng.value[j];
        sum_d += d;
        sum_dx += d * normed[i * n + j];
      }
      for (std::size_t i = 0; i < m; ++i) {
        const T d = self.grad[i * n + j] * ng.value[j];
        gx[i * n + j] += inv_std[j] * (d - inv_m * sum_d - normed[i * n + j] * inv_m * sum_dx);
      }
    }
  });
}

/// Inverted dropout. Identity when not training or p == 0.
template <typename T>
Var<T> dropout(const Var<T>& x, double p, bool training, Rng& rng) {
  if (!training || p <= 0.0) return x;
  if (p >= 1.0) throw ConfigError("dropout: probability must be below 1");
  Tensor<T> mask(x.shape());
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  for (auto& v : mask.data()) v = rng.uniform() < p ? T{0} : keep_scale;
  return mul(x, Var<T>::constant(std::move(mask)));
}

// ---------------------------------------------------------------------------
// Temporal convolution and attention

/// Valid temporal convolution. x [F×Cin], kernel [w×Cin×Cout], bias [Cout]
/// (may be undefined). Output [F'×Cout] with F' = F - dilation·(w-1).
template <typename T>
Var<T> dilated_conv1d(const Var<T>& x, const Var<T>& kernel, std::size_t dilation,
                      const Var<T>& bias) {
  detail::require_rank(x, 2, "dilated_conv1d");
  detail::require_rank(kernel, 3, "dilated_conv1d");
  const std::size_t frames = x.shape()[0], cin = x.shape()[1];
  const std::size_t width = kernel.shape()[0], cout = kernel.shape()[2];
  if (kernel.shape()[1] != cin) {
    throw DimensionError("dilated_conv1d: kernel " + shape_string(kernel.shape()) +
                         " does not accept input " + shape_string(x.shape()));
  }
  if (bias.defined() && bias.value().size() != cout) {
    throw DimensionError("dilated_conv1d: bias " + shape_string(bias.shape()) +
                         " does not match kernel " + shape_string(kernel.shape()));
  }
  if (dilation == 0) throw ConfigError("dilated_conv1d: dilation must be positive");
  const std::size_t span = dilation * (width - 1);
  if (frames <= span) {
    throw SequenceTooShortError("dilated_conv1d: " + std::to_string(frames) +
                                " frames cannot cover a kernel span of " +
                                std::to_string(span + 1));
  }
  const std::size_t out_frames = frames - span;
  Tensor<T> out({out_frames, cout});
  const auto& xv = x.value();
  const auto& kv = kernel.value();
  for (std::size_t t = 0; t < out_frames; ++t) {
    T* row = out.data().data() + t * cout;
    if (bias.defined()) std::copy_n(bias.value().data().data(), cout, row);
    for (std::size_t tap = 0; tap < width; ++tap) {
      const T* xin = xv.data().data() + (t + tap * dilation) * cin;
      const T* kt = kv.data().data() + tap * cin * cout;
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const T xval = xin[ci];
        const T* krow = kt + ci * cout;
        for (std::size_t co = 0; co < cout; ++co) row[co] += xval * krow[co];
      }
    }
  }
  std::vector<Var<T>> inputs{x, kernel};
  if (bias.defined()) inputs.push_back(bias);
  const bool has_bias = bias.defined();
  return Var<T>::from_op(std::move(out), std::move(inputs),
                         [=](Node<T>& self) {
    auto& nx = detail::input(self, 0);
    auto& nk = detail::input(self, 1);
    const T* g = self.grad.data().data();
    if (nx.requires_grad) {
      T* gx = nx.grad_buffer().data().data();
      for (std::size_t t = 0; t < out_frames; ++t)
        for (std::size_t tap = 0; tap < width; ++tap) {
          T* gxr = gx + (t + tap * dilation) * cin;
          const T* kt = nk.value.data().data() + tap * cin * cout;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            T acc{0};
            for (std::size_t co = 0; co < cout; ++co) acc += g[t * cout + co] * kt[ci * cout + co];
            gxr[ci] += acc;
          }
        }
    }
    if (nk.requires_grad) {
      T* gk = nk.grad_buffer().data().data();
      for (std::size_t t = 0; t < out_frames; ++t)
        for (std::size_t tap = 0; tap < width; ++tap) {
          const T* xin = nx.value.data().data() + (t + tap * dilation) * cin;
          T* gkt = gk + tap * cin * cout;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const T xval = xin[ci];
            for (std::size_t co = 0; co < cout; ++co) gkt[ci * cout + co] += xval * g[t * cout + co];
          }
        }
    }
    if (has_bias && detail::wants(self, 2)) {
      auto& gb = detail::input(self, 2).grad_buffer();
      for (std::size_t t = 0; t < out_frames; ++t)
        for (std::size_t co = 0; co < cout; ++co) gb[co] += g[t * cout + co];
    }
  });
}

/// softmax(Q·Kᵀ/√C)·V for Q [q×C], K [k×C], V [k×C].
template <typename T>
Var<T> scaled_dot_attention(const Var<T>& q, const Var<T>& k, const Var<T>& v) {
  detail::require_rank(q, 2, "scaled_dot_attention");
  detail::require_rank(k, 2, "scaled_dot_attention");
  detail::require_rank(v, 2, "scaled_dot_attention");
  if (q.shape()[1] != k.shape()[1] || k.shape()[0] != v.shape()[0]) {
    throw DimensionError("scaled_dot_attention: query " + shape_string(q.shape()) + ", key " +
                         shape_string(k.shape()) + " and value " + shape_string(v.shape()) +
                         " are incompatible");
  }
  const T inv_sqrt = T{1} / std::sqrt(static_cast<T>(q.shape()[1]));
  Var<T> weights = softmax(scale(matmul(q, transpose(k)), inv_sqrt), 1);
  return matmul(weights, v);
}

}  // namespace apm::ops
