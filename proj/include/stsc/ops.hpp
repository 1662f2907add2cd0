#pragma once

// Differentiable tensor operations. Each op computes its forward value,
// records it on the input tape and registers the matching backward rule.
// Reductions accumulate in double regardless of T.

#include <Eigen/Core>
#include <unsupported/Eigen/SpecialFunctions>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "stsc/autodiff.hpp"
#include "stsc/rng.hpp"

namespace stsc::ops {

namespace detail {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Map = Eigen::Map<RowMat<T>>;
template <typename T>
using CMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using StrideMap = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using CStrideMap = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;

template <typename T>
using Arr = Eigen::Array<T, Eigen::Dynamic, 1>;

template <typename T>
Eigen::Map<Arr<T>> arr(T* p, std::size_t n) {
  return {p, Eigen::Index(n)};
}
template <typename T>
Eigen::Map<const Arr<T>> arr(const T* p, std::size_t n) {
  return {p, Eigen::Index(n)};
}

inline void same_shape(const Shape& a, const Shape& b, const char* op) {
  require(a == b, ErrorCode::shape_error,
          std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) + " differ");
}

inline std::size_t leading(const Shape& s, std::size_t trailing) {
  std::size_t n = 1;
  for (std::size_t i = 0; i + trailing < s.size(); ++i) n *= s[i];
  return n;
}

}  // namespace detail

// Records `value` with the backward closure that `build(output_id)` returns.
template <typename T, typename Build>
Var<T> emit(Tape<T>* tp, Tensor<T> value, std::initializer_list<Var<T>> inputs, Build build) {
  const std::size_t id = tp->size();
  return tp->record(std::move(value), inputs, build(id));
}

template <typename T>
Var<T> constant(Tape<T>& tape, Tensor<T> value) {
  return tape.leaf(std::move(value), false);
}

// ---------------------------------------------------------------------------
// Elementwise

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  detail::same_shape(a.shape(), b.shape(), "add");
  Tape<T>* tp = a.tape;
  Tensor<T> y = a.value();
  const T* pb = b.value().ptr();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += pb[i];
  return emit(tp, std::move(y), {a, b}, [tp, a, b](std::size_t id) {
    return [tp, a, b, id] {
      const auto& g = tp->grad(id);
      for (Var<T> v : {a, b})
        if (tp->requires_grad(v.id)) {
          auto& gv = tp->grad(v.id);
          for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
        }
    };
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  detail::same_shape(a.shape(), b.shape(), "sub");
  Tape<T>* tp = a.tape;
  Tensor<T> y = a.value();
  const T* pb = b.value().ptr();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= pb[i];
  return emit(tp, std::move(y), {a, b}, [tp, a, b](std::size_t id) {
    return [tp, a, b, id] {
      const auto& g = tp->grad(id);
      if (tp->requires_grad(a.id)) {
        auto& ga = tp->grad(a.id);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (tp->requires_grad(b.id)) {
        auto& gb = tp->grad(b.id);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    };
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  detail::same_shape(a.shape(), b.shape(), "mul");
  Tape<T>* tp = a.tape;
  Tensor<T> y = a.value();
  const T* pb = b.value().ptr();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= pb[i];
  return emit(tp, std::move(y), {a, b}, [tp, a, b](std::size_t id) {
    return [tp, a, b, id] {
      const auto& g = tp->grad(id);
      if (tp->requires_grad(a.id)) {
        auto& ga = tp->grad(a.id);
        const auto& vb = b.value();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
      }
      if (tp->requires_grad(b.id)) {
        auto& gb = tp->grad(b.id);
        const auto& va = a.value();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
      }
    };
  });
}

template <typename T>
Var<T> scale(Var<T> x, T s) {
  Tape<T>* tp = x.tape;
  Tensor<T> y = x.value();
  for (auto& v : y.data()) v *= s;
  return emit(tp, std::move(y), {x}, [tp, x, s](std::size_t id) {
    return [tp, x, s, id] {
      const auto& g = tp->grad(id);
      auto& gx = tp->grad(x.id);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += s * g[i];
    };
  });
}

/// y = f(x) elementwise with derivative df(x, y).
template <typename T, typename F, typename DF>
Var<T> map(Var<T> x, F f, DF df) {
  Tape<T>* tp = x.tape;
  Tensor<T> y(x.shape());
  const T* px = x.value().ptr();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(px[i]);
  return emit(tp, std::move(y), {x}, [tp, x, df](std::size_t id) {
    return [tp, x, df, id] {
      const auto& g = tp->grad(id);
      const auto& vx = x.value();
      const auto& vy = tp->value(id);
      auto& gx = tp->grad(x.id);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(vx[i], vy[i]);
    };
  });
}

template <typename T>
Var<T> relu(Var<T> x) {
  return map(
      x, [](T v) { return v > T(0) ? v : T(0); },
      [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
T sigmoid_value(T v) {
  return v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
}

template <typename T>
Var<T> sigmoid(Var<T> x) {
  return map(x, [](T v) { return sigmoid_value(v); }, [](T, T y) { return y * (T(1) - y); });
}

/// Exact GELU, x * Phi(x). The derivative Phi(x) + x phi(x) is kept from
/// the forward pass for the backward.
template <typename T>
Var<T> gelu(Var<T> x) {
  constexpr T inv_sqrt2 = T(0.70710678118654752440);
  constexpr T inv_sqrt_2pi = T(0.39894228040143267794);
  Tape<T>* tp = x.tape;
  const std::size_t n = x.value().size();
  Tensor<T> y(x.shape());
  // Results land in aligned arrays first so the vector/scalar split, and with
  // it the rounding, does not depend on where the tensors happen to live.
  const detail::Arr<T> vx = detail::arr(x.value().ptr(), n);
  const detail::Arr<T> cdf = T(0.5) * ((vx * inv_sqrt2).erf() + T(1));
  const detail::Arr<T> out = vx * cdf;
  detail::arr(y.ptr(), n) = out;
  auto dy = std::make_shared<detail::Arr<T>>(cdf + vx * inv_sqrt_2pi * (vx.square() * T(-0.5)).exp());
  return emit(tp, std::move(y), {x}, [tp, x, dy](std::size_t id) {
    return [tp, x, dy, id] {
      const auto& g = tp->grad(id);
      auto& gx = tp->grad(x.id);
      const std::size_t n = g.size();
      detail::arr(gx.ptr(), n) += detail::arr(g.ptr(), n) * *dy;
    };
  });
}

/// out = g * x + (1 - g) * z with g = sigmoid(x + z), clamped into
/// [min(x, z), max(x, z)] against rounding. The clamp is treated as the
/// identity in the backward pass.
template <typename T>
Var<T> gate_fuse(Var<T> x, Var<T> z) {
  detail::same_shape(x.shape(), z.shape(), "gate_fuse");
  Tape<T>* tp = x.tape;
  const std::size_t n = x.value().size();
  Tensor<T> y(x.shape());
  const detail::Arr<T> vx = detail::arr(x.value().ptr(), n);
  const detail::Arr<T> vz = detail::arr(z.value().ptr(), n);
  // exp overflow gives s = 0 exactly, never NaN.
  auto gate = std::make_shared<detail::Arr<T>>(T(1) / (T(1) + (-(vx + vz)).exp()));
  const auto& s = *gate;
  const detail::Arr<T> out = (vz + s * (vx - vz)).max(vx.min(vz)).min(vx.max(vz));
  detail::arr(y.ptr(), n) = out;
  return emit(tp, std::move(y), {x, z}, [tp, x, z, gate](std::size_t id) {
    return [tp, x, z, gate, id] {
      const auto& g = tp->grad(id);
      const std::size_t n = g.size();
      const auto& s = *gate;
      const auto vg = detail::arr(g.ptr(), n);
      // d/dx = s + (x - z) s (1 - s); d/dz = (1 - s) + (x - z) s (1 - s)
      const detail::Arr<T> common =
          (detail::arr(x.value().ptr(), n) - detail::arr(z.value().ptr(), n)) * s * (T(1) - s);
      if (tp->requires_grad(x.id)) detail::arr(tp->grad(x.id).ptr(), n) += vg * (s + common);
      if (tp->requires_grad(z.id)) detail::arr(tp->grad(z.id).ptr(), n) += vg * (T(1) - s + common);
    };
  });
}

/// Inverted dropout: zeroes each element with probability p and scales the
/// rest by 1 / (1 - p). The mask is a pure function of `key`.
template <typename T>
Var<T> dropout(Var<T> x, double p, std::uint64_t key) {
  require(p >= 0.0 && p < 1.0, ErrorCode::invalid_input, "dropout rate must lie in [0, 1)");
  if (p == 0.0) return x;
  Tape<T>* tp = x.tape;
  Tensor<T> keep(x.shape());
  StreamRng rng(key);
  const T s = T(1.0 / (1.0 - p));
  for (auto& k : keep.data()) k = rng.uniform() < p ? T(0) : s;
  Tensor<T> y = x.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= keep[i];
  return emit(tp, std::move(y), {x}, [tp, x, keep = std::move(keep)](std::size_t id) {
    return [tp, x, keep, id] {
      const auto& g = tp->grad(id);
      auto& gx = tp->grad(x.id);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * keep[i];
    };
  });
}

// ---------------------------------------------------------------------------
// Shape

template <typename T>
Var<T> reshape(Var<T> x, Shape shape) {
  Tape<T>* tp = x.tape;
  Tensor<T> y = x.value().reshaped(std::move(shape));
  return emit(tp, std::move(y), {x}, [tp, x](std::size_t id) {
    return [tp, x, id] {
      const auto& g = tp->grad(id);
      auto& gx = tp->grad(x.id);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    };
  });
}

/// (..., A, B) -> (..., B, A).
template <typename T>
Var<T> swap_last2(Var<T> x) {
  require(x.rank() >= 2, ErrorCode::shape_error, "swap_last2 needs rank >= 2");
  Tape<T>* tp = x.tape;
  Shape s = x.shape();
  const std::size_t A = s[s.size() - 2], B = s.back(), outer = detail::leading(s, 2);
  std::swap(s[s.size() - 2], s.back());
  Tensor<T> y(s);
  const T* px = x.value().ptr();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t a = 0; a < A; ++a)
      for (std::size_t b = 0; b < B; ++b) y[(o * B + b) * A + a] = px[(o * A + a) * B + b];
  return emit(tp, std::move(y), {x}, [tp, x, A, B, outer](std::size_t id) {
    return [tp, x, A, B, outer, id] {
      const auto& g = tp->grad(id);
      auto& gx = tp->grad(x.id);
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t a = 0; a < A; ++a)
          for (std::size_t b = 0; b < B; ++b) gx[(o * A + a) * B + b] += g[(o * B + b) * A + a];
    };
  });
}

template <typename T>
Var<T> transpose(Var<T> x) {
  require(x.rank() == 2, ErrorCode::shape_error, "transpose needs a matrix");
  return swap_last2(x);
}

// ---------------------------------------------------------------------------
// Reductions and losses

template <typename T>
Var<T> sum(Var<T> x) {
  Tape<T>* tp = x.tape;
  double acc = 0.0;
  for (T v : x.value().data()) acc += v;
  return emit(tp, Tensor<T>({1}, T(acc)), {x}, [tp, x](std::size_t id) {
    return [tp, x, id] {
      const T g = tp->grad(id)[0];
      for (auto& v : tp->grad(x.id).data()) v += g;
    };
  });
}

template <typename T>
Var<T> mean(Var<T> x) {
  return scale(sum(x), T(1) / T(x.value().size()));
}

enum class LossKind { mae, mse };

/// Mean absolute or squared error over the positions where mask != 0 (all
/// positions when the mask is empty). Throws EmptyMask if none is selected.
template <typename T>
Var<T> masked_loss(Var<T> pred, const Tensor<T>& target, const Tensor<T>& mask, LossKind kind) {
  detail::same_shape(pred.shape(), target.shape(), "loss");
  if (!mask.empty()) detail::same_shape(pred.shape(), mask.shape(), "loss mask");
  Tape<T>* tp = pred.tape;
  const auto& p = pred.value();
  std::size_t count = 0;
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!mask.empty() && mask[i] == T(0)) continue;
    const double r = double(p[i]) - double(target[i]);
    acc += kind == LossKind::mae ? std::abs(r) : r * r;
    ++count;
  }
  require(count > 0, ErrorCode::empty_mask, "loss mask selects no positions");
  return emit(tp, Tensor<T>({1}, T(acc / double(count))), {pred},
              [tp, pred, target, mask, kind, count](std::size_t id) {
                return [tp, pred, target, mask, kind, count, id] {
                  const T g = tp->grad(id)[0] / T(count);
                  const auto& p = pred.value();
                  auto& gp = tp->grad(pred.id);
                  for (std::size_t i = 0; i < p.size(); ++i) {
                    if (!mask.empty() && mask[i] == T(0)) continue;
                    const T r = p[i] - target[i];
                    const T d = kind == LossKind::mae ? T((r > 0) - (r < 0)) : T(2) * r;
                    gp[i] += g * d;
                  }
                };
              });
}

// ---------------------------------------------------------------------------
// Linear algebra

/// (M, K) x (K, N).
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  require(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0), ErrorCode::shape_error,
          "matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  Tape<T>* tp = a.tape;
  const std::size_t M = a.dim(0), K = a.dim(1), N = b.dim(1);
  Tensor<T> y({M, N});
  detail::Map<T>(y.ptr(), M, N).noalias() =
      detail::CMap<T>(a.value().ptr(), M, K) * detail::CMap<T>(b.value().ptr(), K, N);
  return emit(tp, std::move(y), {a, b}, [tp, a, b, M, K, N](std::size_t id) {
    return [tp, a, b, M, K, N, id] {
      detail::CMap<T> g(tp->grad(id).ptr(), M, N);
      if (tp->requires_grad(a.id))
        detail::Map<T>(tp->grad(a.id).ptr(), M, K).noalias() +=
            g * detail::CMap<T>(b.value().ptr(), K, N).transpose();
      if (tp->requires_grad(b.id))
        detail::Map<T>(tp->grad(b.id).ptr(), K, N).noalias() +=
            detail::CMap<T>(a.value().ptr(), M, K).transpose() * g;
    };
  });
}

/// Dense map over the last axis: x (..., In) times w (In, Out).
template <typename T>
Var<T> linear(Var<T> x, Var<T> w) {
  require(x.rank() >= 1 && w.rank() == 2 && x.shape().back() == w.dim(0), ErrorCode::shape_error,
          "linear: " + shape_str(x.shape()) + " x " + shape_str(w.shape()));
  Tape<T>* tp = x.tape;
  const std::size_t R = detail::leading(x.shape(), 1), In = w.dim(0), Out = w.dim(1);
  Shape s = x.shape();
  s.back() = Out;
  Tensor<T> y(s);
  detail::Map<T>(y.ptr(), R, Out).noalias() =
      detail::CMap<T>(x.value().ptr(), R, In) * detail::CMap<T>(w.value().ptr(), In, Out);
  return emit(tp, std::move(y), {x, w}, [tp, x, w, R, In, Out](std::size_t id) {
    return [tp, x, w, R, In, Out, id] {
      detail::CMap<T> g(tp->grad(id).ptr(), R, Out);
      if (tp->requires_grad(x.id))
        detail::Map<T>(tp->grad(x.id).ptr(), R, In).noalias() +=
            g * detail::CMap<T>(w.value().ptr(), In, Out).transpose();
      if (tp->requires_grad(w.id))
        detail::Map<T>(tp->grad(w.id).ptr(), In, Out).noalias() +=
            detail::CMap<T>(x.value().ptr(), R, In).transpose() * g;
    };
  });
}

/// x (..., D) + b (D).
template <typename T>
Var<T> add_bias(Var<T> x, Var<T> b) {
  require(b.rank() == 1 && x.rank() >= 1 && x.shape().back() == b.dim(0), ErrorCode::shape_error,
          "add_bias: " + shape_str(x.shape()) + " + " + shape_str(b.shape()));
  Tape<T>* tp = x.tape;
  const std::size_t D = b.dim(0), R = detail::leading(x.shape(), 1);
  Tensor<T> y = x.value();
  const T* pb = b.value().ptr();
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t d = 0; d < D; ++d) y[r * D + d] += pb[d];
  return emit(tp, std::move(y), {x, b}, [tp, x, b, R, D](std::size_t id) {
    return [tp, x, b, R, D, id] {
      const auto& g = tp->grad(id);
      if (tp->requires_grad(x.id)) {
        auto& gx = tp->grad(x.id);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
      if (tp->requires_grad(b.id)) {
        std::vector<double> acc(D, 0.0);
        for (std::size_t r = 0; r < R; ++r)
          for (std::size_t d = 0; d < D; ++d) acc[d] += g[r * D + d];
        auto& gb = tp->grad(b.id);
        for (std::size_t d = 0; d < D; ++d) gb[d] += T(acc[d]);
      }
    };
  });
}

/// Grouped 1x1 convolution over the last axis. x (..., G * In_g) and
/// w (G, In_g, Out_g) give (..., G * Out_g); group g reads only input slice
/// g and writes only output slice g.
template <typename T>
Var<T> grouped_pointwise(Var<T> x, Var<T> w) {
  require(w.rank() == 3, ErrorCode::shape_error, "grouped_pointwise weights must be (groups, in, out)");
  const std::size_t G = w.dim(0), Ig = w.dim(1), Og = w.dim(2);
  require(x.rank() >= 1 && x.shape().back() % G == 0, ErrorCode::shape_error,
          "grouped_pointwise: axis of length " + std::to_string(x.shape().back()) +
              " is not divisible into " + std::to_string(G) + " groups");
  require(x.shape().back() == G * Ig, ErrorCode::shape_error,
          "grouped_pointwise: input " + shape_str(x.shape()) + " does not match weights " +
              shape_str(w.shape()));
  Tape<T>* tp = x.tape;
  const std::size_t R = detail::leading(x.shape(), 1);
  Shape s = x.shape();
  s.back() = G * Og;
  Tensor<T> y(s);
  const T* px = x.value().ptr();
  const T* pw = w.value().ptr();
  for (std::size_t g = 0; g < G; ++g) {
    detail::StrideMap<T>(y.ptr() + g * Og, R, Og, Eigen::OuterStride<>(G * Og)).noalias() =
        detail::CStrideMap<T>(px + g * Ig, R, Ig, Eigen::OuterStride<>(G * Ig)) *
        detail::CMap<T>(pw + g * Ig * Og, Ig, Og);
  }
  return emit(tp, std::move(y), {x, w}, [tp, x, w, R, G, Ig, Og](std::size_t id) {
    return [tp, x, w, R, G, Ig, Og, id] {
      const T* pg = tp->grad(id).ptr();
      const T* px = x.value().ptr();
      const T* pw = w.value().ptr();
      for (std::size_t g = 0; g < G; ++g) {
        detail::CStrideMap<T> gy(pg + g * Og, R, Og, Eigen::OuterStride<>(G * Og));
        if (tp->requires_grad(x.id))
          detail::StrideMap<T>(tp->grad(x.id).ptr() + g * Ig, R, Ig, Eigen::OuterStride<>(G * Ig))
              .noalias() += gy * detail::CMap<T>(pw + g * Ig * Og, Ig, Og).transpose();
        if (tp->requires_grad(w.id))
          detail::Map<T>(tp->grad(w.id).ptr() + g * Ig * Og, Ig, Og).noalias() +=
              detail::CStrideMap<T>(px + g * Ig, R, Ig, Eigen::OuterStride<>(G * Ig)).transpose() * gy;
      }
    };
  });
}

/// Row-wise softmax of a matrix with max subtraction.
template <typename T>
Var<T> softmax_rows(Var<T> m) {
  require(m.rank() == 2, ErrorCode::shape_error, "softmax_rows needs a matrix");
  Tape<T>* tp = m.tape;
  const std::size_t R = m.dim(0), C = m.dim(1);
  Tensor<T> y(m.shape());
  const T* pm = m.value().ptr();
  for (std::size_t r = 0; r < R; ++r) {
    const T* row = pm + r * C;
    const double mx = *std::max_element(row, row + C);
    double denom = 0.0;
    for (std::size_t c = 0; c < C; ++c) denom += std::exp(double(row[c]) - mx);
    for (std::size_t c = 0; c < C; ++c) y[r * C + c] = T(std::exp(double(row[c]) - mx) / denom);
  }
  return emit(tp, std::move(y), {m}, [tp, m, R, C](std::size_t id) {
    return [tp, m, R, C, id] {
      const auto& g = tp->grad(id);
      const auto& y = tp->value(id);
      auto& gm = tp->grad(m.id);
      for (std::size_t r = 0; r < R; ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < C; ++c) dot += double(g[r * C + c]) * y[r * C + c];
        for (std::size_t c = 0; c < C; ++c)
          gm[r * C + c] += T(y[r * C + c] * (g[r * C + c] - dot));
      }
    };
  });
}

/// out[b] = A h[b] for A (N, N) and h (B, N, R).
template <typename T>
Var<T> node_mix(Var<T> a, Var<T> h) {
  require(a.rank() == 2 && a.dim(0) == a.dim(1) && h.rank() == 3 && h.dim(1) == a.dim(0),
          ErrorCode::shape_error,
          "node_mix: " + shape_str(a.shape()) + " applied to " + shape_str(h.shape()));
  Tape<T>* tp = a.tape;
  const std::size_t B = h.dim(0), N = h.dim(1), R = h.dim(2);
  Tensor<T> y(h.shape());
  detail::CMap<T> A(a.value().ptr(), N, N);
  for (std::size_t b = 0; b < B; ++b)
    detail::Map<T>(y.ptr() + b * N * R, N, R).noalias() =
        A * detail::CMap<T>(h.value().ptr() + b * N * R, N, R);
  return emit(tp, std::move(y), {a, h}, [tp, a, h, B, N, R](std::size_t id) {
    return [tp, a, h, B, N, R, id] {
      const T* pg = tp->grad(id).ptr();
      for (std::size_t b = 0; b < B; ++b) {
        detail::CMap<T> g(pg + b * N * R, N, R);
        if (tp->requires_grad(a.id))
          detail::Map<T>(tp->grad(a.id).ptr(), N, N).noalias() +=
              g * detail::CMap<T>(h.value().ptr() + b * N * R, N, R).transpose();
        if (tp->requires_grad(h.id))
          detail::Map<T>(tp->grad(h.id).ptr() + b * N * R, N, R).noalias() +=
              detail::CMap<T>(a.value().ptr(), N, N).transpose() * g;
      }
    };
  });
}

// ---------------------------------------------------------------------------
// Convolutions and normalisation

/// Valid 2-D cross-correlation over the last two axes. x (R, H, W) and
/// kernels k (O, kh, kw) give (R, O, Ho, Wo) with Ho = (H - kh) / sh + 1.
template <typename T>
Var<T> conv2d(Var<T> x, Var<T> k, std::array<std::size_t, 2> stride) {
  require(x.rank() == 3 && k.rank() == 3, ErrorCode::shape_error,
          "conv2d expects x (R, H, W) and kernels (O, kh, kw)");
  require(stride[0] >= 1 && stride[1] >= 1, ErrorCode::invalid_input, "conv2d stride must be positive");
  const std::size_t R = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t O = k.dim(0), kh = k.dim(1), kw = k.dim(2);
  require(kh <= H && kw <= W, ErrorCode::shape_error,
          "conv2d kernel " + shape_str(k.shape()) + " larger than input " + shape_str(x.shape()));
  const std::size_t Ho = (H - kh) / stride[0] + 1, Wo = (W - kw) / stride[1] + 1;
  Tape<T>* tp = x.tape;
  Tensor<T> y({R, O, Ho, Wo});
  const T* px = x.value().ptr();
  const T* pk = k.value().ptr();
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t i = 0; i < Ho; ++i)
        for (std::size_t j = 0; j < Wo; ++j) {
          T acc = 0;
          for (std::size_t a = 0; a < kh; ++a) {
            const T* xr = px + (r * H + i * stride[0] + a) * W + j * stride[1];
            const T* kr = pk + (o * kh + a) * kw;
            for (std::size_t b = 0; b < kw; ++b) acc += kr[b] * xr[b];
          }
          y[((r * O + o) * Ho + i) * Wo + j] = acc;
        }
  return emit(tp, std::move(y), {x, k}, [=](std::size_t id) {
    return [=] {
      const T* pg = tp->grad(id).ptr();
      const T* px = x.value().ptr();
      const T* pk = k.value().ptr();
      const bool gx = tp->requires_grad(x.id), gk = tp->requires_grad(k.id);
      T* dx = gx ? tp->grad(x.id).ptr() : nullptr;
      T* dk = gk ? tp->grad(k.id).ptr() : nullptr;
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t o = 0; o < O; ++o)
          for (std::size_t i = 0; i < Ho; ++i)
            for (std::size_t j = 0; j < Wo; ++j) {
              const T g = pg[((r * O + o) * Ho + i) * Wo + j];
              for (std::size_t a = 0; a < kh; ++a) {
                const std::size_t xo = (r * H + i * stride[0] + a) * W + j * stride[1];
                const std::size_t ko = (o * kh + a) * kw;
                for (std::size_t b = 0; b < kw; ++b) {
                  if (gx) dx[xo + b] += g * pk[ko + b];
                  if (gk) dk[ko + b] += g * px[xo + b];
                }
              }
            }
    };
  });
}

/// Depthwise 1-D convolution along the middle axis of x (outer, time,
/// lanes) with one odd-length kernel per lane, w (lanes, k), and zero
/// "same" padding: y[o, t, l] = sum_j w[l, j] x[o, t + j - k/2, l].
template <typename T>
Var<T> dwconv1d(Var<T> x, Var<T> w) {
  require(x.rank() == 3 && w.rank() == 2 && w.dim(0) == x.dim(2), ErrorCode::shape_error,
          "dwconv1d expects x (outer, time, lanes) and w (lanes, k), got " + shape_str(x.shape()) +
              " and " + shape_str(w.shape()));
  const std::size_t K = w.dim(1);
  require(K % 2 == 1, ErrorCode::invalid_input,
          "dwconv1d kernel size must be odd, got " + std::to_string(K));
  const std::size_t O = x.dim(0), Tn = x.dim(1), L = x.dim(2);
  const std::ptrdiff_t half = std::ptrdiff_t(K / 2);
  Tape<T>* tp = x.tape;
  Tensor<T> y(x.shape());
  const T* px = x.value().ptr();
  const T* pw = w.value().ptr();
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t t = 0; t < Tn; ++t) {
      T* yr = y.ptr() + (o * Tn + t) * L;
      for (std::size_t j = 0; j < K; ++j) {
        const std::ptrdiff_t src = std::ptrdiff_t(t) + std::ptrdiff_t(j) - half;
        if (src < 0 || src >= std::ptrdiff_t(Tn)) continue;
        const T* xr = px + (o * Tn + std::size_t(src)) * L;
        for (std::size_t l = 0; l < L; ++l) yr[l] += pw[l * K + j] * xr[l];
      }
    }
  return emit(tp, std::move(y), {x, w}, [=](std::size_t id) {
    return [=] {
      const T* pg = tp->grad(id).ptr();
      const T* px = x.value().ptr();
      const T* pw = w.value().ptr();
      const bool gx = tp->requires_grad(x.id), gw = tp->requires_grad(w.id);
      T* dx = gx ? tp->grad(x.id).ptr() : nullptr;
      std::vector<double> dw(gw ? L * K : 0, 0.0);
      for (std::size_t o = 0; o < O; ++o)
        for (std::size_t t = 0; t < Tn; ++t) {
          const T* gr = pg + (o * Tn + t) * L;
          for (std::size_t j = 0; j < K; ++j) {
            const std::ptrdiff_t src = std::ptrdiff_t(t) + std::ptrdiff_t(j) - half;
            if (src < 0 || src >= std::ptrdiff_t(Tn)) continue;
            const std::size_t xo = (o * Tn + std::size_t(src)) * L;
            for (std::size_t l = 0; l < L; ++l) {
              if (gx) dx[xo + l] += gr[l] * pw[l * K + j];
              if (gw) dw[l * K + j] += double(gr[l]) * px[xo + l];
            }
          }
        }
      if (gw) {
        auto& gwt = tp->grad(w.id);
        for (std::size_t i = 0; i < dw.size(); ++i) gwt[i] += T(dw[i]);
      }
    };
  });
}

/// Graph-wise layer normalisation. x is (B, N, M, D); every (b, m) slice is
/// normalised over its N x D entries to zero mean and unit variance, then
/// scaled by gain (D) and shifted by bias (D). A constant slice maps to the
/// bias.
template <typename T>
Var<T> layernorm_graph(Var<T> x, Var<T> gain, Var<T> bias, double eps) {
  require(eps > 0.0, ErrorCode::invalid_input, "layernorm eps must be positive");
  require(x.rank() == 4, ErrorCode::shape_error,
          "layernorm_graph expects (batch, node, slice, feature), got " + shape_str(x.shape()));
  const std::size_t B = x.dim(0), N = x.dim(1), M = x.dim(2), D = x.dim(3);
  require(gain.shape() == Shape{D} && bias.shape() == Shape{D}, ErrorCode::shape_error,
          "layernorm_graph gain/bias must have length " + std::to_string(D));
  Tape<T>* tp = x.tape;
  const double count = double(N * D);
  Tensor<T> xhat(x.shape()), y(x.shape());
  std::vector<double> inv_sigma(B * M);
  const T* px = x.value().ptr();
  const T* pg = gain.value().ptr();
  const T* pb = bias.value().ptr();
  auto at = [=](std::size_t b, std::size_t n, std::size_t m) { return ((b * N + n) * M + m) * D; };
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t m = 0; m < M; ++m) {
      double s = 0.0, s2 = 0.0;
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t d = 0; d < D; ++d) s += px[at(b, n, m) + d];
      const double mu = s / count;
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t d = 0; d < D; ++d) {
          const double c = px[at(b, n, m) + d] - mu;
          s2 += c * c;
        }
      const double is = 1.0 / std::sqrt(s2 / count + eps);
      inv_sigma[b * M + m] = is;
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t d = 0; d < D; ++d) {
          const std::size_t i = at(b, n, m) + d;
          xhat[i] = T((px[i] - mu) * is);
          y[i] = xhat[i] * pg[d] + pb[d];
        }
    }
  return emit(tp, std::move(y), {x, gain, bias}, [=, xhat = std::move(xhat)](std::size_t id) {
    return [=] {
      const T* g = tp->grad(id).ptr();
      const T* pg = gain.value().ptr();
      if (tp->requires_grad(gain.id) || tp->requires_grad(bias.id)) {
        std::vector<double> dg(D, 0.0), db(D, 0.0);
        for (std::size_t i = 0; i < xhat.size(); ++i) {
          dg[i % D] += double(g[i]) * xhat[i];
          db[i % D] += g[i];
        }
        if (tp->requires_grad(gain.id))
          for (std::size_t d = 0; d < D; ++d) tp->grad(gain.id)[d] += T(dg[d]);
        if (tp->requires_grad(bias.id))
          for (std::size_t d = 0; d < D; ++d) tp->grad(bias.id)[d] += T(db[d]);
      }
      if (!tp->requires_grad(x.id)) return;
      T* dx = tp->grad(x.id).ptr();
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t m = 0; m < M; ++m) {
          double mean_g = 0.0, mean_gx = 0.0;
          for (std::size_t n = 0; n < N; ++n)
            for (std::size_t d = 0; d < D; ++d) {
              const std::size_t i = at(b, n, m) + d;
              const double gh = double(g[i]) * pg[d];
              mean_g += gh;
              mean_gx += gh * xhat[i];
            }
          mean_g /= count;
          mean_gx /= count;
          const double is = inv_sigma[b * M + m];
          for (std::size_t n = 0; n < N; ++n)
            for (std::size_t d = 0; d < D; ++d) {
              const std::size_t i = at(b, n, m) + d;
              const double gh = double(g[i]) * pg[d];
              dx[i] += T(is * (gh - mean_g - xhat[i] * mean_gx));
            }
        }
    };
  });
}

}  // namespace stsc::ops
