// Copyright (c) 2026 The SLT Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "slt/rng.hpp"
#include "slt/tensor.hpp"

namespace slt {

enum class Mode { Train, Eval };

using TokenMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// allowed(b, q, k) == 1 when query q of item b may attend to key k.
/// Shared by all heads.
struct AttentionMask {
  std::size_t batch = 0;
  std::size_t queries = 0;
  std::size_t keys = 0;
  std::vector<std::uint8_t> allowed;

  bool operator()(std::size_t b, std::size_t q, std::size_t k) const {
    return allowed[(b * queries + q) * keys + k] != 0;
  }
};

namespace detail {

template <typename Scalar, typename... Ts>
Tape<Scalar>* recording_tape(const Ts&... inputs) {
  auto* tape = Tape<Scalar>::active();
  if (tape == nullptr) return nullptr;
  return (inputs.requires_grad() || ...) ? tape : nullptr;
}

template <typename Scalar>
ConstMatrixMap<Scalar> grad_matrix(const Tensor<Scalar>& t, std::size_t rows, std::size_t cols) {
  return ConstMatrixMap<Scalar>(t.node()->grad.data(), rows, cols);
}

template <typename Scalar>
MatrixMap<Scalar> grad_sink(const Tensor<Scalar>& t, std::size_t rows, std::size_t cols) {
  return MatrixMap<Scalar>(t.mutable_grad().data(), rows, cols);
}

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ShapeError(message);
}

}  // namespace detail

/// a[..., k] x b[k, n] -> [..., n]. Leading axes of `a` are folded into rows.
template <typename Scalar>
Tensor<Scalar> matmul(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  detail::require(a.rank() >= 2 && b.rank() == 2 && a.shape().back() == b.dim(0),
                  "matmul: incompatible shapes " + to_string(a.shape()) + " and " +
                      to_string(b.shape()));
  Shape out_shape = a.shape();
  out_shape.back() = b.dim(1);
  auto out = Tensor<Scalar>::zeros(out_shape);
  out.matrix().noalias() = a.matrix() * b.matrix();
  if (auto* tape = detail::recording_tape<Scalar>(a, b)) {
    out.set_requires_grad(true);
    tape->record(out, [a, b, out]() mutable {
      const auto m = a.size() / a.shape().back();
      const auto k = b.dim(0);
      const auto n = b.dim(1);
      auto g = detail::grad_matrix(out, m, n);
      if (a.requires_grad()) detail::grad_sink(a, m, k).noalias() += g * b.matrix().transpose();
      if (b.requires_grad()) detail::grad_sink(b, k, n).noalias() += a.matrix().transpose() * g;
    });
  }
  return out;
}

/// x[..., in] . weight[in, out] + bias[out]; bias may be undefined.
template <typename Scalar>
Tensor<Scalar> linear(const Tensor<Scalar>& x, const Tensor<Scalar>& weight,
                      const Tensor<Scalar>& bias) {
  detail::require(x.rank() >= 1 && weight.rank() == 2 && x.shape().back() == weight.dim(0),
                  "linear: input " + to_string(x.shape()) + " does not match weight " +
                      to_string(weight.shape()));
  const bool has_bias = bias.defined();
  if (has_bias) {
    detail::require(bias.rank() == 1 && bias.dim(0) == weight.dim(1),
                    "linear: bias " + to_string(bias.shape()) + " does not match weight " +
                        to_string(weight.shape()));
  }
  Shape out_shape = x.shape();
  out_shape.back() = weight.dim(1);
  auto out = Tensor<Scalar>::zeros(out_shape);
  auto y = out.matrix();
  y.noalias() = x.matrix() * weight.matrix();
  if (has_bias) y.rowwise() += bias.matrix().row(0);

  Tape<Scalar>* tape = has_bias ? detail::recording_tape<Scalar>(x, weight, bias)
                                : detail::recording_tape<Scalar>(x, weight);
  if (tape != nullptr) {
    out.set_requires_grad(true);
    tape->record(out, [x, weight, bias, out, has_bias]() mutable {
      const auto k = weight.dim(0);
      const auto n = weight.dim(1);
      const auto m = x.size() / k;
      auto g = detail::grad_matrix(out, m, n);
      if (x.requires_grad()) detail::grad_sink(x, m, k).noalias() += g * weight.matrix().transpose();
      if (weight.requires_grad()) {
        detail::grad_sink(weight, k, n).noalias() += x.matrix().transpose() * g;
      }
      if (has_bias && bias.requires_grad()) detail::grad_sink(bias, 1, n) += g.colwise().sum();
    });
  }
  return out;
}

/// a[n, m, k] x b[n, k, p] -> [n, m, p]; with transpose_b, b is [n, p, k].
template <typename Scalar>
Tensor<Scalar> batched_matmul(const Tensor<Scalar>& a, const Tensor<Scalar>& b,
                              bool transpose_b = false) {
  detail::require(a.rank() == 3 && b.rank() == 3 && a.dim(0) == b.dim(0),
                  "batched_matmul: incompatible shapes " + to_string(a.shape()) + " and " +
                      to_string(b.shape()));
  const auto batch = a.dim(0), m = a.dim(1), k = a.dim(2);
  const auto p = transpose_b ? b.dim(1) : b.dim(2);
  detail::require((transpose_b ? b.dim(2) : b.dim(1)) == k,
                  "batched_matmul: inner dimensions differ: " + to_string(a.shape()) + " and " +
                      to_string(b.shape()));
  auto out = Tensor<Scalar>::zeros({batch, m, p});
  const auto b_rows = transpose_b ? p : k;
  const auto b_cols = transpose_b ? k : p;
  for (std::size_t i = 0; i < batch; ++i) {
    ConstMatrixMap<Scalar> ai(a.data().data() + i * m * k, m, k);
    ConstMatrixMap<Scalar> bi(b.data().data() + i * k * p, b_rows, b_cols);
    MatrixMap<Scalar> oi(out.data().data() + i * m * p, m, p);
    if (transpose_b) {
      oi.noalias() = ai * bi.transpose();
    } else {
      oi.noalias() = ai * bi;
    }
  }
  if (auto* tape = detail::recording_tape<Scalar>(a, b)) {
    out.set_requires_grad(true);
    tape->record(out, [a, b, out, transpose_b, batch, m, k, p, b_rows, b_cols]() mutable {
      const Scalar* gdata = out.node()->grad.data();
      Scalar* ga = a.requires_grad() ? a.mutable_grad().data() : nullptr;
      Scalar* gb = b.requires_grad() ? b.mutable_grad().data() : nullptr;
      for (std::size_t i = 0; i < batch; ++i) {
        ConstMatrixMap<Scalar> gi(gdata + i * m * p, m, p);
        ConstMatrixMap<Scalar> ai(a.data().data() + i * m * k, m, k);
        ConstMatrixMap<Scalar> bi(b.data().data() + i * k * p, b_rows, b_cols);
        if (ga != nullptr) {
          MatrixMap<Scalar> dai(ga + i * m * k, m, k);
          if (transpose_b) {
            dai.noalias() += gi * bi;
          } else {
            dai.noalias() += gi * bi.transpose();
          }
        }
        if (gb != nullptr) {
          MatrixMap<Scalar> dbi(gb + i * k * p, b_rows, b_cols);
          if (transpose_b) {
            dbi.noalias() += gi.transpose() * ai;
          } else {
            dbi.noalias() += ai.transpose() * gi;
          }
        }
      }
    });
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> add(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  detail::require(a.shape() == b.shape(),
                  "add: shapes differ " + to_string(a.shape()) + " and " + to_string(b.shape()));
  auto out = Tensor<Scalar>::zeros(a.shape());
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + y[i];
  if (auto* tape = detail::recording_tape<Scalar>(a, b)) {
    out.set_requires_grad(true);
    tape->record(out, [a, b, out]() mutable {
      const auto& g = out.node()->grad;
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    });
  }
  return out;
}

/// Elementwise product.
template <typename Scalar>
Tensor<Scalar> mul(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  detail::require(a.shape() == b.shape(),
                  "mul: shapes differ " + to_string(a.shape()) + " and " + to_string(b.shape()));
  auto out = Tensor<Scalar>::zeros(a.shape());
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
  if (auto* tape = detail::recording_tape<Scalar>(a, b)) {
    out.set_requires_grad(true);
    tape->record(out, [a, b, out]() mutable {
      const auto& g = out.node()->grad;
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        auto y = b.data();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        auto x = a.data();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
      }
    });
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> scale(const Tensor<Scalar>& x, Scalar factor) {
  auto out = Tensor<Scalar>::zeros(x.shape());
  auto o = out.data();
  auto in = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i] * factor;
  if (auto* tape = detail::recording_tape<Scalar>(x)) {
    out.set_requires_grad(true);
    tape->record(out, [x, out, factor]() mutable {
      const auto& g = out.node()->grad;
      auto gx = x.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor;
    });
  }
  return out;
}

/// Sum of all elements as a scalar tensor.
template <typename Scalar>
Tensor<Scalar> sum(const Tensor<Scalar>& x) {
  Scalar total(0);
  for (auto v : x.data()) total += v;
  auto out = Tensor<Scalar>::scalar(total);
  if (auto* tape = detail::recording_tape<Scalar>(x)) {
    out.set_requires_grad(true);
    tape->record(out, [x, out]() mutable {
      const Scalar g = out.node()->grad[0];
      for (auto& gx : x.mutable_grad()) gx += g;
    });
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> mean(const Tensor<Scalar>& x) {
  return scale(sum(x), Scalar(1) / static_cast<Scalar>(x.size()));
}

/// Numerically stable softmax along `axis`.
template <typename Scalar>
Tensor<Scalar> softmax(const Tensor<Scalar>& x, std::size_t axis) {
  detail::require(axis < x.rank(), "softmax: axis " + std::to_string(axis) +
                                       " out of range for shape " + to_string(x.shape()));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const std::size_t n = x.dim(axis);
  auto out = Tensor<Scalar>::zeros(x.shape());
  auto in = x.data();
  auto y = out.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * n * inner + i;
      Scalar peak = in[base];
      for (std::size_t j = 1; j < n; ++j) peak = std::max(peak, in[base + j * inner]);
      Scalar total(0);
      for (std::size_t j = 0; j < n; ++j) {
        const Scalar e = std::exp(in[base + j * inner] - peak);
        y[base + j * inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < n; ++j) y[base + j * inner] /= total;
    }
  }
  if (auto* tape = detail::recording_tape<Scalar>(x)) {
    out.set_requires_grad(true);
    tape->record(out, [x, out, outer, inner, n]() mutable {
      const auto& g = out.node()->grad;
      auto y = out.data();
      auto gx = x.mutable_grad();
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
          const std::size_t base = o * n * inner + i;
          Scalar dot(0);
          for (std::size_t j = 0; j < n; ++j) dot += g[base + j * inner] * y[base + j * inner];
          for (std::size_t j = 0; j < n; ++j) {
            const auto at = base + j * inner;
            gx[at] += y[at] * (g[at] - dot);
          }
        }
      }
    });
  }
  return out;
}

/// log(softmax(x)) along the last axis.
template <typename Scalar>
Tensor<Scalar> log_softmax(const Tensor<Scalar>& x) {
  detail::require(x.rank() >= 1, "log_softmax: needs rank >= 1");
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.size() / n;
  auto out = Tensor<Scalar>::zeros(x.shape());
  auto in = x.data();
  auto y = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const Scalar* row = in.data() + r * n;
    const Scalar peak = *std::max_element(row, row + n);
    Scalar total(0);
    for (std::size_t j = 0; j < n; ++j) total += std::exp(row[j] - peak);
    const Scalar log_total = std::log(total) + peak;
    for (std::size_t j = 0; j < n; ++j) y[r * n + j] = row[j] - log_total;
  }
  if (auto* tape = detail::recording_tape<Scalar>(x)) {
    out.set_requires_grad(true);
    tape->record(out, [x, out, rows, n]() mutable {
      const auto& g = out.node()->grad;
      auto y = out.data();
      auto gx = x.mutable_grad();
      for (std::size_t r = 0; r < rows; ++r) {
        Scalar gsum(0);
        for (std::size_t j = 0; j < n; ++j) gsum += g[r * n + j];
        for (std::size_t j = 0; j < n; ++j) {
          gx[r * n + j] += g[r * n + j] - std::exp(y[r * n + j]) * gsum;
        }
      }
    });
  }
  return out;
}

/// Softmax over the last axis of scores[B, H, Tq, Tk] restricted to allowed
/// keys. Disallowed keys get exactly zero weight; a row with no allowed key
/// is all zeros.
template <typename Scalar>
Tensor<Scalar> masked_softmax(const Tensor<Scalar>& scores, const AttentionMask& mask) {
  detail::require(scores.rank() == 4 && scores.dim(0) == mask.batch &&
                      scores.dim(2) == mask.queries && scores.dim(3) == mask.keys,
                  "masked_softmax: scores " + to_string(scores.shape()) +
                      " do not match mask [" + std::to_string(mask.batch) + "x" +
                      std::to_string(mask.queries) + "x" + std::to_string(mask.keys) + "]");
  const auto batch = scores.dim(0), heads = scores.dim(1), tq = scores.dim(2), tk = scores.dim(3);
  auto out = Tensor<Scalar>::zeros(scores.shape());
  auto in = scores.data();
  auto y = out.data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t q = 0; q < tq; ++q) {
        const std::size_t base = ((b * heads + h) * tq + q) * tk;
        const std::uint8_t* allowed = mask.allowed.data() + (b * tq + q) * tk;
        Scalar peak = -std::numeric_limits<Scalar>::infinity();
        for (std::size_t k = 0; k < tk; ++k) {
          if (allowed[k]) peak = std::max(peak, in[base + k]);
        }
        if (peak == -std::numeric_limits<Scalar>::infinity()) continue;
        Scalar total(0);
        for (std::size_t k = 0; k < tk; ++k) {
          if (!allowed[k]) continue;
          const Scalar e = std::exp(in[base + k] - peak);
          y[base + k] = e;
          total += e;
        }
        for (std::size_t k = 0; k < tk; ++k) y[base + k] /= total;
      }
    }
  }
  if (auto* tape = detail::recording_tape<Scalar>(scores)) {
    out.set_requires_grad(true);
    tape->record(out, [scores, out, tk]() mutable {
      const auto& g = out.node()->grad;
      auto y = out.data();
      auto gx = scores.mutable_grad();
      const std::size_t rows = y.size() / tk;
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t base = r * tk;
        Scalar dot(0);
        for (std::size_t k = 0; k < tk; ++k) dot += g[base + k] * y[base + k];
        for (std::size_t k = 0; k < tk; ++k) gx[base + k] += y[base + k] * (g[base + k] - dot);
      }
    });
  }
  return out;
}

/// Normalizes the last axis to zero mean / unit variance, then applies
/// gain and bias elementwise.
template <typename Scalar>
Tensor<Scalar> layer_norm(const Tensor<Scalar>& x, const Tensor<Scalar>& gain,
                          const Tensor<Scalar>& bias, Scalar eps = Scalar(1e-5)) {
  detail::require(x.rank() >= 1 && gain.rank() == 1 && bias.rank() == 1 &&
                      gain.dim(0) == x.shape().back() && bias.dim(0) == x.shape().back(),
                  "layer_norm: input " + to_string(x.shape()) + " vs gain " +
                      to_string(gain.shape()) + " and bias " + to_string(bias.shape()));
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.size() / n;
  auto out = Tensor<Scalar>::zeros(x.shape());
  std::vector<Scalar> normalized(x.size());
  std::vector<Scalar> inv_std(rows);
  auto in = x.data();
  auto y = out.data();
  auto gamma = gain.data();
  auto beta = bias.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const Scalar* row = in.data() + r * n;
    Scalar mu(0);
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<Scalar>(n);
    Scalar var(0);
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<Scalar>(n);
    const Scalar s = Scalar(1) / std::sqrt(var + eps);
    inv_std[r] = s;
    for (std::size_t j = 0; j < n; ++j) {
      const Scalar xhat = (row[j] - mu) * s;
      normalized[r * n + j] = xhat;
      y[r * n + j] = gamma[j] * xhat + beta[j];
    }
  }
  if (auto* tape = detail::recording_tape<Scalar>(x, gain, bias)) {
    out.set_requires_grad(true);
    tape->record(out, [x, gain, bias, out, normalized = std::move(normalized),
                       inv_std = std::move(inv_std), rows, n]() mutable {
      const auto& g = out.node()->grad;
      auto gamma = gain.data();
      if (gain.requires_grad()) {
        auto gg = gain.mutable_grad();
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < n; ++j) gg[j] += g[r * n + j] * normalized[r * n + j];
        }
      }
      if (bias.requires_grad()) {
        auto gb = bias.mutable_grad();
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < n; ++j) gb[j] += g[r * n + j];
        }
      }
      if (x.requires_grad()) {
        auto gx = x.mutable_grad();
        const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
        for (std::size_t r = 0; r < rows; ++r) {
          Scalar mean_d(0), mean_dx(0);
          for (std::size_t j = 0; j < n; ++j) {
            const Scalar d = g[r * n + j] * gamma[j];
            mean_d += d;
            mean_dx += d * normalized[r * n + j];
          }
          mean_d *= inv_n;
          mean_dx *= inv_n;
          for (std::size_t j = 0; j < n; ++j) {
            const Scalar d = g[r * n + j] * gamma[j];
            gx[r * n + j] += inv_std[r] * (d - mean_d - normalized[r * n + j] * mean_dx);
          }
        }
      }
    });
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& x) {
  auto out = Tensor<Scalar>::zeros(x.shape());
  auto in = x.data();
  auto y = out.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = in[i] > Scalar(0) ? in[i] : Scalar(0);
  if (auto* tape = detail::recording_tape<Scalar>(x)) {
    out.set_requires_grad(true);
    tape->record(out, [x, out]() mutable {
      const auto& g = out.node()->grad;
      auto in = x.data();
      auto gx = x.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (in[i] > Scalar(0)) gx[i] += g[i];
      }
    });
  }
  return out;
}

namespace detail {
template <typename Scalar>
constexpr Scalar kGeluC = static_cast<Scalar>(0.7978845608028654);  // sqrt(2/pi)
template <typename Scalar>
constexpr Scalar kGeluCubic = static_cast<Scalar>(0.044715);
}  // namespace detail

/// Tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
template <typename Scalar>
Tensor<Scalar> gelu(const Tensor<Scalar>& x) {
  constexpr Scalar c = detail::kGeluC<Scalar>;
  constexpr Scalar a = detail::kGeluCubic<Scalar>;
  auto out = Tensor<Scalar>::zeros(x.shape());
  auto in = x.data();
  auto y = out.data();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Scalar v = in[i];
    y[i] = Scalar(0.5) * v * (Scalar(1) + std::tanh(c * (v + a * v * v * v)));
  }
  if (auto* tape = detail::recording_tape<Scalar>(x)) {
    out.set_requires_grad(true);
    tape->record(out, [x, out]() mutable {
      const auto& g = out.node()->grad;
      auto in = x.data();
      auto gx = x.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const Scalar v = in[i];
        const Scalar t = std::tanh(c * (v + a * v * v * v));
        const Scalar dt = (Scalar(1) - t * t) * c * (Scalar(1) + Scalar(3) * a * v * v);
        gx[i] += g[i] * (Scalar(0.5) * (Scalar(1) + t) + Scalar(0.5) * v * dt);
      }
    });
  }
  return out;
}

/// Inverted dropout. Eval mode and p == 0 return `x` itself.
template <typename Scalar>
Tensor<Scalar> dropout(const Tensor<Scalar>& x, double p, Mode mode, Rng* rng) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw InputError("dropout probability must be in [0, 1), got " + std::to_string(p));
  }
  if (mode == Mode::Eval || p == 0.0) return x;
  if (rng == nullptr) throw InputError("dropout in train mode needs an rng");
  const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - p));
  std::vector<Scalar> factor(x.size());
  for (auto& f : factor) f = rng->uniform() < p ? Scalar(0) : keep_scale;
  auto out = Tensor<Scalar>::zeros(x.shape());
  auto in = x.data();
  auto y = out.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = in[i] * factor[i];
  if (auto* tape = detail::recording_tape<Scalar>(x)) {
    out.set_requires_grad(true);
    tape->record(out, [x, out, factor = std::move(factor)]() mutable {
      const auto& g = out.node()->grad;
      auto gx = x.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor[i];
    });
  }
  return out;
}

/// Row lookup: ids[B, T] into table[V, d] -> [B, T, d]. The padding row
/// receives no gradient.
template <typename Scalar>
Tensor<Scalar> embedding(const TokenMatrix& ids, const Tensor<Scalar>& table, int padding_idx) {
  detail::require(table.rank() == 2, "embedding: table must be rank 2");
  const auto vocab = static_cast<int>(table.dim(0));
  const auto d = table.dim(1);
  const auto rows = static_cast<std::size_t>(ids.size());
  for (Eigen::Index i = 0; i < ids.size(); ++i) {
    const int id = ids.data()[i];
    if (id < 0 || id >= vocab) {
      throw InputError("token id " + std::to_string(id) + " out of range for vocabulary of " +
                       std::to_string(vocab));
    }
  }
  auto out = Tensor<Scalar>::zeros(
      {static_cast<std::size_t>(ids.rows()), static_cast<std::size_t>(ids.cols()), d});
  auto t = table.data();
  auto y = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const auto id = static_cast<std::size_t>(ids.data()[r]);
    std::copy_n(t.data() + id * d, d, y.data() + r * d);
  }
  if (auto* tape = detail::recording_tape<Scalar>(table)) {
    out.set_requires_grad(true);
    tape->record(out, [ids, table, out, padding_idx, rows, d]() mutable {
      const auto& g = out.node()->grad;
      auto gt = table.mutable_grad();
      for (std::size_t r = 0; r < rows; ++r) {
        const int id = ids.data()[r];
        if (id == padding_idx) continue;
        Scalar* dst = gt.data() + static_cast<std::size_t>(id) * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] += g[r * d + j];
      }
    });
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> reshape(const Tensor<Scalar>& x, Shape shape) {
  detail::require(numel(shape) == x.size(), "reshape: cannot view " + to_string(x.shape()) +
                                                " as " + to_string(shape));
  Tensor<Scalar> out(std::move(shape), std::vector<Scalar>(x.data().begin(), x.data().end()));
  if (auto* tape = detail::recording_tape<Scalar>(x)) {
    out.set_requires_grad(true);
    tape->record(out, [x, out]() mutable {
      const auto& g = out.node()->grad;
      auto gx = x.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  return out;
}

/// out.shape[i] = x.shape[perm[i]].
template <typename Scalar>
Tensor<Scalar> permute(const Tensor<Scalar>& x, const std::vector<std::size_t>& perm) {
  const auto rank = x.rank();
  detail::require(perm.size() == rank, "permute: permutation rank mismatch");
  std::vector<bool> seen(rank, false);
  for (auto p : perm) {
    detail::require(p < rank && !seen[p], "permute: invalid permutation");
    seen[p] = true;
  }
  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) out_shape[i] = x.dim(perm[i]);
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_strides[i - 1] = in_strides[i] * x.dim(i);
  // source offset for each output element
  std::vector<std::size_t> source(x.size());
  std::vector<std::size_t> index(rank, 0);
  for (std::size_t flat = 0; flat < source.size(); ++flat) {
    std::size_t offset = 0;
    for (std::size_t i = 0; i < rank; ++i) offset += index[i] * in_strides[perm[i]];
    source[flat] = offset;
    for (std::size_t i = rank; i-- > 0;) {
      if (++index[i] < out_shape[i]) break;
      index[i] = 0;
    }
  }
  auto out = Tensor<Scalar>::zeros(out_shape);
  auto in = x.data();
  auto y = out.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = in[source[i]];
  if (auto* tape = detail::recording_tape<Scalar>(x)) {
    out.set_requires_grad(true);
    tape->record(out, [x, out, source = std::move(source)]() mutable {
      const auto& g = out.node()->grad;
      auto gx = x.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[source[i]] += g[i];
    });
  }
  return out;
}

}  // namespace slt
