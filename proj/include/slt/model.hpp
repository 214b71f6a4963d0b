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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slt/ops.hpp"
#include "slt/rng.hpp"
#include "slt/tensor.hpp"
#include "slt/tokens.hpp"

namespace slt {

enum class Activation { Relu, Gelu };

std::string to_string(Activation activation);
Activation parse_activation(const std::string& text);

/// Architecture hyperparameters. Defaults are the 6-3 baseline.
struct ModelConfig {
  int encoder_layers = 6;
  int decoder_layers = 3;
  int embed_dim = 256;
  int ffn_dim = 1024;
  int attention_heads = 4;
  Activation activation = Activation::Relu;
  double dropout = 0.3;
  double attention_dropout = 0.0;
  double activation_dropout = 0.0;
  int feature_dim = 1024;
  int vocab_size = 7000;
  int max_positions = 1024;

  /// Throws ConfigError naming the first offending field.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

/// Closed-form parameter count for `config`.
std::size_t parameter_count(const ModelConfig& config);

template <typename Scalar>
struct LinearParams {
  Tensor<Scalar> weight;  // [in, out]
  Tensor<Scalar> bias;    // [out]; undefined when the layer has no bias
};

template <typename Scalar>
struct LayerNormParams {
  Tensor<Scalar> gain;
  Tensor<Scalar> bias;
};

template <typename Scalar>
struct AttentionParams {
  LinearParams<Scalar> k_proj, v_proj, q_proj, out_proj;
};

template <typename Scalar>
struct EncoderLayerParams {
  AttentionParams<Scalar> self_attn;
  LayerNormParams<Scalar> self_attn_layer_norm;
  LinearParams<Scalar> fc1, fc2;
  LayerNormParams<Scalar> final_layer_norm;
};

template <typename Scalar>
struct DecoderLayerParams {
  AttentionParams<Scalar> self_attn;
  LayerNormParams<Scalar> self_attn_layer_norm;
  AttentionParams<Scalar> encoder_attn;
  LayerNormParams<Scalar> encoder_attn_layer_norm;
  LinearParams<Scalar> fc1, fc2;
  LayerNormParams<Scalar> final_layer_norm;
};

template <typename Scalar>
using NamedTensor = std::pair<std::string, Tensor<Scalar>>;

template <typename Scalar>
struct ModelParams {
  LinearParams<Scalar> feat_proj;
  std::vector<EncoderLayerParams<Scalar>> encoder_layers;
  LayerNormParams<Scalar> encoder_layer_norm;
  Tensor<Scalar> embed_tokens;  // [vocab, d]
  LayerNormParams<Scalar> layernorm_embedding;
  std::vector<DecoderLayerParams<Scalar>> decoder_layers;
  LayerNormParams<Scalar> decoder_layer_norm;
  Tensor<Scalar> output_projection;  // [d, vocab], no bias

  /// Every tensor with a stable dotted name. Handles share storage.
  std::vector<NamedTensor<Scalar>> named() const {
    std::vector<NamedTensor<Scalar>> out;
    auto lin = [&](const std::string& p, const LinearParams<Scalar>& l) {
      out.emplace_back(p + ".weight", l.weight);
      if (l.bias.defined()) out.emplace_back(p + ".bias", l.bias);
    };
    auto norm = [&](const std::string& p, const LayerNormParams<Scalar>& n) {
      out.emplace_back(p + ".weight", n.gain);
      out.emplace_back(p + ".bias", n.bias);
    };
    auto attn = [&](const std::string& p, const AttentionParams<Scalar>& a) {
      lin(p + ".k_proj", a.k_proj);
      lin(p + ".v_proj", a.v_proj);
      lin(p + ".q_proj", a.q_proj);
      lin(p + ".out_proj", a.out_proj);
    };
    lin("encoder.feat_proj", feat_proj);
    for (std::size_t i = 0; i < encoder_layers.size(); ++i) {
      const auto p = "encoder.layers." + std::to_string(i);
      const auto& l = encoder_layers[i];
      attn(p + ".self_attn", l.self_attn);
      norm(p + ".self_attn_layer_norm", l.self_attn_layer_norm);
      lin(p + ".fc1", l.fc1);
      lin(p + ".fc2", l.fc2);
      norm(p + ".final_layer_norm", l.final_layer_norm);
    }
    norm("encoder.layer_norm", encoder_layer_norm);
    out.emplace_back("decoder.embed_tokens.weight", embed_tokens);
    norm("decoder.layernorm_embedding", layernorm_embedding);
    for (std::size_t i = 0; i < decoder_layers.size(); ++i) {
      const auto p = "decoder.layers." + std::to_string(i);
      const auto& l = decoder_layers[i];
      attn(p + ".self_attn", l.self_attn);
      norm(p + ".self_attn_layer_norm", l.self_attn_layer_norm);
      attn(p + ".encoder_attn", l.encoder_attn);
      norm(p + ".encoder_attn_layer_norm", l.encoder_attn_layer_norm);
      lin(p + ".fc1", l.fc1);
      lin(p + ".fc2", l.fc2);
      norm(p + ".final_layer_norm", l.final_layer_norm);
    }
    norm("decoder.layer_norm", decoder_layer_norm);
    out.emplace_back("decoder.output_projection.weight", output_projection);
    return out;
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : named()) n += t.size();
    return n;
  }

  void zero_grad() {
    for (auto& [name, t] : named()) t.zero_grad();
  }
};

/// Zero-filled parameters with the right shapes, every tensor requiring grad.
template <typename Scalar>
ModelParams<Scalar> allocate_params(const ModelConfig& config) {
  config.validate();
  const auto d = static_cast<std::size_t>(config.embed_dim);
  const auto f = static_cast<std::size_t>(config.ffn_dim);
  const auto vocab = static_cast<std::size_t>(config.vocab_size);
  const auto feat = static_cast<std::size_t>(config.feature_dim);
  auto z = [](Shape s) { return Tensor<Scalar>::zeros(std::move(s), true); };
  auto lin = [&](std::size_t in, std::size_t out) {
    return LinearParams<Scalar>{z({in, out}), z({out})};
  };
  auto norm = [&]() { return LayerNormParams<Scalar>{z({d}), z({d})}; };
  auto attn = [&]() { return AttentionParams<Scalar>{lin(d, d), lin(d, d), lin(d, d), lin(d, d)}; };

  ModelParams<Scalar> p;
  p.feat_proj = lin(feat, d);
  for (int i = 0; i < config.encoder_layers; ++i) {
    p.encoder_layers.push_back({attn(), norm(), lin(d, f), lin(f, d), norm()});
  }
  p.encoder_layer_norm = norm();
  p.embed_tokens = z({vocab, d});
  p.layernorm_embedding = norm();
  for (int i = 0; i < config.decoder_layers; ++i) {
    p.decoder_layers.push_back({attn(), norm(), attn(), norm(), lin(d, f), lin(f, d), norm()});
  }
  p.decoder_layer_norm = norm();
  p.output_projection = z({d, vocab});
  return p;
}

/// Glorot-uniform weights, zero biases, unit layer-norm gains. The padding
/// row of the token embedding is zero.
template <typename Scalar>
ModelParams<Scalar> init_params(const ModelConfig& config, std::uint64_t seed) {
  auto params = allocate_params<Scalar>(config);
  Rng rng(seed);
  for (auto& [name, t] : params.named()) {
    const bool is_norm = name.find("layer_norm") != std::string::npos ||
                         name.find("layernorm") != std::string::npos;
    auto values = t.data();
    if (t.rank() == 1) {
      std::fill(values.begin(), values.end(),
                is_norm && name.ends_with(".weight") ? Scalar(1) : Scalar(0));
      continue;
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(t.dim(0) + t.dim(1)));
    for (auto& v : values) v = static_cast<Scalar>(rng.uniform(-bound, bound));
  }
  auto table = params.embed_tokens.data();
  const auto d = params.embed_tokens.dim(1);
  std::fill_n(table.begin() + static_cast<std::ptrdiff_t>(kPadId * d), d, Scalar(0));
  return params;
}

template <typename To, typename From>
ModelParams<To> params_cast(const ModelParams<From>& params, const ModelConfig& config) {
  auto out = allocate_params<To>(config);
  auto src = params.named();
  auto dst = out.named();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    auto values = dst[i].second.data();
    std::copy(src[i].second.data().begin(), src[i].second.data().end(), values.begin());
  }
  return out;
}

/// Fixed position encodings, one row per position 0..max_positions. Row 0 is
/// the padding position and is all zeros; position p >= 1 holds
/// sin(p / 10000^(2i/d)) in the first half and the matching cos in the second.
template <typename Scalar>
RowMatrix<Scalar> sinusoidal_table(std::size_t max_positions, std::size_t dim) {
  RowMatrix<Scalar> table = RowMatrix<Scalar>::Zero(max_positions + 1, dim);
  const std::size_t half = dim / 2;
  for (std::size_t pos = 1; pos <= max_positions; ++pos) {
    for (std::size_t i = 0; i < half; ++i) {
      const double angle = static_cast<double>(pos) /
                           std::pow(10000.0, 2.0 * static_cast<double>(i) / static_cast<double>(dim));
      table(pos, i) = static_cast<Scalar>(std::sin(angle));
      table(pos, half + i) = static_cast<Scalar>(std::cos(angle));
    }
  }
  return table;
}

/// allowed(b, q, k) = k < key_lengths[b].
AttentionMask padding_mask(std::size_t queries, std::span<const int> key_lengths, std::size_t keys);

/// allowed(b, q, k) = k <= q and tokens(b, k) is not padding.
AttentionMask causal_mask(const TokenMatrix& tokens);

/// Multi-head scaled dot-product attention with input/output projections.
template <typename Scalar>
Tensor<Scalar> attention(const Tensor<Scalar>& query, const Tensor<Scalar>& key,
                         const Tensor<Scalar>& value, const AttentionParams<Scalar>& params,
                         int heads, const AttentionMask& mask, double dropout_p, Mode mode,
                         Rng* rng) {
  detail::require(query.rank() == 3 && key.rank() == 3 && value.shape() == key.shape() &&
                      query.dim(0) == key.dim(0) && query.dim(2) == key.dim(2),
                  "attention: query " + to_string(query.shape()) + ", key " +
                      to_string(key.shape()) + ", value " + to_string(value.shape()));
  const auto batch = query.dim(0), tq = query.dim(1), d = query.dim(2), tk = key.dim(1);
  const auto h = static_cast<std::size_t>(heads);
  detail::require(h > 0 && d % h == 0, "attention: embed dim " + std::to_string(d) +
                                           " not divisible by " + std::to_string(heads) +
                                           " heads");
  const auto dh = d / h;
  auto split = [&](const Tensor<Scalar>& x, std::size_t steps) {
    return reshape(permute(reshape(x, {batch, steps, h, dh}), {0, 2, 1, 3}),
                   {batch * h, steps, dh});
  };
  auto q = scale(linear(query, params.q_proj.weight, params.q_proj.bias),
                 static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(dh))));
  auto k = linear(key, params.k_proj.weight, params.k_proj.bias);
  auto v = linear(value, params.v_proj.weight, params.v_proj.bias);
  auto scores = reshape(batched_matmul(split(q, tq), split(k, tk), true), {batch, h, tq, tk});
  auto weights = dropout(masked_softmax(scores, mask), dropout_p, mode, rng);
  auto context = batched_matmul(reshape(weights, {batch * h, tq, tk}), split(v, tk));
  auto merged = reshape(permute(reshape(context, {batch, h, tq, dh}), {0, 2, 1, 3}),
                        {batch, tq, d});
  return linear(merged, params.out_proj.weight, params.out_proj.bias);
}

template <typename Scalar>
struct EncoderOutput {
  Tensor<Scalar> states;     // [B, T, d]
  std::vector<int> lengths;  // valid frames per item
};

namespace detail {

template <typename Scalar>
Tensor<Scalar> apply_activation(const Tensor<Scalar>& x, Activation activation) {
  return activation == Activation::Gelu ? gelu(x) : relu(x);
}

template <typename Scalar>
Tensor<Scalar> norm(const Tensor<Scalar>& x, const LayerNormParams<Scalar>& p) {
  return layer_norm(x, p.gain, p.bias, Scalar(1e-5));
}

template <typename Scalar>
Tensor<Scalar> feed_forward(const Tensor<Scalar>& x, const LinearParams<Scalar>& fc1,
                            const LinearParams<Scalar>& fc2, const ModelConfig& config,
                            Mode mode, Rng* rng) {
  auto hidden = apply_activation(linear(x, fc1.weight, fc1.bias), config.activation);
  hidden = dropout(hidden, config.activation_dropout, mode, rng);
  return dropout(linear(hidden, fc2.weight, fc2.bias), config.dropout, mode, rng);
}

}  // namespace detail

/// Projects features[B, T, feature_dim] into the encoder stack (pre-norm
/// blocks, final layer norm). Frames at or beyond lengths[b] are masked out.
template <typename Scalar>
EncoderOutput<Scalar> encode(const Tensor<Scalar>& features, std::span<const int> lengths,
                             const ModelParams<Scalar>& params, const ModelConfig& config,
                             Mode mode, Rng* rng) {
  if (features.rank() != 3 || features.dim(2) != static_cast<std::size_t>(config.feature_dim)) {
    throw InputError("encoder expects features [B, T, " + std::to_string(config.feature_dim) +
                     "], got " + to_string(features.shape()));
  }
  const auto batch = features.dim(0), frames = features.dim(1);
  const auto d = static_cast<std::size_t>(config.embed_dim);
  if (lengths.size() != batch) throw InputError("encoder: one length per batch item required");
  for (int len : lengths) {
    if (len < 1 || static_cast<std::size_t>(len) > frames) {
      throw InputError("encoder: source length " + std::to_string(len) + " outside [1, " +
                       std::to_string(frames) + "]");
    }
    if (len > config.max_positions) {
      throw InputError("encoder: source length " + std::to_string(len) + " exceeds max_positions " +
                       std::to_string(config.max_positions));
    }
  }

  const auto longest = static_cast<std::size_t>(*std::max_element(lengths.begin(), lengths.end()));
  const auto table = sinusoidal_table<Scalar>(longest, d);
  auto positions = Tensor<Scalar>::zeros({batch, frames, d});
  auto pos = positions.matrix();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < static_cast<std::size_t>(lengths[b]); ++t) {
      pos.row(static_cast<Eigen::Index>(b * frames + t)) = table.row(static_cast<Eigen::Index>(t + 1));
    }
  }

  auto x = linear(features, params.feat_proj.weight, params.feat_proj.bias);
  x = scale(x, static_cast<Scalar>(std::sqrt(static_cast<double>(d))));
  x = dropout(add(x, positions), config.dropout, mode, rng);

  const auto mask = padding_mask(frames, lengths, frames);
  for (const auto& layer : params.encoder_layers) {
    auto h = detail::norm(x, layer.self_attn_layer_norm);
    h = attention(h, h, h, layer.self_attn, config.attention_heads, mask, config.attention_dropout,
                  mode, rng);
    x = add(x, dropout(h, config.dropout, mode, rng));
    h = detail::norm(x, layer.final_layer_norm);
    x = add(x, detail::feed_forward(h, layer.fc1, layer.fc2, config, mode, rng));
  }
  return {detail::norm(x, params.encoder_layer_norm),
          std::vector<int>(lengths.begin(), lengths.end())};
}

/// Position encodings for decoder inputs: non-pad tokens are numbered from 1
/// in order, pad tokens get the zero row.
template <typename Scalar>
Tensor<Scalar> token_positions(const TokenMatrix& tokens, const ModelConfig& config) {
  const auto batch = static_cast<std::size_t>(tokens.rows());
  const auto steps = static_cast<std::size_t>(tokens.cols());
  const auto d = static_cast<std::size_t>(config.embed_dim);
  const auto table = sinusoidal_table<Scalar>(
      std::min(steps, static_cast<std::size_t>(config.max_positions)), d);
  auto positions = Tensor<Scalar>::zeros({batch, steps, d});
  auto pos = positions.matrix();
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t next = 1;
    for (std::size_t t = 0; t < steps; ++t) {
      if (tokens(b, t) == kPadId) continue;
      if (next > static_cast<std::size_t>(config.max_positions)) {
        throw InputError("decoder: target length exceeds max_positions " +
                         std::to_string(config.max_positions));
      }
      pos.row(static_cast<Eigen::Index>(b * steps + t)) = table.row(static_cast<Eigen::Index>(next++));
    }
  }
  return positions;
}

/// Runs the decoder over prev_tokens[B, T] and returns next-token
/// log-probabilities [B, T, vocab]. With `encoder == nullptr` the
/// cross-attention sublayers are skipped (decoder-only run).
template <typename Scalar>
Tensor<Scalar> decode_step(const TokenMatrix& prev_tokens, const EncoderOutput<Scalar>* encoder,
                           const ModelParams<Scalar>& params, const ModelConfig& config,
                           Mode mode, Rng* rng) {
  const auto batch = static_cast<std::size_t>(prev_tokens.rows());
  const auto steps = static_cast<std::size_t>(prev_tokens.cols());
  const auto d = static_cast<std::size_t>(config.embed_dim);
  if (batch == 0 || steps == 0) throw InputError("decoder: empty token batch");
  if (encoder != nullptr && encoder->states.dim(0) != batch) {
    throw InputError("decoder: encoder batch " + std::to_string(encoder->states.dim(0)) +
                     " differs from token batch " + std::to_string(batch));
  }

  auto x = embedding(prev_tokens, params.embed_tokens, kPadId);
  x = scale(x, static_cast<Scalar>(std::sqrt(static_cast<double>(d))));
  x = add(x, token_positions<Scalar>(prev_tokens, config));
  x = detail::norm(x, params.layernorm_embedding);
  x = dropout(x, config.dropout, mode, rng);

  const auto self_mask = causal_mask(prev_tokens);
  AttentionMask cross_mask;
  if (encoder != nullptr) {
    cross_mask = padding_mask(steps, encoder->lengths, encoder->states.dim(1));
  }
  for (const auto& layer : params.decoder_layers) {
    auto h = detail::norm(x, layer.self_attn_layer_norm);
    h = attention(h, h, h, layer.self_attn, config.attention_heads, self_mask,
                  config.attention_dropout, mode, rng);
    x = add(x, dropout(h, config.dropout, mode, rng));
    if (encoder != nullptr) {
      h = detail::norm(x, layer.encoder_attn_layer_norm);
      h = attention(h, encoder->states, encoder->states, layer.encoder_attn,
                    config.attention_heads, cross_mask, config.attention_dropout, mode, rng);
      x = add(x, dropout(h, config.dropout, mode, rng));
    }
    h = detail::norm(x, layer.final_layer_norm);
    x = add(x, detail::feed_forward(h, layer.fc1, layer.fc2, config, mode, rng));
  }
  x = detail::norm(x, params.decoder_layer_norm);
  return log_softmax(matmul(x, params.output_projection));
}

}  // namespace slt
