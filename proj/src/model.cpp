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

#include "slt/model.hpp"

#include <fmt/format.h>

namespace slt {

std::string to_string(Activation activation) {
  return activation == Activation::Gelu ? "gelu" : "relu";
}

Activation parse_activation(const std::string& text) {
  if (text == "relu") return Activation::Relu;
  if (text == "gelu") return Activation::Gelu;
  throw ConfigError("activation", "expected relu or gelu, got '" + text + "'");
}

void ModelConfig::validate() const {
  auto positive = [](const char* field, int value) {
    if (value <= 0) throw ConfigError(field, fmt::format("must be positive, got {}", value));
  };
  auto probability = [](const char* field, double value) {
    if (!(value >= 0.0 && value < 1.0)) {
      throw ConfigError(field, fmt::format("must be in [0, 1), got {}", value));
    }
  };
  positive("encoder_layers", encoder_layers);
  positive("decoder_layers", decoder_layers);
  positive("embed_dim", embed_dim);
  positive("ffn_dim", ffn_dim);
  positive("attention_heads", attention_heads);
  positive("feature_dim", feature_dim);
  positive("max_positions", max_positions);
  if (vocab_size <= kNumSpecialIds) {
    throw ConfigError("vocab_size", fmt::format("must exceed {} reserved ids, got {}",
                                                kNumSpecialIds, vocab_size));
  }
  if (embed_dim % attention_heads != 0) {
    throw ConfigError("attention_heads", fmt::format("embed_dim {} is not divisible by {} heads",
                                                     embed_dim, attention_heads));
  }
  probability("dropout", dropout);
  probability("attention_dropout", attention_dropout);
  probability("activation_dropout", activation_dropout);
}

std::size_t parameter_count(const ModelConfig& c) {
  const std::size_t d = c.embed_dim, f = c.ffn_dim, v = c.vocab_size, feat = c.feature_dim;
  const std::size_t attn = 4 * (d * d + d);
  const std::size_t ffn = d * f + f + f * d + d;
  const std::size_t norm = 2 * d;
  const std::size_t encoder_layer = attn + ffn + 2 * norm;
  const std::size_t decoder_layer = 2 * attn + ffn + 3 * norm;
  return feat * d + d + c.encoder_layers * encoder_layer + norm + v * d + norm +
         c.decoder_layers * decoder_layer + norm + d * v;
}

AttentionMask padding_mask(std::size_t queries, std::span<const int> key_lengths,
                           std::size_t keys) {
  AttentionMask mask{key_lengths.size(), queries, keys, {}};
  mask.allowed.assign(mask.batch * queries * keys, 0);
  for (std::size_t b = 0; b < mask.batch; ++b) {
    const auto valid = std::min<std::size_t>(static_cast<std::size_t>(key_lengths[b]), keys);
    for (std::size_t q = 0; q < queries; ++q) {
      std::fill_n(mask.allowed.begin() + static_cast<std::ptrdiff_t>((b * queries + q) * keys),
                  valid, std::uint8_t{1});
    }
  }
  return mask;
}

AttentionMask causal_mask(const TokenMatrix& tokens) {
  const auto batch = static_cast<std::size_t>(tokens.rows());
  const auto steps = static_cast<std::size_t>(tokens.cols());
  AttentionMask mask{batch, steps, steps, {}};
  mask.allowed.assign(batch * steps * steps, 0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t q = 0; q < steps; ++q) {
      for (std::size_t k = 0; k <= q; ++k) {
        mask.allowed[(b * steps + q) * steps + k] = tokens(b, k) != kPadId ? 1 : 0;
      }
    }
  }
  return mask;
}

}  // namespace slt
