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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "slt/beam_search.hpp"
#include "slt/bleu.hpp"
#include "slt/data.hpp"
#include "slt/model.hpp"
#include "slt/tokenizer.hpp"

namespace slt {

/// Scores prefixes against one encoded source (batch of 1), repeating the
/// encoder states once per live hypothesis.
template <typename Scalar>
StepScorer make_model_scorer(const ModelParams<Scalar>& params, const ModelConfig& config,
                             const EncoderOutput<Scalar>& source) {
  if (source.states.dim(0) != 1) throw ShapeError("model scorer expects a single encoded source");
  return [&params, &config, source](const std::vector<std::vector<int>>& prefixes) {
    const auto n = prefixes.size();
    const auto steps = prefixes.front().size();
    TokenMatrix tokens(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(steps));
    for (std::size_t i = 0; i < n; ++i) {
      if (prefixes[i].size() != steps) throw ShapeError("model scorer: ragged prefixes");
      for (std::size_t t = 0; t < steps; ++t) {
        tokens(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = prefixes[i][t];
      }
    }
    const auto frames = source.states.dim(1), d = source.states.dim(2);
    std::vector<Scalar> repeated;
    repeated.reserve(n * frames * d);
    for (std::size_t i = 0; i < n; ++i) {
      repeated.insert(repeated.end(), source.states.data().begin(), source.states.data().end());
    }
    EncoderOutput<Scalar> encoder{Tensor<Scalar>({n, frames, d}, std::move(repeated)),
                                  std::vector<int>(n, source.lengths.front())};
    const auto logprobs = decode_step(tokens, &encoder, params, config, Mode::Eval, nullptr);
    const auto vocab = logprobs.dim(2);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(vocab));
    const auto values = logprobs.data();
    for (std::size_t i = 0; i < n; ++i) {
      const auto* row = values.data() + (i * steps + steps - 1) * vocab;
      for (std::size_t j = 0; j < vocab; ++j) {
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = static_cast<double>(row[j]);
      }
    }
    return out;
  };
}

/// Encodes one feature sequence and decodes it (beam search, or greedy when
/// `use_greedy`). max_len = 0 resolves from the source length.
DecodeResult translate_features(const ModelParams<float>& params, const ModelConfig& config,
                                const FeatureSequence& features, DecodeConfig decode,
                                bool use_greedy = false);

/// Decodes every sequence; results keep input order regardless of `threads`.
std::vector<DecodeResult> translate_all(const ModelParams<float>& params, const ModelConfig& config,
                                        std::span<const FeatureSequence* const> items,
                                        const DecodeConfig& decode, bool use_greedy = false,
                                        int threads = 1);

/// Token ids -> detokenized, truecased sentence.
std::string postprocess(std::span<const int> tokens, const Vocabulary& vocab,
                        const CasingModel& casing);

struct SplitResult {
  BleuReport bleu;
  BleuReport rbleu;
  std::vector<std::string> ids;
  std::vector<std::string> hypotheses;
  std::vector<std::string> references;
  double exact_match = 0.0;  // fraction of sentences equal under scoring tokenization
};

/// Scores finished hypotheses against raw references.
SplitResult score_split(std::vector<std::string> ids, std::vector<std::string> hypotheses,
                        std::vector<std::string> references, const ExclusionList& exclusions);

/// Decode, detokenize, truecase and score a split. With
/// `references_as_hypotheses` the model is bypassed and each reference is
/// passed through the same post-processing path as a decoded sentence.
SplitResult evaluate_split(const ModelParams<float>& params, const ModelConfig& config,
                           const Dataset& data, const Vocabulary& vocab, const CasingModel& casing,
                           const DecodeConfig& decode, const ExclusionList& exclusions,
                           int threads = 1, bool references_as_hypotheses = false);

/// id, hypothesis, reference per line (tab-separated, with a header).
void write_hypotheses(const std::filesystem::path& path, const SplitResult& result);

}  // namespace slt
