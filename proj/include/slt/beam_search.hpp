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

#include <Eigen/Core>
#include <cstddef>
#include <functional>
#include <vector>

#include "slt/tokens.hpp"

namespace slt {

struct DecodeConfig {
  int beam_size = 5;
  int max_len = 0;  // 0: derive from the source length
  double length_penalty = 1.0;
  int feature_stride = 1;
  int bos_id = kBosId;
  int eos_id = kEosId;
  int pad_id = kPadId;

  void validate() const;
};

/// min(200, 2 * frames / stride + 10).
int default_max_len(std::size_t source_frames, int feature_stride = 1);

/// Next-token log-probabilities, one row per prefix. All prefixes passed in
/// one call have the same length and start with bos.
using StepScorer = std::function<Eigen::MatrixXd(const std::vector<std::vector<int>>& prefixes)>;

struct Hypothesis {
  std::vector<int> tokens;  // starts with bos; ends with eos when finished
  double logprob = 0.0;
  bool finished = false;

  /// Generated tokens (everything after bos, eos included).
  std::size_t generated() const { return tokens.size() - 1; }
};

struct DecodeResult {
  std::vector<int> tokens;  // without bos and eos
  double logprob = 0.0;     // cumulative
  double score = 0.0;       // logprob / generated^length_penalty
  bool finished = false;    // eos was emitted
};

/// Final ranking score of a hypothesis.
double penalized_score(const Hypothesis& hyp, double length_penalty);

/// Beam search: every live hypothesis is expanded over the vocabulary (bos
/// and pad excluded) and the best beam_size continuations survive. An eos
/// continuation ranked inside the top beam_size is banked as finished.
/// Search stops once beam_size hypotheses are banked or after max_len
/// generated tokens, at which point live hypotheses are banked unfinished.
/// Ties break toward lower token ids, then shorter sequences.
DecodeResult beam_search(const StepScorer& scorer, const DecodeConfig& config);

/// Argmax decoding (lower id wins ties) until eos or max_len.
DecodeResult greedy(const StepScorer& scorer, const DecodeConfig& config);

}  // namespace slt
