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

#include "slt/beam_search.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "slt/errors.hpp"

namespace slt {
namespace {

struct Candidate {
  double logprob;
  int token;
  std::size_t parent;
};

bool better_final(const Hypothesis& a, double score_a, const Hypothesis& b, double score_b) {
  if (score_a != score_b) return score_a > score_b;
  const auto n = std::min(a.tokens.size(), b.tokens.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a.tokens[i] != b.tokens[i]) return a.tokens[i] < b.tokens[i];
  }
  return a.tokens.size() < b.tokens.size();
}

DecodeResult to_result(const Hypothesis& hyp, double length_penalty, int eos) {
  DecodeResult r;
  r.tokens.assign(hyp.tokens.begin() + 1, hyp.tokens.end());
  if (!r.tokens.empty() && r.tokens.back() == eos) r.tokens.pop_back();
  r.logprob = hyp.logprob;
  r.score = penalized_score(hyp, length_penalty);
  r.finished = hyp.finished;
  return r;
}

void check_scores(const Eigen::MatrixXd& scores, std::size_t rows) {
  if (static_cast<std::size_t>(scores.rows()) != rows || scores.cols() == 0) {
    throw ShapeError(fmt::format("step scorer returned {}x{} scores for {} prefixes",
                                 scores.rows(), scores.cols(), rows));
  }
}

bool allowed_token(int token, const DecodeConfig& config) {
  return token != config.bos_id && token != config.pad_id;
}

}  // namespace

void DecodeConfig::validate() const {
  if (beam_size < 1) throw ConfigError("beam_size", fmt::format("must be >= 1, got {}", beam_size));
  if (max_len < 0) throw ConfigError("max_len", fmt::format("must be >= 0, got {}", max_len));
  if (!(length_penalty >= 0.0)) {
    throw ConfigError("length_penalty", fmt::format("must be >= 0, got {}", length_penalty));
  }
  if (feature_stride < 1) {
    throw ConfigError("feature_stride", fmt::format("must be >= 1, got {}", feature_stride));
  }
}

int default_max_len(std::size_t source_frames, int feature_stride) {
  const auto derived = 2 * static_cast<long>(source_frames) / std::max(feature_stride, 1) + 10;
  return static_cast<int>(std::min<long>(200, derived));
}

double penalized_score(const Hypothesis& hyp, double length_penalty) {
  const auto length = static_cast<double>(std::max<std::size_t>(hyp.generated(), 1));
  return hyp.logprob / std::pow(length, length_penalty);
}

DecodeResult beam_search(const StepScorer& scorer, const DecodeConfig& config) {
  config.validate();
  if (config.max_len < 1) throw ConfigError("max_len", "must be resolved to >= 1 before decoding");
  const auto beam = static_cast<std::size_t>(config.beam_size);

  std::vector<Hypothesis> live{{{config.bos_id}, 0.0, false}};
  std::vector<Hypothesis> banked;
  for (int step = 1; step <= config.max_len; ++step) {
    std::vector<std::vector<int>> prefixes;
    prefixes.reserve(live.size());
    for (const auto& h : live) prefixes.push_back(h.tokens);
    const Eigen::MatrixXd scores = scorer(prefixes);
    check_scores(scores, live.size());

    std::vector<Candidate> candidates;
    candidates.reserve(live.size() * static_cast<std::size_t>(scores.cols()));
    for (std::size_t i = 0; i < live.size(); ++i) {
      for (Eigen::Index j = 0; j < scores.cols(); ++j) {
        const int token = static_cast<int>(j);
        if (!allowed_token(token, config)) continue;
        candidates.push_back({live[i].logprob + scores(static_cast<Eigen::Index>(i), j), token, i});
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.logprob != b.logprob) return a.logprob > b.logprob;
      if (a.token != b.token) return a.token < b.token;
      return a.parent < b.parent;
    });

    std::vector<Hypothesis> next;
    for (std::size_t rank = 0; rank < candidates.size() && next.size() < beam; ++rank) {
      const auto& c = candidates[rank];
      Hypothesis h{live[c.parent].tokens, c.logprob, false};
      h.tokens.push_back(c.token);
      if (c.token == config.eos_id) {
        if (rank < beam) {
          h.finished = true;
          banked.push_back(std::move(h));
        }
        continue;
      }
      next.push_back(std::move(h));
    }
    if (banked.size() >= beam) break;
    live = std::move(next);
    if (live.empty()) break;
    if (step == config.max_len) {
      for (auto& h : live) banked.push_back(std::move(h));
    }
  }
  if (banked.empty()) throw Error("beam search produced no hypothesis");

  std::size_t best = 0;
  double best_score = penalized_score(banked[0], config.length_penalty);
  for (std::size_t i = 1; i < banked.size(); ++i) {
    const double s = penalized_score(banked[i], config.length_penalty);
    if (better_final(banked[i], s, banked[best], best_score)) {
      best = i;
      best_score = s;
    }
  }
  return to_result(banked[best], config.length_penalty, config.eos_id);
}

DecodeResult greedy(const StepScorer& scorer, const DecodeConfig& config) {
  config.validate();
  if (config.max_len < 1) throw ConfigError("max_len", "must be resolved to >= 1 before decoding");
  Hypothesis hyp{{config.bos_id}, 0.0, false};
  for (int step = 1; step <= config.max_len && !hyp.finished; ++step) {
    const Eigen::MatrixXd scores = scorer({hyp.tokens});
    check_scores(scores, 1);
    int best = -1;
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      const int token = static_cast<int>(j);
      if (!allowed_token(token, config)) continue;
      if (best < 0 || scores(0, j) > scores(0, best)) best = token;
    }
    if (best < 0) throw Error("greedy decoding: no allowed token");
    hyp.logprob += scores(0, best);
    hyp.tokens.push_back(best);
    hyp.finished = best == config.eos_id;
  }
  return to_result(hyp, config.length_penalty, config.eos_id);
}

}  // namespace slt
