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

#include "slt/inference.hpp"

#include <fmt/format.h>

#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "slt/errors.hpp"

namespace slt {

DecodeResult translate_features(const ModelParams<float>& params, const ModelConfig& config,
                                const FeatureSequence& features, DecodeConfig decode,
                                bool use_greedy) {
  if (features.frames() == 0) throw InputError("cannot translate an empty feature sequence");
  if (features.dim() != static_cast<std::size_t>(config.feature_dim)) {
    throw InputError(fmt::format("feature dim {} does not match the model's {}", features.dim(),
                                 config.feature_dim));
  }
  if (decode.max_len == 0) decode.max_len = default_max_len(features.frames(), decode.feature_stride);
  const auto frames = features.frames(), dim = features.dim();
  Tensor<float> input({1, frames, dim},
                      std::vector<float>(features.values.data(), features.values.data() + frames * dim));
  const int length = static_cast<int>(frames);
  const auto encoded = encode(input, std::span<const int>(&length, 1), params, config, Mode::Eval, nullptr);
  const auto scorer = make_model_scorer(params, config, encoded);
  return use_greedy ? greedy(scorer, decode) : beam_search(scorer, decode);
}

std::vector<DecodeResult> translate_all(const ModelParams<float>& params, const ModelConfig& config,
                                        std::span<const FeatureSequence* const> items,
                                        const DecodeConfig& decode, bool use_greedy, int threads) {
  std::vector<DecodeResult> results(items.size());
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || items.size() < 2) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      results[i] = translate_features(params, config, *items[i], decode, use_greedy);
    }
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto work = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      try {
        results[i] = translate_features(params, config, *items[i], decode, use_greedy);
      } catch (...) {
        std::lock_guard lock(failure_lock);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, items.size()); ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

std::string postprocess(std::span<const int> tokens, const Vocabulary& vocab,
                        const CasingModel& casing) {
  return casing.truecase(vocab.decode(tokens));
}

SplitResult score_split(std::vector<std::string> ids, std::vector<std::string> hypotheses,
                        std::vector<std::string> references, const ExclusionList& exclusions) {
  if (hypotheses.size() != references.size() || ids.size() != references.size()) {
    throw InputError("score_split: ids, hypotheses and references differ in length");
  }
  SplitResult result;
  result.bleu = corpus_bleu(hypotheses, references);
  result.rbleu = rbleu(hypotheses, references, exclusions);
  std::size_t exact = 0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    exact += bleu_tokenize(hypotheses[i]) == bleu_tokenize(references[i]);
  }
  result.exact_match =
      hypotheses.empty() ? 0.0 : static_cast<double>(exact) / static_cast<double>(hypotheses.size());
  result.ids = std::move(ids);
  result.hypotheses = std::move(hypotheses);
  result.references = std::move(references);
  return result;
}

SplitResult evaluate_split(const ModelParams<float>& params, const ModelConfig& config,
                           const Dataset& data, const Vocabulary& vocab, const CasingModel& casing,
                           const DecodeConfig& decode, const ExclusionList& exclusions,
                           int threads, bool references_as_hypotheses) {
  std::vector<std::string> ids, hypotheses, references;
  for (const auto& ex : data.examples) {
    ids.push_back(ex.id);
    references.push_back(ex.transcript);
  }
  if (references_as_hypotheses) {
    for (const auto& ex : data.examples) hypotheses.push_back(postprocess(ex.tokens, vocab, casing));
  } else {
    std::vector<const FeatureSequence*> items;
    for (const auto& ex : data.examples) items.push_back(&ex.features);
    for (const auto& r : translate_all(params, config, items, decode, false, threads)) {
      hypotheses.push_back(postprocess(r.tokens, vocab, casing));
    }
  }
  return score_split(std::move(ids), std::move(hypotheses), std::move(references), exclusions);
}

void write_hypotheses(const std::filesystem::path& path, const SplitResult& result) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "id\thypothesis\treference\n";
  for (std::size_t i = 0; i < result.ids.size(); ++i) {
    out << result.ids[i] << '\t' << result.hypotheses[i] << '\t' << result.references[i] << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace slt
