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

#include <array>
#include <cstddef>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace slt {

inline constexpr int kMaxNgram = 4;

/// Corpus BLEU statistics. Precisions are in [0, 1]; cumulative scores
/// bleu[k-1] (BLEU-k) are on a 0-100 scale.
struct BleuReport {
  std::array<double, kMaxNgram> precisions{};
  std::array<std::size_t, kMaxNgram> matches{};
  std::array<std::size_t, kMaxNgram> totals{};
  double brevity_penalty = 0.0;
  std::size_t hypothesis_length = 0;  // c
  std::size_t reference_length = 0;   // r
  std::array<double, kMaxNgram> bleu{};
  bool warning = false;
  std::string warning_message;

  double score() const { return bleu[kMaxNgram - 1]; }
  bool operator==(const BleuReport&) const = default;
};

struct BleuOptions {
  /// Add-one smoothing of the n > 1 precisions. Off by default so a zero
  /// precision yields a zero score.
  bool add_one_smoothing = false;
};

using TokenizedSentence = std::vector<std::string>;

/// Scoring tokenizer: lowercase, ASCII punctuation split into separate
/// tokens, whitespace split.
TokenizedSentence bleu_tokenize(std::string_view sentence);

/// Core routine on pre-tokenized text with any number of references per
/// hypothesis. The effective reference length picks, per sentence, the
/// reference closest in length to the hypothesis (shorter wins ties).
BleuReport corpus_bleu_tokens(std::span<const TokenizedSentence> hypotheses,
                              std::span<const std::vector<TokenizedSentence>> references,
                              const BleuOptions& options = {});

BleuReport corpus_bleu(std::span<const std::string> hypotheses,
                       std::span<const std::string> references, const BleuOptions& options = {});

BleuReport corpus_bleu_multi(std::span<const std::string> hypotheses,
                             std::span<const std::vector<std::string>> references,
                             const BleuOptions& options = {});

/// Words deleted from both sides before rBLEU scoring.
class ExclusionList {
 public:
  ExclusionList() = default;
  explicit ExclusionList(std::set<std::string> words);

  /// One word per line, '#' starts a comment.
  static ExclusionList parse(std::string_view text);
  static ExclusionList load(const std::filesystem::path& path);

  bool contains(const std::string& word) const { return words_.contains(word); }
  bool empty() const { return words_.empty(); }
  std::size_t size() const { return words_.size(); }
  const std::set<std::string>& words() const { return words_; }

 private:
  std::set<std::string> words_;
};

/// Path of the stopword list shipped with the project.
std::filesystem::path default_exclusion_list_path();

/// BLEU after removing excluded words from hypotheses and references. If
/// the filter leaves every reference (or every hypothesis) empty, the
/// report is all zeros with `warning` set.
BleuReport rbleu(std::span<const std::string> hypotheses, std::span<const std::string> references,
                 const ExclusionList& excluded, const BleuOptions& options = {});

/// Header "rBLEU\tBLEU-1\tBLEU-2\tBLEU-3\tBLEU".
std::string report_header();
/// One tab-separated row in report_header() order, two decimals.
std::string report_row(const BleuReport& bleu, const BleuReport& reduced);

}  // namespace slt
