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

#include "slt/bleu.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "slt/errors.hpp"
#include "slt/tokenizer.hpp"

namespace slt {
namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const TokenizedSentence& tokens, std::size_t n) {
  NgramCounts counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

std::vector<std::vector<TokenizedSentence>> single_references(
    std::span<const std::string> references) {
  std::vector<std::vector<TokenizedSentence>> out;
  out.reserve(references.size());
  for (const auto& r : references) out.push_back({bleu_tokenize(r)});
  return out;
}

std::vector<TokenizedSentence> tokenize_all(std::span<const std::string> sentences) {
  std::vector<TokenizedSentence> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(bleu_tokenize(s));
  return out;
}

}  // namespace

TokenizedSentence bleu_tokenize(std::string_view sentence) {
  std::string spaced;
  spaced.reserve(sentence.size() * 2);
  for (char c : lowercase(sentence)) {
    if (std::ispunct(static_cast<unsigned char>(c))) {
      spaced += ' ';
      spaced += c;
      spaced += ' ';
    } else {
      spaced += c;
    }
  }
  return split_words(spaced);
}

BleuReport corpus_bleu_tokens(std::span<const TokenizedSentence> hypotheses,
                              std::span<const std::vector<TokenizedSentence>> references,
                              const BleuOptions& options) {
  if (hypotheses.size() != references.size()) {
    throw InputError(fmt::format("BLEU: {} hypotheses but {} references", hypotheses.size(),
                                 references.size()));
  }
  if (hypotheses.empty()) throw InputError("BLEU: empty corpus");

  BleuReport report;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto& hyp = hypotheses[s];
    const auto& refs = references[s];
    if (refs.empty()) throw InputError(fmt::format("BLEU: sentence {} has no reference", s));
    report.hypothesis_length += hyp.size();
    const TokenizedSentence* closest = &refs.front();
    for (const auto& r : refs) {
      const auto gap = std::abs(static_cast<long>(r.size()) - static_cast<long>(hyp.size()));
      const auto best = std::abs(static_cast<long>(closest->size()) - static_cast<long>(hyp.size()));
      if (gap < best || (gap == best && r.size() < closest->size())) closest = &r;
    }
    report.reference_length += closest->size();

    for (std::size_t n = 1; n <= kMaxNgram; ++n) {
      const auto hyp_counts = count_ngrams(hyp, n);
      NgramCounts max_ref;
      for (const auto& r : refs) {
        for (const auto& [gram, count] : count_ngrams(r, n)) {
          auto& slot = max_ref[gram];
          slot = std::max(slot, count);
        }
      }
      for (const auto& [gram, count] : hyp_counts) {
        auto it = max_ref.find(gram);
        report.matches[n - 1] += std::min(count, it == max_ref.end() ? 0 : it->second);
        report.totals[n - 1] += count;
      }
    }
  }

  for (std::size_t n = 0; n < kMaxNgram; ++n) {
    const bool smooth = options.add_one_smoothing && n > 0;
    const double num = static_cast<double>(report.matches[n]) + (smooth ? 1.0 : 0.0);
    const double den = static_cast<double>(report.totals[n]) + (smooth ? 1.0 : 0.0);
    report.precisions[n] = den > 0.0 ? num / den : 0.0;
  }

  const double c = static_cast<double>(report.hypothesis_length);
  const double r = static_cast<double>(report.reference_length);
  if (report.hypothesis_length == 0) {
    report.brevity_penalty = 0.0;
  } else {
    report.brevity_penalty = c > r ? 1.0 : std::exp(1.0 - r / c);
  }

  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t k = 0; k < kMaxNgram; ++k) {
    if (report.precisions[k] <= 0.0) zero = true;
    if (!zero) log_sum += std::log(report.precisions[k]);
    report.bleu[k] = zero ? 0.0
                          : 100.0 * report.brevity_penalty *
                                std::exp(log_sum / static_cast<double>(k + 1));
  }
  return report;
}

BleuReport corpus_bleu(std::span<const std::string> hypotheses,
                       std::span<const std::string> references, const BleuOptions& options) {
  if (hypotheses.size() != references.size()) {
    throw InputError(fmt::format("BLEU: {} hypotheses but {} references", hypotheses.size(),
                                 references.size()));
  }
  const auto hyps = tokenize_all(hypotheses);
  const auto refs = single_references(references);
  return corpus_bleu_tokens(hyps, refs, options);
}

BleuReport corpus_bleu_multi(std::span<const std::string> hypotheses,
                             std::span<const std::vector<std::string>> references,
                             const BleuOptions& options) {
  const auto hyps = tokenize_all(hypotheses);
  std::vector<std::vector<TokenizedSentence>> refs;
  for (const auto& group : references) refs.push_back(tokenize_all(group));
  return corpus_bleu_tokens(hyps, refs, options);
}

ExclusionList::ExclusionList(std::set<std::string> words) {
  for (const auto& w : words) {
    auto tokens = split_words(w);
    if (tokens.size() != 1 || tokens[0] != w) {
      throw InputError("exclusion list entry '" + w + "' must be a single word");
    }
    words_.insert(lowercase(w));
  }
}

ExclusionList ExclusionList::parse(std::string_view text) {
  std::set<std::string> words;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (auto& w : split_words(line)) words.insert(lowercase(w));
  }
  return ExclusionList(std::move(words));
}

ExclusionList ExclusionList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open exclusion list " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::filesystem::path default_exclusion_list_path() {
  if (const char* dir = std::getenv("SLT_DATA_DIR")) {
    return std::filesystem::path(dir) / "rbleu_exclusions.txt";
  }
  return std::filesystem::path(SLT_DATA_DIR) / "rbleu_exclusions.txt";
}

BleuReport rbleu(std::span<const std::string> hypotheses, std::span<const std::string> references,
                 const ExclusionList& excluded, const BleuOptions& options) {
  if (hypotheses.size() != references.size()) {
    throw InputError(fmt::format("rBLEU: {} hypotheses but {} references", hypotheses.size(),
                                 references.size()));
  }
  auto filter = [&](TokenizedSentence tokens) {
    std::erase_if(tokens, [&](const std::string& t) { return excluded.contains(t); });
    return tokens;
  };
  std::vector<TokenizedSentence> hyps;
  std::vector<std::vector<TokenizedSentence>> refs;
  bool any_hyp = false, any_ref = false;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    hyps.push_back(filter(bleu_tokenize(hypotheses[i])));
    refs.push_back({filter(bleu_tokenize(references[i]))});
    any_hyp = any_hyp || !hyps.back().empty();
    any_ref = any_ref || !refs.back().front().empty();
  }
  if (!excluded.empty() && !hypotheses.empty() && (!any_hyp || !any_ref)) {
    BleuReport zero;
    for (const auto& r : refs) zero.reference_length += r.front().size();
    for (const auto& h : hyps) zero.hypothesis_length += h.size();
    zero.warning = true;
    zero.warning_message = !any_ref ? "exclusion list removed every reference word"
                                    : "exclusion list removed every hypothesis word";
    return zero;
  }
  return corpus_bleu_tokens(hyps, refs, options);
}

std::string report_header() { return "rBLEU\tBLEU-1\tBLEU-2\tBLEU-3\tBLEU"; }

std::string report_row(const BleuReport& bleu, const BleuReport& reduced) {
  return fmt::format("{:.2f}\t{:.2f}\t{:.2f}\t{:.2f}\t{:.2f}", reduced.score(), bleu.bleu[0],
                     bleu.bleu[1], bleu.bleu[2], bleu.bleu[3]);
}

}  // namespace slt
