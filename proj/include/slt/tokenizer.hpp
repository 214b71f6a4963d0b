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

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "slt/tokens.hpp"

namespace slt {

/// Marks the first subword of every word (U+2581).
inline constexpr std::string_view kWordBoundary = "\xE2\x96\x81";

/// ASCII lowercasing; other bytes pass through unchanged.
std::string lowercase(std::string_view text);

/// Whitespace-separated words.
std::vector<std::string> split_words(std::string_view text);

/// Splits UTF-8 text into code points (invalid bytes become single-byte units).
std::vector<std::string> utf8_chars(std::string_view text);

using MergeRule = std::pair<std::string, std::string>;

/// Byte-pair-encoding subword inventory with reserved ids
/// bos=0, pad=1, eos=2, unk=3.
class Vocabulary {
 public:
  /// Learns merges greedily by pair frequency over the lowercased corpus until
  /// the table holds `size` entries or no pair occurs twice. Ties go to the
  /// lexicographically smallest pair.
  static Vocabulary train(std::span<const std::string> corpus, std::size_t size);

  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  static Vocabulary parse(std::string_view text);
  std::string serialize() const;

  /// Lowercases, splits on whitespace, applies merges in learned order.
  /// Symbols outside the table become unk. Never emits pad.
  std::vector<int> encode(std::string_view text) const;

  /// Joins subwords, restoring spaces at word boundaries. bos/eos/pad are
  /// dropped; unk renders as "<unk>".
  std::string decode(std::span<const int> ids) const;

  std::size_t size() const { return pieces_.size(); }
  const std::string& piece(int id) const;
  std::optional<int> id_of(std::string_view piece) const;
  const std::vector<MergeRule>& merges() const { return merges_; }
  const std::vector<std::string>& pieces() const { return pieces_; }

  bool operator==(const Vocabulary& other) const {
    return pieces_ == other.pieces_ && merges_ == other.merges_;
  }

 private:
  Vocabulary() = default;
  void rebuild_index();
  std::vector<std::string> segment(const std::string& word) const;

  std::vector<std::string> pieces_;
  std::vector<MergeRule> merges_;
  std::unordered_map<std::string, int> index_;
  std::map<MergeRule, std::size_t> merge_rank_;
};

/// Unigram truecaser: each lowercase word maps to its most frequent surface
/// form seen in non-initial position; the first word of an output sentence
/// is capitalized.
class CasingModel {
 public:
  CasingModel() = default;

  static CasingModel learn(std::span<const std::string> transcripts);
  static CasingModel from_map(std::map<std::string, std::string> forms,
                              bool capitalize_first = true);

  std::string truecase(std::string_view text) const;

  static CasingModel load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  const std::map<std::string, std::string>& forms() const { return forms_; }
  bool capitalize_first() const { return capitalize_first_; }

 private:
  std::map<std::string, std::string> forms_;
  bool capitalize_first_ = true;
};

}  // namespace slt
