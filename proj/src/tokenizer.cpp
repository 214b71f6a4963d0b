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

#include "slt/tokenizer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "slt/errors.hpp"

namespace slt {
namespace {

const std::vector<std::string> kSpecialPieces = {"<s>", "<pad>", "</s>", "<unk>"};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

std::vector<std::string> initial_symbols(const std::string& word) {
  auto symbols = utf8_chars(word);
  if (!symbols.empty()) symbols.front() = std::string(kWordBoundary) + symbols.front();
  return symbols;
}

// Merges every left-to-right non-overlapping occurrence of `rule`.
bool apply_merge(std::vector<std::string>& symbols, const MergeRule& rule) {
  if (symbols.size() < 2) return false;
  std::vector<std::string> merged;
  merged.reserve(symbols.size());
  bool changed = false;
  for (std::size_t i = 0; i < symbols.size();) {
    if (i + 1 < symbols.size() && symbols[i] == rule.first && symbols[i + 1] == rule.second) {
      merged.push_back(symbols[i] + symbols[i + 1]);
      i += 2;
      changed = true;
    } else {
      merged.push_back(std::move(symbols[i]));
      ++i;
    }
  }
  symbols = std::move(merged);
  return changed;
}

}  // namespace

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (auto& c : out) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80) c = static_cast<char>(std::tolower(u));
  }
  return out;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> chars;
  for (std::size_t i = 0; i < text.size();) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0 && lead < 0xF8) {
      len = 4;
    } else if (lead >= 0xE0) {
      len = lead < 0xF0 ? 3 : 1;
    } else if (lead >= 0xC0) {
      len = 2;
    }
    if (i + len > text.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    chars.emplace_back(text.substr(i, len));
    i += len;
  }
  return chars;
}

Vocabulary Vocabulary::train(std::span<const std::string> corpus, std::size_t size) {
  std::map<std::string, long> word_counts;
  for (const auto& line : corpus) {
    for (auto& w : split_words(lowercase(line))) ++word_counts[w];
  }
  if (word_counts.empty()) throw InputError("cannot train a vocabulary on an empty corpus");

  std::vector<std::vector<std::string>> words;
  std::vector<long> freqs;
  std::set<std::string> base;
  for (const auto& [word, count] : word_counts) {
    words.push_back(initial_symbols(word));
    freqs.push_back(count);
    base.insert(words.back().begin(), words.back().end());
  }
  const std::size_t minimum = base.size() + kSpecialPieces.size();
  if (size < minimum) {
    throw InputError(fmt::format("vocabulary size {} is smaller than the {} base symbols plus {} "
                                 "reserved ids",
                                 size, base.size(), kSpecialPieces.size()));
  }

  Vocabulary vocab;
  vocab.pieces_ = kSpecialPieces;
  vocab.pieces_.insert(vocab.pieces_.end(), base.begin(), base.end());
  vocab.rebuild_index();

  // Pair statistics: exact counts, the words containing each pair, and an
  // ordered index (highest count first, then smallest pair).
  std::map<MergeRule, long> counts;
  std::map<MergeRule, std::set<std::size_t>> where;
  std::set<std::pair<long, MergeRule>> ranking;  // (-count, pair)

  auto adjust = [&](const MergeRule& pair, long delta, std::size_t word) {
    auto& c = counts[pair];
    if (c > 0) ranking.erase({-c, pair});
    c += delta;
    if (c > 0) {
      ranking.insert({-c, pair});
    } else {
      counts.erase(pair);
    }
    if (delta > 0) where[pair].insert(word);
  };
  auto add_word = [&](std::size_t w, long sign) {
    const auto& s = words[w];
    for (std::size_t i = 0; i + 1 < s.size(); ++i) adjust({s[i], s[i + 1]}, sign * freqs[w], w);
  };
  for (std::size_t w = 0; w < words.size(); ++w) add_word(w, +1);

  while (vocab.pieces_.size() < size && !ranking.empty()) {
    const auto [neg_count, best] = *ranking.begin();
    if (-neg_count < 2) break;
    vocab.merges_.push_back(best);
    const auto merged = best.first + best.second;
    if (!vocab.index_.contains(merged)) {
      vocab.index_.emplace(merged, static_cast<int>(vocab.pieces_.size()));
      vocab.pieces_.push_back(merged);
    }
    const auto affected = where[best];
    for (auto w : affected) {
      add_word(w, -1);
      apply_merge(words[w], best);
      add_word(w, +1);
    }
    where.erase(best);
  }
  vocab.rebuild_index();
  return vocab;
}

void Vocabulary::rebuild_index() {
  index_.clear();
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (!index_.emplace(pieces_[i], static_cast<int>(i)).second) {
      throw FormatError("duplicate subword '" + pieces_[i] + "' in vocabulary");
    }
  }
  merge_rank_.clear();
  for (std::size_t i = 0; i < merges_.size(); ++i) merge_rank_.emplace(merges_[i], i);
}

std::vector<std::string> Vocabulary::segment(const std::string& word) const {
  auto symbols = initial_symbols(word);
  while (symbols.size() > 1) {
    std::size_t best_rank = merges_.size();
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto it = merge_rank_.find({symbols[i], symbols[i + 1]});
      if (it != merge_rank_.end()) best_rank = std::min(best_rank, it->second);
    }
    if (best_rank == merges_.size()) break;
    apply_merge(symbols, merges_[best_rank]);
  }
  return symbols;
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& word : split_words(lowercase(text))) {
    for (const auto& symbol : segment(word)) {
      auto it = index_.find(symbol);
      ids.push_back(it == index_.end() || it->second < kNumSpecialIds ? kUnkId : it->second);
    }
  }
  return ids;
}

std::string Vocabulary::decode(std::span<const int> ids) const {
  std::string text;
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size()) {
      throw InputError(fmt::format("token id {} out of range for vocabulary of {}", id, size()));
    }
    if (id == kBosId || id == kEosId || id == kPadId) continue;
    if (id == kUnkId) {
      text += "<unk>";
      continue;
    }
    const auto& p = pieces_[static_cast<std::size_t>(id)];
    if (p.starts_with(kWordBoundary)) {
      if (!text.empty()) text += ' ';
      text += p.substr(kWordBoundary.size());
    } else {
      text += p;
    }
  }
  return text;
}

const std::string& Vocabulary::piece(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size()) {
    throw InputError(fmt::format("token id {} out of range for vocabulary of {}", id, size()));
  }
  return pieces_[static_cast<std::size_t>(id)];
}

std::optional<int> Vocabulary::id_of(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string Vocabulary::serialize() const {
  std::string out = "SLTVOCAB 1\n";
  out += fmt::format("size={}\n", pieces_.size());
  for (const auto& p : pieces_) out += p + "\n";
  out += "#MERGES\n";
  for (const auto& [left, right] : merges_) out += left + "\t" + right + "\n";
  return out;
}

Vocabulary Vocabulary::parse(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != "SLTVOCAB 1") {
    throw FormatError("vocabulary file must start with 'SLTVOCAB 1'");
  }
  if (lines.size() < 2 || !lines[1].starts_with("size=")) {
    throw FormatError("vocabulary file: line 2 must be 'size=<n>'");
  }
  std::size_t n = 0;
  try {
    n = std::stoul(lines[1].substr(5));
  } catch (const std::exception&) {
    throw FormatError("vocabulary file: bad size line '" + lines[1] + "'");
  }
  if (lines.size() < 2 + n + 1 || lines[2 + n] != "#MERGES") {
    throw FormatError(fmt::format("vocabulary file: expected {} subwords then '#MERGES'", n));
  }
  Vocabulary vocab;
  vocab.pieces_.assign(lines.begin() + 2, lines.begin() + 2 + static_cast<std::ptrdiff_t>(n));
  if (n < kSpecialPieces.size() ||
      !std::equal(kSpecialPieces.begin(), kSpecialPieces.end(), vocab.pieces_.begin())) {
    throw FormatError("vocabulary file: ids 0-3 must be <s> <pad> </s> <unk>");
  }
  for (std::size_t i = 3 + n; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto tab = lines[i].find('\t');
    if (tab == std::string::npos) {
      throw FormatError(fmt::format("vocabulary file line {}: merge needs 'left<TAB>right'", i + 1));
    }
    vocab.merges_.emplace_back(lines[i].substr(0, tab), lines[i].substr(tab + 1));
  }
  vocab.rebuild_index();
  for (const auto& [left, right] : vocab.merges_) {
    if (!vocab.index_.contains(left + right)) {
      throw FormatError("vocabulary file: merge output '" + left + right + "' missing from table");
    }
  }
  return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) { return parse(read_file(path)); }

void Vocabulary::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

CasingModel CasingModel::learn(std::span<const std::string> transcripts) {
  std::map<std::string, std::map<std::string, long>> seen;
  for (const auto& line : transcripts) {
    const auto words = split_words(line);
    for (std::size_t i = 1; i < words.size(); ++i) ++seen[lowercase(words[i])][words[i]];
  }
  CasingModel model;
  for (const auto& [key, surfaces] : seen) {
    // std::map order makes ties resolve to the smallest surface form.
    auto best = surfaces.begin();
    for (auto it = surfaces.begin(); it != surfaces.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    model.forms_.emplace(key, best->first);
  }
  return model;
}

CasingModel CasingModel::from_map(std::map<std::string, std::string> forms, bool capitalize_first) {
  CasingModel model;
  for (auto& [key, value] : forms) {
    if (lowercase(key) != key || lowercase(value) != key) {
      throw InputError("casing entry '" + key + "' -> '" + value +
                       "' must map a lowercase word to a case variant of itself");
    }
  }
  model.forms_ = std::move(forms);
  model.capitalize_first_ = capitalize_first;
  return model;
}

std::string CasingModel::truecase(std::string_view text) const {
  const auto words = split_words(text);
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto it = forms_.find(lowercase(words[i]));
    std::string word = it == forms_.end() ? words[i] : it->second;
    if (i == 0 && capitalize_first_ && !word.empty()) {
      const auto u = static_cast<unsigned char>(word[0]);
      if (u < 0x80) word[0] = static_cast<char>(std::toupper(u));
    }
    if (i) out += ' ';
    out += word;
  }
  return out;
}

CasingModel CasingModel::load(const std::filesystem::path& path) {
  const auto lines = split_lines(read_file(path));
  if (lines.size() < 2 || lines[0] != "SLTCASE 1" || !lines[1].starts_with("capitalize_first=")) {
    throw FormatError(path.string() + ": not a casing model file");
  }
  std::map<std::string, std::string> forms;
  for (std::size_t i = 2; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto tab = lines[i].find('\t');
    if (tab == std::string::npos) {
      throw FormatError(fmt::format("{} line {}: expected 'word<TAB>form'", path.string(), i + 1));
    }
    forms.emplace(lines[i].substr(0, tab), lines[i].substr(tab + 1));
  }
  return from_map(std::move(forms), lines[1] != "capitalize_first=0");
}

void CasingModel::save(const std::filesystem::path& path) const {
  std::string out = "SLTCASE 1\n";
  out += fmt::format("capitalize_first={}\n", capitalize_first_ ? 1 : 0);
  for (const auto& [key, value] : forms_) out += key + "\t" + value + "\n";
  write_file(path, out);
}

}  // namespace slt
