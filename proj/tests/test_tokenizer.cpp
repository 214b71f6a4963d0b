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

#include <doctest.h>

#include <algorithm>
#include <set>

#include "slt/errors.hpp"
#include "slt/rng.hpp"
#include "slt/tokenizer.hpp"
#include "support.hpp"

using namespace slt;

namespace {

const std::string kB(kWordBoundary);

std::vector<std::string> sample_corpus() {
  return {"The cat sat on the mat .",         "A dog sat on the log .",
          "I live in New York and I like it .", "the cat and the dog are friends",
          "New York is big , the cat said .",  "Where do you live ?",
          "I think the mat is red",            "they went to new york yesterday"};
}

void check_vocab_invariants(const Vocabulary& v) {
  REQUIRE(v.size() >= 4);
  CHECK(v.piece(kBosId) == "<s>");
  CHECK(v.piece(kPadId) == "<pad>");
  CHECK(v.piece(kEosId) == "</s>");
  CHECK(v.piece(kUnkId) == "<unk>");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(seen.insert(v.pieces()[i]).second);
    CHECK(v.id_of(v.pieces()[i]) == static_cast<int>(i));
  }
  for (const auto& [left, right] : v.merges()) CHECK(v.id_of(left + right).has_value());
}

}  // namespace

TEST_CASE("hand-run merges on a tiny corpus") {
  const std::vector<std::string> corpus{"aaab aaab"};
  const auto v = Vocabulary::train(corpus, 100);
  REQUIRE(v.merges().size() == 3);
  CHECK(v.merges()[0] == MergeRule{"a", "a"});
  CHECK(v.merges()[1] == MergeRule{"aa", "b"});
  CHECK(v.merges()[2] == MergeRule{kB + "a", "aab"});
  CHECK(v.size() == 4 + 3 + 3);
  CHECK(v.encode("aaab") == std::vector<int>{*v.id_of(kB + "aaab")});
  check_vocab_invariants(v);
}

TEST_CASE("vocabulary size boundaries") {
  const std::vector<std::string> corpus{"aaab aaab"};
  const auto minimal = Vocabulary::train(corpus, 7);  // 3 base symbols + 4 reserved
  CHECK(minimal.merges().empty());
  CHECK(minimal.size() == 7);
  CHECK_THROWS_AS(Vocabulary::train(corpus, 6), InputError);
  const auto capped = Vocabulary::train(corpus, 8);
  CHECK(capped.size() == 8);
  CHECK(capped.merges().size() == 1);

  const auto corpus2 = sample_corpus();
  for (std::size_t size : {60u, 80u, 120u, 5000u}) {
    const auto v = Vocabulary::train(corpus2, size);
    CHECK(v.size() <= size);
    check_vocab_invariants(v);
  }
  CHECK(Vocabulary::train(corpus2, 50).size() == 50);
  // This corpus runs out of repeated pairs well before 5000.
  CHECK(Vocabulary::train(corpus2, 5000).size() < 5000);
  const std::vector<std::string> blank{"", "   "};
  CHECK_THROWS_AS(Vocabulary::train(blank, 50), InputError);
}

TEST_CASE("training is deterministic") {
  const auto corpus = sample_corpus();
  CHECK(Vocabulary::train(corpus, 90) == Vocabulary::train(corpus, 90));
  auto reversed = corpus;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(Vocabulary::train(reversed, 90) == Vocabulary::train(corpus, 90));
}

TEST_CASE("encode and decode") {
  const auto corpus = sample_corpus();
  const auto v = Vocabulary::train(corpus, 90);
  CHECK(v.encode("").empty());
  CHECK(v.encode("   ").empty());
  for (const auto& line : corpus) {
    const auto ids = v.encode(line);
    CHECK(v.decode(ids) == lowercase(line));
  }
  // A character that never occurs in the corpus.
  const auto ids = v.encode("cat zebra");
  CHECK(std::find(ids.begin(), ids.end(), kUnkId) != ids.end());
  CHECK(v.decode(std::vector<int>{kBosId, ids[0], kEosId, kPadId}) == v.decode(std::vector<int>{ids[0]}));
  CHECK_THROWS_AS(v.decode(std::vector<int>{static_cast<int>(v.size())}), InputError);
  CHECK_THROWS_AS(v.decode(std::vector<int>{-1}), InputError);
}

TEST_CASE("roundtrip on random spans of corpus words") {
  const auto corpus = sample_corpus();
  for (std::size_t size : {40u, 70u, 200u}) {
    const auto v = Vocabulary::train(corpus, size);
    Rng rng(size);
    for (int trial = 0; trial < 200; ++trial) {
      const auto words = split_words(corpus[rng.below(corpus.size())]);
      const auto a = rng.below(words.size());
      const auto b = a + 1 + rng.below(words.size() - a);
      std::string text, single_spaced;
      for (auto i = a; i < b; ++i) {
        text += (i > a ? "  " : "") + words[i];
        single_spaced += (i > a ? " " : "") + words[i];
      }
      CHECK(v.decode(v.encode(text)) == lowercase(single_spaced));
    }
  }
}

TEST_CASE("encode is total and never emits pad") {
  const auto v = Vocabulary::train(sample_corpus(), 90);
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    std::string junk(rng.below(40), '\0');
    for (auto& c : junk) c = static_cast<char>(rng.below(256));
    for (int id : v.encode(junk)) {
      CHECK(id >= kUnkId);
      CHECK(static_cast<std::size_t>(id) < v.size());
    }
  }
  // Special piece spellings in text are ordinary (unknown) characters, not specials.
  for (int id : v.encode("<pad> <s>")) CHECK(id != kPadId);
}

TEST_CASE("vocabulary file roundtrip and format errors") {
  const auto v = Vocabulary::train(sample_corpus(), 90);
  slt::testing::ScratchDir dir("tokenizer");
  v.save(dir.path() / "vocab.txt");
  const auto loaded = Vocabulary::load(dir.path() / "vocab.txt");
  CHECK(loaded == v);
  CHECK(loaded.encode("the cat sat") == v.encode("the cat sat"));
  const auto text = v.serialize();
  CHECK(text.starts_with("SLTVOCAB 1\nsize=" + std::to_string(v.size()) + "\n<s>\n<pad>\n</s>\n<unk>\n"));

  CHECK_THROWS_AS(Vocabulary::parse("VOCAB\n"), FormatError);
  CHECK_THROWS_AS(Vocabulary::parse("SLTVOCAB 1\nsize=x\n"), FormatError);
  CHECK_THROWS_AS(Vocabulary::parse("SLTVOCAB 1\nsize=5\n<s>\n<pad>\n</s>\n<unk>\na\n"), FormatError);
  CHECK_THROWS_AS(Vocabulary::parse("SLTVOCAB 1\nsize=4\n<pad>\n<s>\n</s>\n<unk>\n#MERGES\n"), FormatError);
  CHECK_THROWS_AS(Vocabulary::parse("SLTVOCAB 1\nsize=6\n<s>\n<pad>\n</s>\n<unk>\na\na\n#MERGES\n"), FormatError);
  CHECK_THROWS_AS(Vocabulary::parse("SLTVOCAB 1\nsize=5\n<s>\n<pad>\n</s>\n<unk>\na\n#MERGES\na\ta\n"), FormatError);
  CHECK_THROWS_AS(Vocabulary::parse("SLTVOCAB 1\nsize=5\n<s>\n<pad>\n</s>\n<unk>\na\n#MERGES\naa\n"), FormatError);
  CHECK_THROWS_AS(Vocabulary::load(dir.path() / "missing.txt"), IoError);
}

TEST_CASE("truecasing") {
  const auto casing = CasingModel::from_map({{"new", "New"}, {"york", "York"}, {"i", "I"}});
  CHECK(casing.truecase("i live in new york") == "I live in New York");
  CHECK(casing.truecase("") == "");
  CHECK(casing.truecase("we like zebras") == "We like zebras");
  CHECK(casing.truecase("zebras are in new york") == "Zebras are in New York");
  CHECK(CasingModel::from_map({}, false).truecase("hello there") == "hello there");
  CHECK_THROWS_AS(CasingModel::from_map({{"New", "New"}}), InputError);
  CHECK_THROWS_AS(CasingModel::from_map({{"new", "old"}}), InputError);
}

TEST_CASE("casing model is learned from non-initial words") {
  const std::vector<std::string> transcripts{"We saw New York today .", "New York is where I live",
                                             "they said new things", "I think New York is nice",
                                             "And I am here"};
  const auto casing = CasingModel::learn(transcripts);
  for (const auto& [key, value] : casing.forms()) {
    CHECK(lowercase(key) == key);
    CHECK(lowercase(value) == key);
  }
  CHECK(casing.forms().at("york") == "York");
  CHECK(casing.forms().at("new") == "New");  // 2x "New" against 1x "new"
  CHECK(casing.forms().at("i") == "I");
  CHECK(!casing.forms().contains("we"));     // only seen sentence-initially
  CHECK(casing.truecase("we went to new york") == "We went to New York");

  slt::testing::ScratchDir dir("tokenizer");
  casing.save(dir.path() / "casing.txt");
  const auto loaded = CasingModel::load(dir.path() / "casing.txt");
  CHECK(loaded.forms() == casing.forms());
  CHECK(loaded.capitalize_first() == casing.capitalize_first());
}

TEST_CASE("text helpers") {
  CHECK(lowercase("HeLLo WÖRLD") == "hello wÖrld");
  CHECK(split_words("  a\tb\n c  ") == std::vector<std::string>{"a", "b", "c"});
  CHECK(utf8_chars("a\xC3\xA9" "b") == std::vector<std::string>{"a", "\xC3\xA9", "b"});
  CHECK(utf8_chars("\xC3").size() == 1);
}
