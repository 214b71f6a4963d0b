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
#include <cmath>

#include "slt/bleu.hpp"
#include "slt/errors.hpp"
#include "slt/rng.hpp"
#include "oracles.hpp"

using namespace slt;
using namespace slt::testing;

namespace {

void check_fields_equal(const BleuReport& a, const BleuReport& b) {
  for (int n = 0; n < 4; ++n) {
    CHECK(a.precisions[n] == b.precisions[n]);
    CHECK(a.bleu[n] == b.bleu[n]);
  }
  CHECK(a.brevity_penalty == b.brevity_penalty);
}

}  // namespace

TEST_CASE("agrees with a brute-force oracle on random corpora") {
  Rng rng(2026);
  for (int corpus = 0; corpus < 50; ++corpus) {
    std::vector<Words> hyps, refs;
    std::vector<std::string> h, r;
    for (int s = 0; s < 10; ++s) {
      // Near-copies of the reference keep higher-order precisions non-zero.
      auto ref = random_sentence(rng, 20, 30);
      auto hyp = ref;
      for (auto& w : hyp)
        if (rng.uniform() < 0.3) w = "w" + std::to_string(rng.below(20));
      if (rng.uniform() < 0.3) hyp.resize(1 + rng.below(hyp.size()));
      if (rng.uniform() < 0.2) hyp = random_sentence(rng, 20, 30);
      hyps.push_back(hyp);
      refs.push_back(ref);
      h.push_back(join(hyp));
      r.push_back(join(ref));
    }
    const auto want = brute_force(hyps, refs);
    const auto got = corpus_bleu(h, r);
    INFO("corpus " << corpus);
    for (int n = 0; n < 4; ++n) {
      CHECK(got.precisions[n] == doctest::Approx(want.p[n]).epsilon(1e-12));
      CHECK(std::abs(got.bleu[n] - want.bleu[n]) < 1e-9);
    }
    CHECK(got.brevity_penalty == doctest::Approx(want.bp).epsilon(1e-12));
  }
}

TEST_CASE("identity corpus scores 100") {
  const std::vector<std::string> s{"the cat sat on the mat", "a dog ran .", "hello world again and again"};
  const auto r = corpus_bleu(s, s);
  for (int n = 0; n < 4; ++n) CHECK(r.bleu[n] == 100.0);
  CHECK(r.brevity_penalty == 1.0);
  CHECK(r.score() == 100.0);
}

TEST_CASE("clipping fixture") {
  const std::vector<std::string> h{"the the the the"}, r{"the cat"};
  const auto rep = corpus_bleu(h, r);
  // One "the" in the reference, so only one of four hypothesis tokens counts.
  CHECK(rep.matches[0] == 1);
  CHECK(rep.totals[0] == 4);
  CHECK(rep.precisions[0] == 0.25);
  CHECK(rep.precisions[1] == 0.0);
  CHECK(rep.score() == 0.0);
  CHECK(rep.brevity_penalty == 1.0);
  CHECK(rep.bleu[0] == doctest::Approx(25.0));
}

TEST_CASE("brevity penalty branch") {
  {
    const std::vector<std::string> h{"the cat"}, r{"the cat sat"};
    const auto rep = corpus_bleu(h, r);
    CHECK(rep.hypothesis_length == 2);
    CHECK(rep.reference_length == 3);
    CHECK(rep.brevity_penalty == doctest::Approx(std::exp(1.0 - 3.0 / 2.0)).epsilon(1e-15));
    CHECK(rep.bleu[0] == doctest::Approx(100.0 * std::exp(-0.5)).epsilon(1e-15));
    CHECK(rep.bleu[1] == doctest::Approx(100.0 * std::exp(-0.5)).epsilon(1e-15));
    CHECK(rep.bleu[2] == 0.0);
  }
  {
    // Equal lengths: no penalty.
    const std::vector<std::string> h{"a b c d"}, r{"a b c e"};
    CHECK(corpus_bleu(h, r).brevity_penalty == 1.0);
  }
  {
    // Longer hypothesis: no penalty; lengths are summed over the corpus.
    const std::vector<std::string> h{"a b c d e", "x"}, r{"a b c", "x y"};
    const auto rep = corpus_bleu(h, r);
    CHECK(rep.hypothesis_length == 6);
    CHECK(rep.reference_length == 5);
    CHECK(rep.brevity_penalty == 1.0);
  }
  {
    const std::vector<std::string> h{"a", "b c"}, r{"a b c d", "b c e f"};
    CHECK(corpus_bleu(h, r).brevity_penalty == doctest::Approx(std::exp(1.0 - 8.0 / 3.0)).epsilon(1e-15));
  }
}

TEST_CASE("scoring tokenization") {
  CHECK(bleu_tokenize("Hello, World!") == Words{"hello", ",", "world", "!"});
  CHECK(bleu_tokenize("  it's   fine ") == Words{"it", "'", "s", "fine"});
  CHECK(bleu_tokenize("").empty());
  const std::vector<std::string> h{"Hello, world."}, r{"hello , WORLD ."};
  CHECK(corpus_bleu(h, r).score() == 100.0);
}

TEST_CASE("closest reference length with multiple references") {
  const std::vector<std::string> h{"a b c"};
  const std::vector<std::vector<std::string>> refs{{"a b c d e f", "a b", "a b c d"}};
  const auto rep = corpus_bleu_multi(h, refs);
  // |3-2| and |3-4| tie; the shorter reference wins.
  CHECK(rep.reference_length == 2);
  CHECK(rep.brevity_penalty == 1.0);
  CHECK(rep.precisions[0] == 1.0);
}

TEST_CASE("order and duplication invariance") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> h, r;
    for (int s = 0; s < 8; ++s) {
      auto ref = random_sentence(rng, 8, 12);
      auto hyp = ref;
      for (auto& w : hyp)
        if (rng.uniform() < 0.25) w = "w" + std::to_string(rng.below(8));
      h.push_back(join(hyp));
      r.push_back(join(ref));
    }
    const auto base = corpus_bleu(h, r);
    std::vector<std::size_t> order(h.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::string> hp, rp;
    for (auto i : order) {
      hp.push_back(h[i]);
      rp.push_back(r[i]);
    }
    CHECK(corpus_bleu(hp, rp) == base);
    for (int k = 2; k <= 4; ++k) {
      std::vector<std::string> hk, rk;
      for (int rep = 0; rep < k; ++rep) {
        hk.insert(hk.end(), h.begin(), h.end());
        rk.insert(rk.end(), r.begin(), r.end());
      }
      check_fields_equal(corpus_bleu(hk, rk), base);
    }
  }
}

TEST_CASE("report invariants") {
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> h, r;
    for (int s = 0; s < 5; ++s) {
      auto ref = random_sentence(rng, 6, 10);
      auto hyp = ref;
      for (auto& w : hyp)
        if (rng.uniform() < 0.2) w = "w" + std::to_string(rng.below(6));
      if (rng.uniform() < 0.3) hyp.resize(1 + rng.below(hyp.size()));
      h.push_back(join(hyp));
      r.push_back(join(ref));
    }
    const auto rep = corpus_bleu(h, r);
    for (double p : rep.precisions) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
    CHECK(rep.brevity_penalty > 0.0);
    CHECK(rep.brevity_penalty <= 1.0);
    CHECK((rep.brevity_penalty == 1.0) == (rep.hypothesis_length >= rep.reference_length));
    const auto& p = rep.precisions;
    const bool positive = std::all_of(p.begin(), p.end(), [](double x) { return x > 0; });
    const bool non_increasing = p[0] >= p[1] && p[1] >= p[2] && p[2] >= p[3];
    if (positive && non_increasing) {
      CHECK(rep.bleu[0] >= rep.bleu[1]);
      CHECK(rep.bleu[1] >= rep.bleu[2]);
      CHECK(rep.bleu[2] >= rep.bleu[3]);
    }
  }
}

TEST_CASE("add-one smoothing keeps short corpora from collapsing to zero") {
  const std::vector<std::string> h{"a b"}, r{"a b"};
  CHECK(corpus_bleu(h, r).score() == 0.0);  // no 3-grams at all
  const auto smoothed = corpus_bleu(h, r, BleuOptions{true});
  CHECK(smoothed.precisions[2] == 1.0);
  CHECK(smoothed.score() == doctest::Approx(100.0));
}

TEST_CASE("BLEU contract errors") {
  const std::vector<std::string> one{"a"}, two{"a", "b"}, none;
  CHECK_THROWS_AS(corpus_bleu(one, two), InputError);
  CHECK_THROWS_AS(corpus_bleu(none, none), InputError);
  CHECK_THROWS_AS(rbleu(one, two, ExclusionList{}), InputError);
}

TEST_CASE("rBLEU with an empty exclusion list is BLEU") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> h, r;
    for (int s = 0; s < 6; ++s) {
      h.push_back(join(random_sentence(rng, 10, 15)));
      r.push_back(join(random_sentence(rng, 10, 15)));
    }
    CHECK(rbleu(h, r, ExclusionList{}) == corpus_bleu(h, r));
  }
  const std::vector<std::string> s{"So I am happy ."};
  CHECK(rbleu(s, s, ExclusionList{}) == corpus_bleu(s, s));
}

TEST_CASE("rBLEU filters before counting") {
  const ExclusionList excl({"so", "i", "am"});
  {
    const std::vector<std::string> h{"so i am happy"}, r{"so i am glad"};
    const std::vector<std::string> fh{"happy"}, fr{"glad"};
    const auto got = rbleu(h, r, excl);
    CHECK(got == corpus_bleu(fh, fr));
    CHECK(got.precisions[0] == 0.0);
    CHECK(got.hypothesis_length == 1);
    CHECK(got.reference_length == 1);
    CHECK(got.score() == 0.0);
  }
  {
    const ExclusionList small({"the", "a", "on"});
    const std::vector<std::string> h{"So the cat sat on the mat"}, r{"the cat sat on a mat"};
    const auto got = rbleu(h, r, small);
    // Filtered: "so cat sat mat" against "cat sat mat".
    CHECK(got.hypothesis_length == 4);
    CHECK(got.reference_length == 3);
    CHECK(got.precisions[0] == 0.75);
    CHECK(got.precisions[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(got.precisions[2] == 0.5);
    CHECK(got.precisions[3] == 0.0);
    CHECK(got.bleu[0] == doctest::Approx(75.0).epsilon(1e-15));
    CHECK(got.bleu[1] == doctest::Approx(100.0 * std::sqrt(0.5)).epsilon(1e-15));
    CHECK(got.bleu[2] == doctest::Approx(100.0 * std::cbrt(0.25)).epsilon(1e-15));
    CHECK(got.score() == 0.0);
  }
}

TEST_CASE("rBLEU warns when filtering removes everything") {
  const ExclusionList excl({"so", "i", "am"});
  const std::vector<std::string> h{"so i", "am"}, r{"i am so", "so"};
  const auto got = rbleu(h, r, excl);
  CHECK(got.warning);
  CHECK(!got.warning_message.empty());
  CHECK(got.score() == 0.0);
  const std::vector<std::string> r2{"i am glad", "so"};
  const auto hyp_gone = rbleu(h, r2, excl);
  CHECK(hyp_gone.warning);
  CHECK(hyp_gone.score() == 0.0);
  CHECK(!rbleu(r2, r2, excl).warning);
}

TEST_CASE("exclusion lists") {
  const auto parsed = ExclusionList::parse("# stopwords\nThe\n a  # article\n\nan\n");
  CHECK(parsed.words() == std::set<std::string>{"the", "a", "an"});
  CHECK_THROWS_AS(ExclusionList(std::set<std::string>{"two words"}), InputError);
  const auto shipped = ExclusionList::load(default_exclusion_list_path());
  CHECK(shipped.size() > 20);
  for (const auto& w : shipped.words()) {
    CHECK(w == bleu_tokenize(w).front());
    CHECK(w.find(' ') == std::string::npos);
  }
  CHECK(shipped.contains("the"));
  CHECK_THROWS_AS(ExclusionList::load("/nonexistent/list.txt"), IoError);
}

TEST_CASE("report row layout") {
  const std::vector<std::string> s{"a b c d e"};
  const auto rep = corpus_bleu(s, s);
  CHECK(report_header() == "rBLEU\tBLEU-1\tBLEU-2\tBLEU-3\tBLEU");
  CHECK(report_row(rep, rep) == "100.00\t100.00\t100.00\t100.00\t100.00");
}
