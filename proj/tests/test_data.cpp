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

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>

#include "slt/data.hpp"
#include "slt/errors.hpp"
#include "slt/model.hpp"
#include "slt/objective.hpp"
#include "support.hpp"

using namespace slt;
using namespace slt::testing;

namespace {

void write_raw(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream(path, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

FeatureSequence random_features(std::size_t frames, std::size_t dim, Rng& rng) {
  FeatureSequence f{RowMatrix<float>(frames, dim)};
  for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values.data()[i] = static_cast<float>(rng.normal());
  return f;
}

Dataset toy_dataset(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d{"toy", {}};
  for (std::size_t i = 0; i < n; ++i) {
    Example ex;
    ex.id = "item" + std::to_string(i);
    ex.features = random_features(1 + rng.below(30), dim, rng);
    for (std::size_t t = 0, len = 1 + rng.below(6); t < len; ++t) ex.tokens.push_back(4 + static_cast<int>(rng.below(5)));
    d.examples.push_back(std::move(ex));
  }
  return d;
}

}  // namespace

TEST_CASE("hand-written feature file") {
  // "SLTF", version 1, T = 3, D = 4, then twelve little-endian float32 values.
  const std::string bytes(
      "SLTF\x01"
      "\x03\x00\x00\x00"
      "\x04\x00\x00\x00"
      "\x00\x00\x80\x3F" "\x00\x00\x00\xC0" "\x00\x00\x00\x3F" "\x00\x00\x80\x3E"
      "\x00\x00\x40\x40" "\x00\x00\x00\xBF" "\x00\x00\x20\x40" "\x00\x00\x20\x41"
      "\x00\x00\x80\xBF" "\x00\x00\x00\x3E" "\x00\x00\x80\x40" "\x00\x00\xC8\x42",
      13 + 48);
  ScratchDir dir("data");
  write_raw(dir / "hand.sltf", bytes);
  const auto f = load_features(dir / "hand.sltf");
  REQUIRE(f.frames() == 3);
  REQUIRE(f.dim() == 4);
  const float want[12] = {1.0f, -2.0f, 0.5f, 0.25f, 3.0f, -0.5f, 2.5f, 10.0f, -1.0f, 0.125f, 4.0f, 100.0f};
  for (int i = 0; i < 12; ++i) CHECK(f.values(i / 4, i % 4) == want[i]);
  CHECK(encode_features(f) == bytes);
}

TEST_CASE("feature roundtrip is bit-exact") {
  Rng rng(1);
  ScratchDir dir("data");
  for (int trial = 0; trial < 10; ++trial) {
    auto f = random_features(1 + rng.below(20), 1 + rng.below(40), rng);
    f.values(0, 0) = std::numeric_limits<float>::denorm_min();
    f.values(f.values.rows() - 1, 0) = -0.0f;
    save_features(dir / "f.sltf", f);
    const auto g = load_features(dir / "f.sltf");
    REQUIRE(g.values.rows() == f.values.rows());
    REQUIRE(g.values.cols() == f.values.cols());
    CHECK(std::memcmp(g.values.data(), f.values.data(), sizeof(float) * static_cast<std::size_t>(f.values.size())) == 0);
  }
}

TEST_CASE("feature file errors are distinct") {
  Rng rng(2);
  const auto good = encode_features(random_features(3, 4, rng));
  CHECK_THROWS_AS(decode_features("NOPE\x01" + good.substr(5)), BadMagicError);
  try {
    decode_features(good.substr(0, good.size() - 6));
    FAIL("expected TruncatedFileError");
  } catch (const TruncatedFileError& e) {
    CHECK(e.expected_bytes() == good.size());
    CHECK(e.actual_bytes() == good.size() - 6);
    CHECK(std::string(e.what()).find(std::to_string(good.size())) != std::string::npos);
  }
  CHECK_THROWS_AS(decode_features(good.substr(0, 7)), TruncatedFileError);
  auto nan = good;
  const float bad = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan.data() + 13 + 4 * 5, &bad, 4);
  CHECK_THROWS_AS(decode_features(nan), NonFiniteValueError);
  auto inf = good;
  const float big = std::numeric_limits<float>::infinity();
  std::memcpy(inf.data() + 13, &big, 4);
  CHECK_THROWS_AS(decode_features(inf), NonFiniteValueError);
  auto version = good;
  version[4] = 2;
  CHECK_THROWS_AS(decode_features(version), FormatError);
  CHECK_THROWS_AS(decode_features(good + "x"), FormatError);
  CHECK_THROWS_AS(load_features("/nonexistent/file.sltf"), IoError);
}

TEST_CASE("manifests") {
  ScratchDir dir("data");
  Rng rng(3);
  std::filesystem::create_directories(dir / "feats");
  save_features(dir / "feats" / "a.sltf", random_features(2, 3, rng));
  save_features(dir / "feats" / "b.sltf", random_features(5, 3, rng));
  auto write = [&](const std::string& text) { write_raw(dir / "m.tsv", text); };

  write("id\tfeatures\ttranscript\na\tfeats/a.sltf\tHello there\n\nb\tfeats/b.sltf\tA second one\n");
  const auto m = load_manifest(dir / "m.tsv");
  CHECK(m.split == "m");
  REQUIRE(m.records.size() == 2);
  CHECK(m.records[0].features == dir / "feats" / "a.sltf");
  CHECK(m.records[1].transcript == "A second one");
  save_manifest(dir / "copy.tsv", m);
  const auto again = load_manifest(dir / "copy.tsv");
  CHECK(again.records[1].features == m.records[1].features);

  write("id\tpath\ttext\n");
  CHECK_THROWS_AS(load_manifest(dir / "m.tsv"), FormatError);
  write("id\tfeatures\ttranscript\na\tfeats/a.sltf\n");
  CHECK_THROWS_AS(load_manifest(dir / "m.tsv"), FormatError);
  write("id\tfeatures\ttranscript\na\tfeats/a.sltf\tx\na\tfeats/b.sltf\ty\n");
  CHECK_THROWS_AS(load_manifest(dir / "m.tsv"), FormatError);
  write("id\tfeatures\ttranscript\nq1\tfeats/q1.sltf\tx\na\tfeats/a.sltf\ty\nq2\tnope.sltf\tz\n");
  try {
    load_manifest(dir / "m.tsv");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    const std::string what = e.what();
    CHECK(what.find("q1") != std::string::npos);
    CHECK(what.find("q2") != std::string::npos);
  }
  write("");
  CHECK_THROWS_AS(load_manifest(dir / "m.tsv"), FormatError);
  CHECK_THROWS_AS(load_manifest(dir / "absent.tsv"), IoError);
}

TEST_CASE("batches partition the data deterministically") {
  const auto data = toy_dataset(97, 3, 4);
  for (std::size_t bs : {1u, 5u, 32u}) {
    const auto plan = plan_batches(data, bs, 11);
    CHECK(plan == plan_batches(data, bs, 11));
    std::multiset<std::size_t> seen;
    for (const auto& group : plan) {
      CHECK(!group.empty());
      CHECK(group.size() <= bs);
      std::set<std::size_t> buckets;
      for (auto i : group) {
        seen.insert(i);
        buckets.insert((data.examples[i].features.frames() - 1) / 8);
      }
      CHECK(buckets.size() == 1);
    }
    CHECK(seen.size() == data.size());
    CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == data.size());
  }
  CHECK(plan_batches(data, 5, 11) != plan_batches(data, 5, 12));
  CHECK_THROWS_AS(plan_batches(data, 0, 1), ConfigError);
}

TEST_CASE("batch size one enumerates the items") {
  const auto data = toy_dataset(20, 3, 5);
  const auto batches = make_batches(data, 1, 1, 1000);
  REQUIRE(batches.size() == 20);
  std::set<std::string> ids;
  for (const auto& b : batches) {
    REQUIRE(b.size() == 1);
    const auto& ex = data.examples[b.indices[0]];
    ids.insert(b.ids[0]);
    CHECK(b.max_frames == ex.features.frames());
    CHECK(std::equal(b.features.begin(), b.features.end(), ex.features.values.data()));
  }
  CHECK(ids.size() == 20);
}

TEST_CASE("padding is exact") {
  const auto data = toy_dataset(40, 3, 6);
  for (const auto& b : make_batches(data, 7, 2, 1000)) {
    for (std::size_t r = 0; r < b.size(); ++r) {
      const auto& ex = data.examples[b.indices[r]];
      CHECK(b.source_lengths[r] == static_cast<int>(ex.features.frames()));
      CHECK(b.target_lengths[r] == static_cast<int>(ex.tokens.size() + 1));
      for (std::size_t t = 0; t < b.max_frames; ++t)
        for (std::size_t j = 0; j < 3; ++j) {
          const float v = b.features[(r * b.max_frames + t) * 3 + j];
          if (t < ex.features.frames()) {
            CHECK(v == ex.features.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)));
          } else {
            CHECK(v == 0.0f);
          }
        }
      const auto row = static_cast<Eigen::Index>(r);
      CHECK(b.prev_tokens(row, 0) == kBosId);
      for (Eigen::Index t = 0; t < b.targets.cols(); ++t) {
        const auto n = static_cast<Eigen::Index>(ex.tokens.size());
        if (t < n) {
          CHECK(b.targets(row, t) == ex.tokens[static_cast<std::size_t>(t)]);
          CHECK(b.prev_tokens(row, t + 1) == ex.tokens[static_cast<std::size_t>(t)]);
        } else if (t == n) {
          CHECK(b.targets(row, t) == kEosId);
        } else {
          CHECK(b.targets(row, t) == kPadId);
          CHECK(b.prev_tokens(row, t) == kPadId);
        }
      }
    }
  }
}

TEST_CASE("batch loss equals the token-weighted mean of item losses") {
  // The loss is a mean over target tokens, so items are weighted by their
  // target length when combined.
  ModelConfig c;
  c.encoder_layers = 2;
  c.decoder_layers = 2;
  c.embed_dim = 8;
  c.ffn_dim = 16;
  c.attention_heads = 2;
  c.feature_dim = 3;
  c.vocab_size = 9;
  const auto params = init_params<double>(c, 3);
  const auto data = toy_dataset(12, 3, 7);
  const LossConfig loss{0.1, 9, kPadId};
  auto batch_loss = [&](const Batch& b) {
    const auto enc = encode(feature_tensor<double>(b), b.source_lengths, params, c, Mode::Eval, nullptr);
    const auto lp = decode_step(b.prev_tokens, &enc, params, c, Mode::Eval, nullptr);
    return smoothed_ce(lp, b.targets, loss);
  };
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto together = batch_loss(make_batch(data, all));
  double weighted = 0;
  std::size_t tokens = 0;
  for (auto i : all) {
    const std::size_t one[] = {i};
    const auto r = batch_loss(make_batch(data, one));
    weighted += r.loss.item() * static_cast<double>(r.tokens);
    tokens += r.tokens;
  }
  CHECK(together.tokens == tokens);
  CHECK(std::abs(together.loss.item() - weighted / static_cast<double>(tokens)) < 1e-5);
}

TEST_CASE("synthetic corpus construction") {
  SyntheticConfig cfg;
  cfg.train_items = 40;
  cfg.valid_items = 10;
  cfg.test_items = 5;
  cfg.noise = 0.0;
  const auto corpus = synthesize(cfg);
  CHECK(corpus.words.size() == 30);
  CHECK(std::set<std::string>(corpus.words.begin(), corpus.words.end()).size() == 30);
  CHECK(corpus.train.size() == 40);
  CHECK(corpus.valid.size() == 10);
  CHECK(corpus.test.size() == 5);
  for (const auto* split : {&corpus.train, &corpus.valid, &corpus.test}) {
    for (const auto& item : *split) {
      CHECK(item.features.frames() == 4 * item.words.size());
      CHECK(item.features.dim() == 64);
      CHECK(split_words(item.transcript).size() == item.words.size());
      for (std::size_t w = 0; w < item.words.size(); ++w) {
        // Without noise each word block is its table entry, bit for bit.
        CHECK(item.features.values.middleRows(static_cast<Eigen::Index>(4 * w), 4) ==
              corpus.word_frames.middleRows(static_cast<Eigen::Index>(4 * item.words[w]), 4));
      }
    }
  }
  const auto again = synthesize(cfg);
  for (std::size_t i = 0; i < corpus.train.size(); ++i) {
    CHECK(again.train[i].transcript == corpus.train[i].transcript);
    CHECK(again.train[i].features.values == corpus.train[i].features.values);
  }
  auto other = cfg;
  other.seed = 2;
  CHECK(synthesize(other).word_frames != corpus.word_frames);

  auto bad = cfg;
  bad.noise = -1;
  CHECK_THROWS_AS(synthesize(bad), ConfigError);
  bad = cfg;
  bad.frames_per_word = 0;
  CHECK_THROWS_AS(synthesize(bad), ConfigError);
}

TEST_CASE("nearest-neighbour frame lookup recovers the words") {
  SyntheticConfig cfg;
  cfg.train_items = 0;
  cfg.valid_items = 200;
  const auto corpus = synthesize(cfg);
  const auto& table = corpus.word_frames;
  std::size_t words = 0, recovered = 0;
  for (const auto& item : corpus.valid) {
    for (std::size_t w = 0; w < item.words.size(); ++w) {
      bool ok = true;
      for (std::size_t f = 0; f < cfg.frames_per_word; ++f) {
        const auto frame = item.features.values.row(static_cast<Eigen::Index>(w * cfg.frames_per_word + f));
        Eigen::Index nearest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index r = 0; r < table.rows(); ++r) {
          double dist = 0;
          for (Eigen::Index j = 0; j < table.cols(); ++j) {
            const double d = static_cast<double>(frame(j)) - static_cast<double>(table(r, j));
            dist += d * d;
          }
          if (dist < best) {
            best = dist;
            nearest = r;
          }
        }
        ok = ok && static_cast<std::size_t>(nearest) / cfg.frames_per_word == item.words[w];
      }
      ++words;
      recovered += ok;
    }
  }
  MESSAGE("1-NN recovered " << recovered << " of " << words << " words");
  CHECK(static_cast<double>(recovered) >= 0.99 * static_cast<double>(words));
}

TEST_CASE("synthetic files load back exactly") {
  SyntheticConfig cfg;
  cfg.train_items = 12;
  cfg.valid_items = 4;
  cfg.test_items = 3;
  const auto corpus = synthesize(cfg);
  ScratchDir dir("data");
  const auto files = write_synthetic(corpus, dir.path());
  std::vector<std::string> lines;
  for (const auto& item : corpus.train) lines.push_back(item.transcript);
  const auto vocab = Vocabulary::train(lines, 60);
  const auto train = load_dataset(load_manifest(files.train_manifest), vocab, 64);
  REQUIRE(train.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(train.examples[i].id == corpus.train[i].id);
    CHECK(train.examples[i].transcript == corpus.train[i].transcript);
    CHECK(train.examples[i].features.values == corpus.train[i].features.values);
    CHECK(vocab.decode(train.examples[i].tokens) == lowercase(corpus.train[i].transcript));
  }
  CHECK(load_manifest(files.test_manifest).records.size() == 3);
  CHECK_THROWS_AS(load_dataset(load_manifest(files.valid_manifest), vocab, 32), InputError);
}
