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

#include "slt/data.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "slt/binary_io.hpp"
#include "slt/errors.hpp"
#include "slt/rng.hpp"

namespace slt {
namespace {

constexpr std::string_view kFeatureMagic = "SLTF";
constexpr std::uint8_t kFeatureVersion = 1;
constexpr std::size_t kFeatureHeader = 4 + 1 + 4 + 4;

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

const std::vector<std::string> kWordList = {
    "hello", "Boston", "water", "house", "I",      "green",  "walk",   "friend",
    "Monday", "school", "eat",   "book",  "happy", "little", "open",   "car",
    "Sarah", "morning", "play",  "blue",  "chair", "sleep",  "window", "music",
    "cold",  "garden", "write", "small", "dog",   "America", "river",  "bread",
    "sun",   "table",  "teach", "quiet", "paper", "city",    "coffee", "run",
    "bird",  "summer", "ask",   "doctor", "light", "phone",  "tree",   "family",
};

}  // namespace

std::string encode_features(const FeatureSequence& features) {
  std::string out(kFeatureMagic);
  out.push_back(static_cast<char>(kFeatureVersion));
  binary::put_u32(out, static_cast<std::uint32_t>(features.frames()));
  binary::put_u32(out, static_cast<std::uint32_t>(features.dim()));
  out.reserve(out.size() + 4 * features.values.size());
  const float* v = features.values.data();
  for (Eigen::Index i = 0; i < features.values.size(); ++i) binary::put_f32(out, v[i]);
  return out;
}

FeatureSequence decode_features(std::string_view bytes, const std::string& origin) {
  if (bytes.size() >= 4 && bytes.substr(0, 4) != kFeatureMagic) {
    throw BadMagicError(origin + ": not an SLTF feature file (bad magic)");
  }
  if (bytes.size() < kFeatureHeader) throw TruncatedFileError(origin, kFeatureHeader, bytes.size());
  const auto version = static_cast<std::uint8_t>(bytes[4]);
  if (version != kFeatureVersion) {
    throw FormatError(fmt::format("{}: unsupported SLTF version {}", origin, version));
  }
  const std::size_t frames = binary::get_u32(bytes, 5);
  const std::size_t dim = binary::get_u32(bytes, 9);
  if (frames == 0 || dim == 0) {
    throw FormatError(fmt::format("{}: empty feature block {}x{}", origin, frames, dim));
  }
  const std::size_t expected = kFeatureHeader + 4 * frames * dim;
  if (bytes.size() < expected) throw TruncatedFileError(origin, expected, bytes.size());
  if (bytes.size() > expected) {
    throw FormatError(fmt::format("{}: {} trailing bytes after the feature payload", origin,
                                  bytes.size() - expected));
  }
  FeatureSequence seq{RowMatrix<float>(frames, dim)};
  float* v = seq.values.data();
  for (std::size_t i = 0; i < frames * dim; ++i) {
    v[i] = binary::get_f32(bytes, kFeatureHeader + 4 * i);
    if (!std::isfinite(v[i])) {
      throw NonFiniteValueError(fmt::format("{}: non-finite value at frame {}, column {}", origin,
                                            i / dim, i % dim));
    }
  }
  return seq;
}

FeatureSequence load_features(const std::filesystem::path& path) {
  return decode_features(read_bytes(path), path.string());
}

void save_features(const std::filesystem::path& path, const FeatureSequence& features) {
  write_bytes(path, encode_features(features));
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  Manifest manifest;
  manifest.split = path.stem().string();
  const auto base = path.parent_path();
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty manifest");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id\tfeatures\ttranscript") {
    throw FormatError(path.string() + ": header must be 'id<TAB>features<TAB>transcript'");
  }
  std::set<std::string> ids;
  std::vector<std::string> missing;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw FormatError(fmt::format("{} line {}: expected 3 tab-separated fields", path.string(),
                                    line_no));
    }
    ManifestRecord rec{line.substr(0, t1), base / line.substr(t1 + 1, t2 - t1 - 1),
                       line.substr(t2 + 1)};
    if (!ids.insert(rec.id).second) {
      throw FormatError(fmt::format("{} line {}: duplicate id '{}'", path.string(), line_no, rec.id));
    }
    if (!std::filesystem::exists(rec.features)) missing.push_back(rec.id);
    manifest.records.push_back(std::move(rec));
  }
  if (!missing.empty()) {
    throw IoError(fmt::format("{}: missing feature files for ids: {}", path.string(),
                              fmt::join(missing, ", ")));
  }
  return manifest;
}

void save_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::string out = "id\tfeatures\ttranscript\n";
  const auto base = path.parent_path();
  for (const auto& rec : manifest.records) {
    const auto rel = rec.features.is_absolute() || !base.empty()
                         ? std::filesystem::relative(rec.features, base.empty() ? "." : base)
                         : rec.features;
    out += rec.id + "\t" + rel.generic_string() + "\t" + rec.transcript + "\n";
  }
  write_bytes(path, out);
}

Dataset load_dataset(const Manifest& manifest, const Vocabulary& vocab, std::size_t feature_dim) {
  Dataset data{manifest.split, {}};
  data.examples.reserve(manifest.records.size());
  for (const auto& rec : manifest.records) {
    Example ex{rec.id, load_features(rec.features), vocab.encode(rec.transcript), rec.transcript};
    if (feature_dim != 0 && ex.features.dim() != feature_dim) {
      throw InputError(fmt::format("item '{}': feature dim {} does not match expected {}", rec.id,
                                   ex.features.dim(), feature_dim));
    }
    data.examples.push_back(std::move(ex));
  }
  return data;
}

std::size_t Batch::target_tokens() const {
  std::size_t n = 0;
  for (int len : target_lengths) n += static_cast<std::size_t>(len);
  return n;
}

Batch make_batch(const Dataset& data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw InputError("cannot build an empty batch");
  Batch batch;
  batch.indices.assign(indices.begin(), indices.end());
  std::size_t max_tokens = 0;
  batch.feature_dim = data.examples.at(indices[0]).features.dim();
  for (auto i : indices) {
    const auto& ex = data.examples.at(i);
    if (ex.features.dim() != batch.feature_dim) {
      throw InputError("batch mixes feature widths at item '" + ex.id + "'");
    }
    batch.ids.push_back(ex.id);
    batch.max_frames = std::max(batch.max_frames, ex.features.frames());
    max_tokens = std::max(max_tokens, ex.tokens.size() + 1);
  }
  const auto b = indices.size();
  batch.features.assign(b * batch.max_frames * batch.feature_dim, 0.0f);
  batch.prev_tokens = TokenMatrix::Constant(static_cast<Eigen::Index>(b),
                                            static_cast<Eigen::Index>(max_tokens), kPadId);
  batch.targets = batch.prev_tokens;
  for (std::size_t r = 0; r < b; ++r) {
    const auto& ex = data.examples[indices[r]];
    std::copy_n(ex.features.values.data(), ex.features.values.size(),
                batch.features.begin() +
                    static_cast<std::ptrdiff_t>(r * batch.max_frames * batch.feature_dim));
    batch.source_lengths.push_back(static_cast<int>(ex.features.frames()));
    const auto row = static_cast<Eigen::Index>(r);
    batch.prev_tokens(row, 0) = kBosId;
    for (std::size_t t = 0; t < ex.tokens.size(); ++t) {
      batch.prev_tokens(row, static_cast<Eigen::Index>(t + 1)) = ex.tokens[t];
      batch.targets(row, static_cast<Eigen::Index>(t)) = ex.tokens[t];
    }
    batch.targets(row, static_cast<Eigen::Index>(ex.tokens.size())) = kEosId;
    batch.target_lengths.push_back(static_cast<int>(ex.tokens.size() + 1));
  }
  return batch;
}

std::vector<std::vector<std::size_t>> plan_batches(const Dataset& data, std::size_t batch_size,
                                                   std::uint64_t seed, std::size_t bucket_width) {
  if (batch_size == 0) throw ConfigError("batch_size", "must be positive");
  if (bucket_width == 0) throw ConfigError("bucket_width", "must be positive");
  std::map<std::size_t, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    buckets[(data.examples[i].features.frames() - 1) / bucket_width].push_back(i);
  }
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> plan;
  for (auto& [key, items] : buckets) {
    rng.shuffle(items);
    for (std::size_t start = 0; start < items.size(); start += batch_size) {
      const auto end = std::min(items.size(), start + batch_size);
      plan.emplace_back(items.begin() + static_cast<std::ptrdiff_t>(start),
                        items.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  rng.shuffle(plan);
  return plan;
}

std::vector<Batch> make_batches(const Dataset& data, std::size_t batch_size, std::uint64_t seed,
                                std::size_t bucket_width) {
  std::vector<Batch> batches;
  for (const auto& group : plan_batches(data, batch_size, seed, bucket_width)) {
    batches.push_back(make_batch(data, group));
  }
  return batches;
}

void SyntheticConfig::validate() const {
  if (vocab_words == 0) throw ConfigError("vocab_words", "must be positive");
  if (frames_per_word == 0) throw ConfigError("frames_per_word", "must be positive");
  if (dim == 0) throw ConfigError("dim", "must be positive");
  if (!(noise >= 0.0)) throw ConfigError("noise", "must be >= 0");
  if (min_words == 0 || max_words < min_words) {
    throw ConfigError("min_words", "need 1 <= min_words <= max_words");
  }
}

std::vector<std::string> synthetic_words(std::size_t count) {
  std::vector<std::string> words(kWordList.begin(),
                                 kWordList.begin() + static_cast<std::ptrdiff_t>(
                                                         std::min(count, kWordList.size())));
  static constexpr std::string_view kOnsets = "bdfgklmnprstvz";
  static constexpr std::string_view kVowels = "aeiou";
  for (std::size_t i = words.size(); i < count; ++i) {
    std::string w;
    for (std::size_t n = i; ; n /= 70) {
      w += kOnsets[n % kOnsets.size()];
      w += kVowels[(n / kOnsets.size()) % kVowels.size()];
      if (n < 70) break;
    }
    words.push_back(w + "x");
  }
  return words;
}

SyntheticCorpus synthesize(const SyntheticConfig& config) {
  config.validate();
  SyntheticCorpus corpus;
  corpus.words = synthetic_words(config.vocab_words);
  const auto k = config.frames_per_word;
  corpus.word_frames = RowMatrix<float>(config.vocab_words * k, config.dim);
  // Entries ~ N(0, 1/dim), so each frame has roughly unit norm.
  Rng table_rng(mix_seed(config.seed, 1));
  const double spread = 1.0 / std::sqrt(static_cast<double>(config.dim));
  for (Eigen::Index i = 0; i < corpus.word_frames.size(); ++i) {
    corpus.word_frames.data()[i] = static_cast<float>(spread * table_rng.normal());
  }

  Rng sentence_rng(mix_seed(config.seed, 2));
  Rng noise_rng(mix_seed(config.seed, 3));
  auto make_split = [&](const std::string& name, std::size_t count) {
    std::vector<SyntheticItem> items;
    for (std::size_t n = 0; n < count; ++n) {
      SyntheticItem item;
      item.id = fmt::format("{}-{:05d}", name, n);
      const auto span = config.max_words - config.min_words + 1;
      const auto length = config.min_words + sentence_rng.below(span);
      for (std::size_t w = 0; w < length; ++w) {
        item.words.push_back(sentence_rng.below(config.vocab_words));
      }
      for (std::size_t w = 0; w < length; ++w) {
        if (w) item.transcript += ' ';
        auto word = corpus.words[item.words[w]];
        if (w == 0) word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
        item.transcript += word;
      }
      item.features.values = RowMatrix<float>(length * k, config.dim);
      for (std::size_t w = 0; w < length; ++w) {
        item.features.values.middleRows(static_cast<Eigen::Index>(w * k),
                                         static_cast<Eigen::Index>(k)) =
            corpus.word_frames.middleRows(static_cast<Eigen::Index>(item.words[w] * k),
                                          static_cast<Eigen::Index>(k));
      }
      if (config.noise > 0.0) {
        for (Eigen::Index i = 0; i < item.features.values.size(); ++i) {
          item.features.values.data()[i] += static_cast<float>(config.noise * noise_rng.normal());
        }
      }
      items.push_back(std::move(item));
    }
    return items;
  };
  corpus.train = make_split("train", config.train_items);
  corpus.valid = make_split("valid", config.valid_items);
  corpus.test = make_split("test", config.test_items);
  return corpus;
}

SyntheticFiles write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "features");
  auto write_split = [&](const std::string& name, const std::vector<SyntheticItem>& items) {
    Manifest manifest{name, {}};
    for (const auto& item : items) {
      const auto file = dir / "features" / (item.id + ".sltf");
      save_features(file, item.features);
      manifest.records.push_back({item.id, file, item.transcript});
    }
    const auto path = dir / (name + ".tsv");
    save_manifest(path, manifest);
    return path;
  };
  return {write_split("train", corpus.train), write_split("valid", corpus.valid),
          write_split("test", corpus.test)};
}

}  // namespace slt
