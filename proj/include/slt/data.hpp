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
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "slt/ops.hpp"
#include "slt/tensor.hpp"
#include "slt/tokenizer.hpp"

namespace slt {

/// T x D per-frame visual features. Stored exactly as read; no normalization.
struct FeatureSequence {
  RowMatrix<float> values;

  std::size_t frames() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(values.cols()); }
};

/// SLTF file: "SLTF", version byte 1, uint32 LE T, uint32 LE D, then T*D
/// little-endian float32 values in row-major order.
FeatureSequence load_features(const std::filesystem::path& path);
void save_features(const std::filesystem::path& path, const FeatureSequence& features);
std::string encode_features(const FeatureSequence& features);
FeatureSequence decode_features(std::string_view bytes, const std::string& origin = "<memory>");

struct ManifestRecord {
  std::string id;
  std::filesystem::path features;  // absolute, resolved against the manifest directory
  std::string transcript;
};

/// UTF-8 TSV with header "id\tfeatures\ttranscript"; feature paths are
/// relative to the manifest's directory.
struct Manifest {
  std::string split;
  std::vector<ManifestRecord> records;
};

/// Loads and checks a manifest: unique ids, every feature file present.
/// All missing files are reported together, by id.
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);

struct Example {
  std::string id;
  FeatureSequence features;
  std::vector<int> tokens;  // subword ids without bos/eos
  std::string transcript;
};

struct Dataset {
  std::string split;
  std::vector<Example> examples;

  std::size_t size() const { return examples.size(); }
};

/// Loads every feature file and encodes transcripts. `feature_dim` > 0
/// enforces the feature width.
Dataset load_dataset(const Manifest& manifest, const Vocabulary& vocab, std::size_t feature_dim = 0);

/// Padded mini-batch. Frames past source_lengths[b] are zero; token
/// positions past the target length hold the pad id.
struct Batch {
  std::vector<std::size_t> indices;  // into the dataset
  std::vector<std::string> ids;
  std::size_t max_frames = 0;
  std::size_t feature_dim = 0;
  std::vector<float> features;  // [B, max_frames, feature_dim]
  std::vector<int> source_lengths;
  TokenMatrix prev_tokens;  // bos y1 .. yn
  TokenMatrix targets;      // y1 .. yn eos
  std::vector<int> target_lengths;

  std::size_t size() const { return indices.size(); }
  std::size_t target_tokens() const;
};

Batch make_batch(const Dataset& data, std::span<const std::size_t> indices);

/// One epoch of batches. Items are bucketed by source length (bucket width
/// in frames), shuffled within buckets, chunked, and the batch order is
/// shuffled. Deterministic for a given seed; every item appears once.
std::vector<Batch> make_batches(const Dataset& data, std::size_t batch_size, std::uint64_t seed,
                                std::size_t bucket_width = 8);

/// Just the index groups make_batches() would use.
std::vector<std::vector<std::size_t>> plan_batches(const Dataset& data, std::size_t batch_size,
                                                   std::uint64_t seed,
                                                   std::size_t bucket_width = 8);

template <typename Scalar>
Tensor<Scalar> feature_tensor(const Batch& batch) {
  return Tensor<Scalar>({batch.size(), batch.max_frames, batch.feature_dim},
                        std::vector<Scalar>(batch.features.begin(), batch.features.end()));
}

struct SyntheticConfig {
  std::size_t train_items = 500;
  std::size_t valid_items = 50;
  std::size_t test_items = 0;
  std::size_t vocab_words = 30;
  std::size_t frames_per_word = 4;
  std::size_t dim = 64;
  double noise = 0.01;
  std::uint64_t seed = 1;
  std::size_t min_words = 3;
  std::size_t max_words = 7;

  void validate() const;
};

struct SyntheticItem {
  std::string id;
  std::vector<std::size_t> words;  // indices into SyntheticCorpus::words
  std::string transcript;
  FeatureSequence features;
};

/// Each word owns frames_per_word fixed random frames; a sentence's features
/// are its words' frames in order plus Gaussian noise.
struct SyntheticCorpus {
  std::vector<std::string> words;
  RowMatrix<float> word_frames;  // [words * frames_per_word, dim]
  std::vector<SyntheticItem> train, valid, test;
};

/// Word list used by the generator (first `count` entries; extended with
/// generated pseudo-words when count exceeds the built-in list).
std::vector<std::string> synthetic_words(std::size_t count);

SyntheticCorpus synthesize(const SyntheticConfig& config);

struct SyntheticFiles {
  std::filesystem::path train_manifest, valid_manifest, test_manifest;
};

/// Writes features/<id>.sltf plus train.tsv, valid.tsv and test.tsv under `dir`.
SyntheticFiles write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace slt
