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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "slt/beam_search.hpp"
#include "slt/model.hpp"
#include "slt/objective.hpp"
#include "slt/optim.hpp"
#include "slt/schedule.hpp"

namespace slt {

struct TrainConfig {
  int max_epochs = 108;
  std::int64_t max_steps = 100000;
  int batch_size = 32;
  std::uint64_t seed = 1;
  std::int64_t save_interval = 5000;      // periodic checkpoint every N steps; 0 disables
  std::int64_t validate_interval = 1000;  // 0: validate at the end of each epoch only
  std::int64_t log_interval = 100;
  double clip_norm = 0.0;  // 0 disables clipping
  int bucket_width = 8;
  int bpe_vocab_size = 7000;
  int threads = 1;  // decoding threads during validation
};

struct PathConfig {
  std::string train_manifest;
  std::string valid_manifest;
  std::string test_manifest;
  std::string vocab;
  std::string casing;
  std::string exclusions;  // empty: the shipped default list
  std::string output_dir = "runs/default";
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  ScheduleConfig schedule;
  AdamWConfig optim;
  double label_smoothing = 0.1;
  DecodeConfig decode;
  PathConfig paths;

  LossConfig loss() const { return {label_smoothing, model.vocab_size, kPadId}; }

  /// Throws ConfigError naming the first invalid field.
  void validate() const;

  /// Sets one field by its key. Unknown keys and malformed values throw
  /// ConfigError.
  void set(const std::string& key, const std::string& value);

  /// Every field as (key, value), in a stable order.
  std::vector<std::pair<std::string, std::string>> entries() const;
};

/// Field keys accepted by RunConfig::set, in print order.
const std::vector<std::string>& run_config_keys();

/// Parses `key = value` lines (`#` starts a comment) on top of `base`.
RunConfig parse_run_config(std::string_view text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// One `key = value` line per field.
std::string format_run_config(const RunConfig& config);

/// Applies `key=value` override strings.
void apply_overrides(RunConfig& config, const std::vector<std::string>& overrides);

/// SLT_SEED, when set, replaces train.seed.
void apply_environment(RunConfig& config);

}  // namespace slt
