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
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "slt/bleu.hpp"
#include "slt/checkpoint.hpp"
#include "slt/config.hpp"
#include "slt/inference.hpp"
#include "slt/trainer.hpp"

namespace slt {

/// Parameters, optimizer moments and counters.
Checkpoint make_checkpoint(const RunConfig& config, const TrainingSession& session);

/// Run configuration stored in a checkpoint (training counters excluded).
RunConfig checkpoint_config(const Checkpoint& checkpoint);

ModelParams<float> checkpoint_params(const Checkpoint& checkpoint, const ModelConfig& config);

/// Restores optimizer moments and counters saved by make_checkpoint.
void restore_session(const Checkpoint& checkpoint, TrainingSession& session);

struct LoadedModel {
  RunConfig config;
  ModelParams<float> params;
  Vocabulary vocab;
  CasingModel casing;
};

/// Loads a checkpoint with the vocabulary and casing files it references;
/// non-empty `vocab_path` / `casing_path` take precedence.
LoadedModel load_model(const std::filesystem::path& checkpoint, const std::string& vocab_path = {},
                       const std::string& casing_path = {});

/// Points the manifests at `data`: "synth" generates the default synthetic
/// corpus under `synth_dir` (reused when already present); anything else is
/// a directory holding train.tsv / valid.tsv / test.tsv.
void use_data(RunConfig& config, const std::string& data, const std::filesystem::path& synth_dir);

struct TrainOptions {
  std::string resume;        // checkpoint to continue from
  bool train_vocab = false;  // rebuild the vocabulary even if one is configured
};

struct TrainingSummary {
  TrainState state;
  double final_loss = 0.0;
  std::vector<double> loss_trace;
  std::vector<double> lr_trace;
  std::optional<SplitResult> best;  // validation at the best rBLEU
  std::optional<SplitResult> last;  // validation after the final step
  std::filesystem::path last_checkpoint;
  std::vector<std::filesystem::path> checkpoints;
  double wall_clock_s = 0.0;
  RunConfig config;  // resolved (vocab_size / feature_dim from data)
};

/// Trains until max_steps or max_epochs. Writes checkpoint_last.bin,
/// checkpoint_best.bin (validation rBLEU), checkpoint_best_bleu.bin,
/// periodic checkpoint_<step>.bin, and train.log under output_dir.
TrainingSummary run_training(RunConfig config, const TrainOptions& options, std::ostream& log);

struct ResultRow {
  std::string preset;
  std::string split;
  BleuReport bleu;
  BleuReport rbleu;
  double wall_clock_s = 0.0;
  std::int64_t steps = 0;
};

std::string result_header();
std::string format_result(const ResultRow& row);

struct AblationOptions {
  std::vector<std::string> presets;  // ids as accepted by resolve_preset
  std::int64_t steps = 3000;
  std::filesystem::path output_dir = "runs/ablate";
};

/// Trains and validates each preset in turn, appending rows to
/// output_dir/results.tsv and writing the sorted table to `table`.
/// Failed presets are logged and skipped; returns the number of failures.
int run_ablation(const RunConfig& base, const AblationOptions& options, std::ostream& table,
                 std::ostream& log);

}  // namespace slt
