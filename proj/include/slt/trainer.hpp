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
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "slt/data.hpp"
#include "slt/model.hpp"
#include "slt/objective.hpp"
#include "slt/optim.hpp"
#include "slt/schedule.hpp"

namespace slt {

/// Counters that must survive a checkpoint for a resumed run to continue
/// exactly where it stopped.
struct TrainState {
  std::int64_t global_step = 0;     // updates applied so far
  std::int64_t epoch = 0;           // completed epochs
  std::int64_t batch_in_epoch = 0;  // next batch of the current epoch
  double best_rbleu = -1.0;
  double best_bleu = -1.0;
};

struct StepRecord {
  std::int64_t step = 0;  // 1-based update number
  std::int64_t epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
  double tokens_per_sec = 0.0;
  std::size_t tokens = 0;
};

/// Tab-separated header of the training log.
std::string step_log_header();
std::string format_step(const StepRecord& record);

struct TrainingSession {
  ModelConfig model;
  ModelParams<float> params;
  AdamW<float> optim;
  LossConfig loss;
  ScheduleConfig schedule;
  double clip_norm = 0.0;
  std::uint64_t seed = 1;
  TrainState state;

  TrainingSession(ModelConfig model, ModelParams<float> params, AdamWConfig optim_config,
                  LossConfig loss, ScheduleConfig schedule, std::uint64_t seed,
                  double clip_norm = 0.0);

  const std::vector<NamedTensor<float>>& named() const { return named_; }

 private:
  std::vector<NamedTensor<float>> named_;
};

/// Forward, loss, backward and one AdamW update at lr_at(global_step).
/// Dropout draws from a stream keyed by (seed, global_step).
StepRecord train_step(TrainingSession& session, const Batch& batch);

/// Returns false to stop the epoch early (after the step that was just taken).
using StepCallback = std::function<bool(const StepRecord&)>;

struct EpochStats {
  double mean_loss = 0.0;
  std::int64_t steps = 0;
  std::vector<double> lr_trace;
  std::vector<double> loss_trace;
  bool completed = false;  // every batch of the epoch was consumed
};

/// Batch order for epoch `epoch` of a run seeded with `seed`.
std::vector<std::vector<std::size_t>> epoch_plan(const Dataset& data, std::size_t batch_size,
                                                 std::uint64_t seed, std::int64_t epoch,
                                                 std::size_t bucket_width);

/// Runs the remaining batches of the current epoch, stopping early at
/// `max_steps` total updates or when the callback asks to.
EpochStats train_epoch(TrainingSession& session, const Dataset& data, std::size_t batch_size,
                       std::int64_t max_steps, const StepCallback& on_step = {},
                       std::size_t bucket_width = 8);

}  // namespace slt
