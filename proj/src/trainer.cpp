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

#include "slt/trainer.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>

#include "slt/errors.hpp"

namespace slt {
namespace {

constexpr std::uint64_t kDropoutStream = 11;
constexpr std::uint64_t kBatchStream = 12;

void clip_gradients(const std::vector<NamedTensor<float>>& named, double max_norm) {
  double total = 0.0;
  for (const auto& [name, t] : named) {
    for (float g : t.grad()) total += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(total);
  if (norm <= max_norm || norm == 0.0) return;
  const auto factor = static_cast<float>(max_norm / norm);
  for (auto [name, t] : named) {
    if (!t.has_grad()) continue;
    for (auto& g : t.mutable_grad()) g *= factor;
  }
}

std::string describe(const Batch& batch) {
  std::string ids;
  for (std::size_t i = 0; i < batch.ids.size() && i < 4; ++i) ids += (i ? "," : "") + batch.ids[i];
  if (batch.ids.size() > 4) ids += ",...";
  return ids;
}

}  // namespace

std::string step_log_header() { return "step\tepoch\tloss\tlr\ttokens_per_sec"; }

std::string format_step(const StepRecord& r) {
  return fmt::format("{}\t{}\t{:.6f}\t{:.6e}\t{:.1f}", r.step, r.epoch, r.loss, r.lr, r.tokens_per_sec);
}

TrainingSession::TrainingSession(ModelConfig model_config, ModelParams<float> model_params,
                                 AdamWConfig optim_config, LossConfig loss_config,
                                 ScheduleConfig schedule_config, std::uint64_t run_seed,
                                 double clip)
    : model(std::move(model_config)),
      params(std::move(model_params)),
      optim(optim_config, params.named()),
      loss(loss_config),
      schedule(schedule_config),
      clip_norm(clip),
      seed(run_seed),
      named_(params.named()) {
  model.validate();
  loss.validate();
  schedule.validate();
  if (loss.num_classes != model.vocab_size) {
    throw ConfigError("vocab_size", fmt::format("loss expects {} classes but the model has {}",
                                                loss.num_classes, model.vocab_size));
  }
}

StepRecord train_step(TrainingSession& session, const Batch& batch) {
  const auto start = std::chrono::steady_clock::now();
  const double lr = lr_at(session.state.global_step, session.schedule);
  Rng rng(mix_seed(mix_seed(session.seed, kDropoutStream),
                   static_cast<std::uint64_t>(session.state.global_step)));
  session.params.zero_grad();

  double loss_value = 0.0;
  std::size_t tokens = 0;
  {
    Tape<float> tape;
    TapeScope<float> scope(tape);
    const auto features = feature_tensor<float>(batch);
    const auto encoded =
        encode(features, batch.source_lengths, session.params, session.model, Mode::Train, &rng);
    const auto logprobs =
        decode_step(batch.prev_tokens, &encoded, session.params, session.model, Mode::Train, &rng);
    const auto result = smoothed_ce(logprobs, batch.targets, session.loss);
    loss_value = static_cast<double>(result.loss.item());
    tokens = result.tokens;
    if (!std::isfinite(loss_value)) {
      throw NonFiniteLossError(fmt::format("non-finite loss at step {} (epoch {}, batch {}: {})",
                                           session.state.global_step + 1, session.state.epoch + 1,
                                           session.state.batch_in_epoch, describe(batch)));
    }
    tape.backward(result.loss);
  }
  if (session.clip_norm > 0.0) clip_gradients(session.named(), session.clip_norm);
  auto named = session.named();
  session.optim.step(named, lr);
  ++session.state.global_step;

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  StepRecord record;
  record.step = session.state.global_step;
  record.epoch = session.state.epoch + 1;
  record.loss = loss_value;
  record.lr = lr;
  record.tokens = tokens;
  record.tokens_per_sec = seconds > 0.0 ? static_cast<double>(tokens) / seconds : 0.0;
  return record;
}

std::vector<std::vector<std::size_t>> epoch_plan(const Dataset& data, std::size_t batch_size,
                                                 std::uint64_t seed, std::int64_t epoch,
                                                 std::size_t bucket_width) {
  return plan_batches(data, batch_size,
                      mix_seed(mix_seed(seed, kBatchStream), static_cast<std::uint64_t>(epoch)),
                      bucket_width);
}

EpochStats train_epoch(TrainingSession& session, const Dataset& data, std::size_t batch_size,
                       std::int64_t max_steps, const StepCallback& on_step,
                       std::size_t bucket_width) {
  if (data.size() == 0) throw InputError("cannot train on an empty dataset");
  const auto plan = epoch_plan(data, batch_size, session.seed, session.state.epoch, bucket_width);
  EpochStats stats;
  double total = 0.0;
  auto& state = session.state;
  while (static_cast<std::size_t>(state.batch_in_epoch) < plan.size()) {
    if (state.global_step >= max_steps) return stats;
    const auto& indices = plan[static_cast<std::size_t>(state.batch_in_epoch)];
    const auto batch = make_batch(data, indices);
    const auto record = train_step(session, batch);
    ++state.batch_in_epoch;
    ++stats.steps;
    total += record.loss;
    stats.mean_loss = total / static_cast<double>(stats.steps);
    stats.lr_trace.push_back(record.lr);
    stats.loss_trace.push_back(record.loss);
    const bool last = static_cast<std::size_t>(state.batch_in_epoch) == plan.size();
    if (last) {
      ++state.epoch;
      state.batch_in_epoch = 0;
      stats.completed = true;
    }
    if (on_step && !on_step(record)) return stats;
    if (last) break;
  }
  return stats;
}

}  // namespace slt
