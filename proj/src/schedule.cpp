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

#include "slt/schedule.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "slt/errors.hpp"
#include "slt/objective.hpp"
#include "slt/optim.hpp"

namespace slt {

std::string to_string(SchedulerKind kind) {
  return kind == SchedulerKind::Cosine ? "cosine" : "inverse_sqrt";
}

SchedulerKind parse_scheduler(const std::string& text) {
  if (text == "cosine") return SchedulerKind::Cosine;
  if (text == "inverse_sqrt") return SchedulerKind::InverseSqrt;
  throw ConfigError("scheduler", "expected cosine or inverse_sqrt, got '" + text + "'");
}

void ScheduleConfig::validate() const {
  if (!(lr_max > 0.0)) throw ConfigError("lr", fmt::format("must be positive, got {}", lr_max));
  if (!(lr_min >= 0.0 && lr_min < lr_max)) {
    throw ConfigError("lr_min", fmt::format("must be in [0, lr), got {}", lr_min));
  }
  if (warmup_steps < 0) {
    throw ConfigError("warmup_steps", fmt::format("must be >= 0, got {}", warmup_steps));
  }
  if (period <= 0) throw ConfigError("restart_period", fmt::format("must be > 0, got {}", period));
  if (warmup_init_lr < 0.0) {
    throw ConfigError("warmup_init_lr", fmt::format("must be >= 0, got {}", warmup_init_lr));
  }
}

double lr_at(std::int64_t step, const ScheduleConfig& cfg) {
  step = std::max<std::int64_t>(step, 0);
  if (step < cfg.warmup_steps) {
    const double frac = static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
    return cfg.warmup_init_lr + (cfg.lr_max - cfg.warmup_init_lr) * frac;
  }
  if (cfg.kind == SchedulerKind::InverseSqrt) {
    const auto anchor = std::max<std::int64_t>(cfg.warmup_steps, 1);
    return cfg.lr_max * std::sqrt(static_cast<double>(anchor) /
                                  static_cast<double>(std::max<std::int64_t>(step, 1)));
  }
  const auto u = (step - cfg.warmup_steps) % cfg.period;
  const double phase = std::numbers::pi * static_cast<double>(u) / static_cast<double>(cfg.period);
  // Written as a decrement from lr_max so that restarts land on lr_max exactly.
  const double lr = cfg.lr_max - 0.5 * (cfg.lr_max - cfg.lr_min) * (1.0 - std::cos(phase));
  return std::max(lr, cfg.lr_min);
}

void LossConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw ConfigError("label_smoothing", fmt::format("must be in [0, 1), got {}", epsilon));
  }
  if (num_classes <= 1) {
    throw ConfigError("vocab_size", fmt::format("need more than one class, got {}", num_classes));
  }
}

void AdamWConfig::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0)) {
    throw ConfigError("adam_beta1", fmt::format("must be in [0, 1), got {}", beta1));
  }
  if (!(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam_beta2", fmt::format("must be in [0, 1), got {}", beta2));
  }
  if (!(eps > 0.0)) throw ConfigError("adam_eps", fmt::format("must be positive, got {}", eps));
  if (!(weight_decay >= 0.0)) {
    throw ConfigError("weight_decay", fmt::format("must be >= 0, got {}", weight_decay));
  }
}

}  // namespace slt
