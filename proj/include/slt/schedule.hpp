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
#include <string>

namespace slt {

enum class SchedulerKind { Cosine, InverseSqrt };

std::string to_string(SchedulerKind kind);
SchedulerKind parse_scheduler(const std::string& text);

/// Linear warmup followed by either cosine decay with fixed-period warm
/// restarts or inverse-square-root decay.
struct ScheduleConfig {
  SchedulerKind kind = SchedulerKind::Cosine;
  double lr_max = 1e-3;
  double lr_min = 1e-7;
  std::int64_t warmup_steps = 2000;
  std::int64_t period = 17000;  // restart period T
  double warmup_init_lr = 1e-7;

  void validate() const;
};

/// Learning rate for update number `step` (0-based). Pure.
double lr_at(std::int64_t step, const ScheduleConfig& cfg);

}  // namespace slt
