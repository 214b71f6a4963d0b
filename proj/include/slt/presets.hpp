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
#include <string_view>
#include <vector>

#include "slt/config.hpp"

namespace slt {

/// One row of the ablation grid. Rows 1-12 vary architecture and schedule,
/// 13-18 add regularization to a base row, 19-36 are the extended grid.
struct AblationPreset {
  int id = 0;
  int encoder_layers = 0;
  int decoder_layers = 0;
  int embed_dim = 0;
  int ffn_dim = 0;
  int attention_heads = 0;
  Activation activation = Activation::Relu;
  double lr = 1e-3;
  SchedulerKind scheduler = SchedulerKind::Cosine;
  std::int64_t restart_period = 17000;
  double dropout = 0.0;
  double weight_decay = 0.0;
  double label_smoothing = 0.0;

  /// Overlays the row on `base`; everything the row does not name is kept.
  RunConfig apply(RunConfig base) const;
};

const std::vector<AblationPreset>& ablation_presets();

/// Throws InputError for an unknown id.
const AblationPreset& find_preset(int id);

/// "baseline" resolves to `base` itself; otherwise a numeric preset id.
RunConfig resolve_preset(std::string_view id, const RunConfig& base = {});

/// Expands "19-36", "5", "baseline", "all" (every preset) into ids.
std::vector<std::string> expand_preset_ids(const std::vector<std::string>& specs);

}  // namespace slt
