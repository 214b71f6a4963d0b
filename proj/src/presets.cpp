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

#include "slt/presets.hpp"

#include <fmt/format.h>

#include <charconv>

#include "slt/errors.hpp"

namespace slt {
namespace {

constexpr auto kRelu = Activation::Relu;
constexpr auto kGelu = Activation::Gelu;
constexpr auto kCos = SchedulerKind::Cosine;
constexpr auto kInvSqrt = SchedulerKind::InverseSqrt;

AblationPreset arch(int id, int enc, int dec, int embed, int ffn, int heads, double lr,
                    SchedulerKind sched, std::int64_t period = 17000) {
  // The architecture rows do not list regularization; the values below are
  // the ones row 13 reports for its base model.
  return {id, enc, dec, embed, ffn, heads, kRelu, lr, sched, period, 0.1, 0.001, 0.0};
}

AblationPreset regularized(int id, const AblationPreset& base, double dropout, double wd, double ls) {
  auto p = base;
  p.id = id;
  p.dropout = dropout;
  p.weight_decay = wd;
  p.label_smoothing = ls;
  return p;
}

AblationPreset grid(int id, int enc, int dec, int embed, int ffn, int heads, Activation act,
                    double dropout, double wd, double ls) {
  return {id, enc, dec, embed, ffn, heads, act, 1e-3, kCos, 17000, dropout, wd, ls};
}

std::vector<AblationPreset> build() {
  std::vector<AblationPreset> p;
  p.push_back(arch(1, 3, 3, 512, 2048, 8, 0.001, kInvSqrt));
  p.push_back(arch(2, 3, 3, 512, 2048, 8, 0.001, kCos));
  p.push_back(arch(3, 3, 3, 256, 1024, 4, 0.001, kCos));
  p.push_back(arch(4, 3, 3, 256, 1024, 4, 0.005, kCos));
  p.push_back(arch(5, 2, 2, 256, 1024, 4, 0.001, kCos));
  p.push_back(arch(6, 2, 2, 256, 1024, 4, 0.005, kCos));
  p.push_back(arch(7, 2, 2, 256, 512, 4, 0.001, kCos));
  p.push_back(arch(8, 4, 2, 256, 1024, 4, 0.001, kCos));
  p.push_back(arch(9, 4, 2, 256, 1024, 4, 0.005, kCos));
  p.push_back(arch(10, 6, 3, 512, 2048, 8, 0.001, kCos));
  p.push_back(arch(11, 6, 3, 512, 2048, 8, 0.001, kCos, 22000));
  p.push_back(arch(12, 6, 3, 256, 1024, 4, 0.001, kCos));

  const auto base1 = p[0], base7 = p[6], base12 = p[11];
  p.push_back(regularized(13, base1, 0.1, 0.001, 0.0));
  p.push_back(regularized(14, base1, 0.3, 0.1, 0.1));
  p.push_back(regularized(15, base7, 0.2, 0.01, 0.1));
  p.push_back(regularized(16, base7, 0.3, 0.1, 0.1));
  p.push_back(regularized(17, base12, 0.2, 0.01, 0.1));
  p.push_back(regularized(18, base12, 0.3, 0.1, 0.1));

  p.push_back(grid(19, 6, 3, 512, 2048, 8, kRelu, 0.3, 0.1, 0.1));
  p.push_back(grid(20, 6, 3, 512, 2048, 8, kGelu, 0.3, 0.1, 0.1));
  p.push_back(grid(21, 6, 3, 512, 2048, 8, kRelu, 0.3, 0.1, 0.2));
  p.push_back(grid(22, 6, 3, 512, 2048, 8, kGelu, 0.4, 0.1, 0.1));
  p.push_back(grid(23, 6, 3, 512, 2048, 8, kRelu, 0.3, 0.2, 0.1));
  p.push_back(grid(24, 6, 3, 512, 2048, 8, kGelu, 0.3, 0.2, 0.1));
  p.push_back(grid(25, 6, 3, 512, 2048, 8, kGelu, 0.4, 0.2, 0.2));

  p.push_back(grid(26, 6, 6, 256, 512, 4, kRelu, 0.3, 0.1, 0.1));
  p.push_back(grid(27, 6, 6, 256, 512, 4, kGelu, 0.3, 0.1, 0.1));
  p.push_back(grid(28, 6, 6, 256, 512, 4, kRelu, 0.4, 0.1, 0.1));
  p.push_back(grid(29, 6, 6, 256, 512, 4, kRelu, 0.3, 0.1, 0.2));
  p.push_back(grid(30, 6, 6, 256, 512, 4, kRelu, 0.3, 0.2, 0.1));

  p.push_back(grid(31, 6, 6, 256, 1024, 4, kRelu, 0.3, 0.1, 0.1));
  p.push_back(grid(32, 6, 6, 256, 1024, 4, kGelu, 0.3, 0.1, 0.1));
  p.push_back(grid(33, 6, 6, 256, 1024, 4, kGelu, 0.4, 0.1, 0.1));
  p.push_back(grid(34, 6, 6, 256, 1024, 4, kGelu, 0.3, 0.1, 0.2));
  p.push_back(grid(35, 6, 6, 256, 1024, 4, kGelu, 0.3, 0.2, 0.1));
  p.push_back(grid(36, 6, 6, 256, 1024, 4, kGelu, 0.3, 0.2, 0.2));
  return p;
}

int parse_id(std::string_view text) {
  int id = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), id);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InputError(fmt::format("unknown preset '{}'", text));
  }
  return id;
}

}  // namespace

RunConfig AblationPreset::apply(RunConfig base) const {
  base.model.encoder_layers = encoder_layers;
  base.model.decoder_layers = decoder_layers;
  base.model.embed_dim = embed_dim;
  base.model.ffn_dim = ffn_dim;
  base.model.attention_heads = attention_heads;
  base.model.activation = activation;
  base.model.dropout = dropout;
  base.schedule.lr_max = lr;
  base.schedule.kind = scheduler;
  base.schedule.period = restart_period;
  base.optim.weight_decay = weight_decay;
  base.label_smoothing = label_smoothing;
  return base;
}

const std::vector<AblationPreset>& ablation_presets() {
  static const std::vector<AblationPreset> presets = build();
  return presets;
}

const AblationPreset& find_preset(int id) {
  for (const auto& p : ablation_presets()) {
    if (p.id == id) return p;
  }
  throw InputError(fmt::format("unknown preset {} (valid: 1-36)", id));
}

RunConfig resolve_preset(std::string_view id, const RunConfig& base) {
  if (id == "baseline") return base;
  return find_preset(parse_id(id)).apply(base);
}

std::vector<std::string> expand_preset_ids(const std::vector<std::string>& specs) {
  std::vector<std::string> out;
  for (const auto& spec : specs) {
    if (spec == "baseline") {
      out.push_back(spec);
    } else if (spec == "all") {
      for (const auto& p : ablation_presets()) out.push_back(std::to_string(p.id));
    } else if (const auto dash = spec.find('-'); dash != std::string::npos && dash > 0) {
      const int lo = parse_id(std::string_view(spec).substr(0, dash));
      const int hi = parse_id(std::string_view(spec).substr(dash + 1));
      if (lo > hi) throw InputError(fmt::format("empty preset range '{}'", spec));
      for (int id = lo; id <= hi; ++id) out.push_back(std::to_string(find_preset(id).id));
    } else {
      out.push_back(std::to_string(find_preset(parse_id(spec)).id));
    }
  }
  return out;
}

}  // namespace slt
