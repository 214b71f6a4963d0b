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

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "slt/ops.hpp"
#include "slt/tokens.hpp"

namespace slt {

struct LossConfig {
  double epsilon = 0.1;  // smoothing mass
  int num_classes = 7000;
  int pad_id = kPadId;

  void validate() const;
};

template <typename Scalar>
struct LossResult {
  Tensor<Scalar> loss;     // scalar, mean over counted tokens
  std::size_t tokens = 0;  // non-pad targets
};

/// Label-smoothed cross-entropy over log-probabilities [B, T, N]. The smoothed
/// target puts 1 - eps + eps/N on the reference class and eps/N elsewhere:
///   loss_t = (1 - eps) * -logp[target] + (eps / N) * sum_j -logp[j]
/// Positions whose target is the pad id are skipped; the result is the mean
/// over the remaining tokens.
template <typename Scalar>
LossResult<Scalar> smoothed_ce(const Tensor<Scalar>& logprobs, const TokenMatrix& targets,
                               const LossConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.num_classes);
  if (logprobs.rank() != 3 || logprobs.dim(2) != n ||
      logprobs.dim(0) != static_cast<std::size_t>(targets.rows()) ||
      logprobs.dim(1) != static_cast<std::size_t>(targets.cols())) {
    throw ShapeError("smoothed_ce: log-probabilities " + to_string(logprobs.shape()) +
                     " do not match targets [" + std::to_string(targets.rows()) + "x" +
                     std::to_string(targets.cols()) + "] with " + std::to_string(n) +
                     " classes");
  }
  const auto rows = static_cast<std::size_t>(targets.size());
  const double eps = cfg.epsilon;
  const double uniform_weight = eps / static_cast<double>(n);
  auto lp = logprobs.data();
  double total = 0.0;
  std::size_t tokens = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const int target = targets.data()[r];
    if (target < 0 || static_cast<std::size_t>(target) >= n) {
      throw InputError("smoothed_ce: target id " + std::to_string(target) + " outside [0, " +
                       std::to_string(n) + ")");
    }
    if (target == cfg.pad_id) continue;
    const Scalar* row = lp.data() + r * n;
    double row_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) row_sum += static_cast<double>(row[j]);
    total += (1.0 - eps) * -static_cast<double>(row[target]) + uniform_weight * -row_sum;
    ++tokens;
  }
  const double mean_loss = tokens == 0 ? 0.0 : total / static_cast<double>(tokens);
  auto out = Tensor<Scalar>::scalar(static_cast<Scalar>(mean_loss));
  if (auto* tape = detail::recording_tape<Scalar>(logprobs)) {
    out.set_requires_grad(true);
    tape->record(out, [logprobs, targets, out, cfg, rows, n, tokens, eps,
                       uniform_weight]() mutable {
      if (tokens == 0) return;
      const double g = static_cast<double>(out.node()->grad[0]) / static_cast<double>(tokens);
      const auto spread = static_cast<Scalar>(-uniform_weight * g);
      const auto hit = static_cast<Scalar>(-(1.0 - eps) * g);
      auto gx = logprobs.mutable_grad();
      for (std::size_t r = 0; r < rows; ++r) {
        const int target = targets.data()[r];
        if (target == cfg.pad_id) continue;
        Scalar* row = gx.data() + r * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += spread;
        row[target] += hit;
      }
    });
  }
  return {out, tokens};
}

}  // namespace slt
