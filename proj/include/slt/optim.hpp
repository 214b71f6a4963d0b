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
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slt/errors.hpp"
#include "slt/tensor.hpp"

namespace slt {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
  double weight_decay = 0.1;

  void validate() const;
};

/// Adam with decoupled weight decay:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   theta <- theta (1 - lr wd) - lr mhat / (sqrt(vhat) + eps)
/// State is kept per parameter in the order the parameters were registered.
template <typename Scalar>
class AdamW {
 public:
  using Param = std::pair<std::string, Tensor<Scalar>>;

  AdamW(AdamWConfig config, std::span<const Param> params) : config_(config) {
    config_.validate();
    for (const auto& [name, t] : params) {
      names_.push_back(name);
      first_.emplace_back(t.size(), Scalar(0));
      second_.emplace_back(t.size(), Scalar(0));
    }
  }

  /// Applies one update with learning rate `lr` using the gradients currently
  /// stored on `params`. A parameter without a gradient is treated as g = 0.
  void step(std::span<Param> params, double lr) {
    if (params.size() != names_.size()) {
      throw ShapeError("AdamW: expected " + std::to_string(names_.size()) + " parameters, got " +
                       std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& t = params[i].second;
      if (params[i].first != names_[i] || t.size() != first_[i].size()) {
        throw ShapeError("AdamW: parameter '" + params[i].first + "' does not match state for '" +
                         names_[i] + "'");
      }
      for (auto g : t.grad()) {
        if (!std::isfinite(static_cast<double>(g))) throw NonFiniteGradientError(params[i].first);
      }
    }
    ++steps_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    const auto decay = static_cast<Scalar>(1.0 - lr * config_.weight_decay);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& t = params[i].second;
      auto theta = t.data();
      auto grad = t.grad();
      auto& m = first_[i];
      auto& v = second_[i];
      for (std::size_t j = 0; j < theta.size(); ++j) {
        const Scalar g = grad.empty() ? Scalar(0) : grad[j];
        m[j] = static_cast<Scalar>(b1 * m[j] + (1.0 - b1) * g);
        v[j] = static_cast<Scalar>(b2 * v[j] + (1.0 - b2) * g * g);
        const double m_hat = m[j] / correction1;
        const double v_hat = v[j] / correction2;
        theta[j] = theta[j] * decay -
                   static_cast<Scalar>(lr * m_hat / (std::sqrt(v_hat) + config_.eps));
      }
    }
  }

  std::int64_t steps() const { return steps_; }
  const AdamWConfig& config() const { return config_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::vector<Scalar>>& first_moments() const { return first_; }
  const std::vector<std::vector<Scalar>>& second_moments() const { return second_; }

  /// Restores state saved from first_moments()/second_moments()/steps().
  void restore(std::int64_t steps, std::vector<std::vector<Scalar>> first,
               std::vector<std::vector<Scalar>> second) {
    if (first.size() != first_.size() || second.size() != second_.size()) {
      throw FormatError("AdamW: restored state has the wrong number of parameters");
    }
    for (std::size_t i = 0; i < first.size(); ++i) {
      if (first[i].size() != first_[i].size() || second[i].size() != second_[i].size()) {
        throw FormatError("AdamW: restored state for '" + names_[i] + "' has the wrong size");
      }
    }
    steps_ = steps;
    first_ = std::move(first);
    second_ = std::move(second);
  }

 private:
  AdamWConfig config_;
  std::vector<std::string> names_;
  std::vector<std::vector<Scalar>> first_;
  std::vector<std::vector<Scalar>> second_;
  std::int64_t steps_ = 0;
};

}  // namespace slt
