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

// Shared helpers for the unit tests: finite-difference gradient checks,
// random tensors and scratch directories.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <functional>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "slt/ops.hpp"
#include "slt/rng.hpp"
#include "slt/tensor.hpp"

namespace slt::testing {

inline Tensor<double> random_tensor(Shape shape, Rng& rng, double scale = 1.0, bool grad = true) {
  std::vector<double> values(numel(shape));
  for (auto& v : values) v = scale * rng.normal();
  return Tensor<double>(std::move(shape), std::move(values), grad);
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst;  // name of the input with the largest error
};

/// Compares tape gradients of `loss(inputs)` with central differences.
/// Round-off in the differences is ~1e-11, so norms under `floor` are
/// compared absolutely. Error per input is ||analytic - numeric|| / max(||analytic||, ||numeric||, floor).
inline GradCheck grad_check(std::vector<Tensor<double>> inputs,
                            const std::function<Tensor<double>(const std::vector<Tensor<double>>&)>& loss,
                            const std::vector<std::string>& names = {}, double h = 1e-5,
                            double floor = 1e-5) {
  for (auto& t : inputs) t.zero_grad();
  {
    Tape<double> tape;
    TapeScope<double> scope(tape);
    tape.backward(loss(inputs));
  }
  GradCheck result;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!inputs[i].requires_grad()) continue;
    auto values = inputs[i].data();
    std::vector<double> analytic(values.size(), 0.0);
    if (inputs[i].has_grad()) std::copy(inputs[i].grad().begin(), inputs[i].grad().end(), analytic.begin());
    double diff = 0.0, norm_a = 0.0, norm_n = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + h;
      const double up = loss(inputs).item();
      values[j] = saved - h;
      const double down = loss(inputs).item();
      values[j] = saved;
      const double numeric = (up - down) / (2 * h);
      diff += (analytic[j] - numeric) * (analytic[j] - numeric);
      norm_a += analytic[j] * analytic[j];
      norm_n += numeric * numeric;
    }
    const double rel = std::sqrt(diff) / std::max({std::sqrt(norm_a), std::sqrt(norm_n), floor});
    if (rel > result.max_rel_error || result.worst.empty()) {
      result.max_rel_error = std::max(result.max_rel_error, rel);
      result.worst = i < names.size() ? names[i] : "input " + std::to_string(i);
    }
  }
  return result;
}

/// sum(x * w) for a fixed random w, so every output element gets a distinct
/// upstream gradient.
inline Tensor<double> weighted_sum(const Tensor<double>& x, std::uint64_t seed) {
  Rng rng(seed);
  auto w = random_tensor(x.shape(), rng, 1.0, false);
  return sum(mul(x, w));
}

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    Rng rng(std::hash<std::string>{}(tag) ^ static_cast<std::uint64_t>(::getpid()));
    path_ = std::filesystem::temp_directory_path() /
            ("slt-" + tag + "-" + std::to_string(rng.below(1u << 30)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

/// Runs the slt binary through the shell; `args` is pasted verbatim.
inline CliResult run_cli(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const auto base = std::filesystem::temp_directory_path() /
                    ("slt-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  const auto out = base.string() + ".out", err = base.string() + ".err";
  const std::string command = "env -u SLT_SEED " + env + " " + SLT_CLI + " " + args + " > " + out + " 2> " + err;
  const int status = std::system(command.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text(out);
  r.err = read_text(err);
  std::filesystem::remove(out);
  std::filesystem::remove(err);
  return r;
}

}  // namespace slt::testing
