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

#include "slt/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "slt/errors.hpp"

namespace slt {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(key, fmt::format("cannot parse '{}' as a number", value));
  }
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

// Builds a field bound to a member reached through `access`.
template <typename T, typename Access>
Field numeric(const std::string& key, Access access) {
  return {key,
          [access](const RunConfig& c) { return fmt::format("{}", access(const_cast<RunConfig&>(c))); },
          [key, access](RunConfig& c, const std::string& v) { access(c) = parse_number<T>(key, v); }};
}

template <typename Access>
Field text(const std::string& key, Access access) {
  return {key, [access](const RunConfig& c) { return access(const_cast<RunConfig&>(c)); },
          [access](RunConfig& c, const std::string& v) { access(c) = v; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(numeric<int>("encoder_layers", [](RunConfig& c) -> int& { return c.model.encoder_layers; }));
    f.push_back(numeric<int>("decoder_layers", [](RunConfig& c) -> int& { return c.model.decoder_layers; }));
    f.push_back(numeric<int>("embed_dim", [](RunConfig& c) -> int& { return c.model.embed_dim; }));
    f.push_back(numeric<int>("ffn_dim", [](RunConfig& c) -> int& { return c.model.ffn_dim; }));
    f.push_back(numeric<int>("attention_heads", [](RunConfig& c) -> int& { return c.model.attention_heads; }));
    f.push_back({"activation", [](const RunConfig& c) { return to_string(c.model.activation); },
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.model.activation = parse_activation(v);
                   } catch (const InputError& e) {
                     throw ConfigError("activation", e.what());
                   }
                 }});
    f.push_back(numeric<double>("dropout", [](RunConfig& c) -> double& { return c.model.dropout; }));
    f.push_back(numeric<double>("attention_dropout", [](RunConfig& c) -> double& { return c.model.attention_dropout; }));
    f.push_back(numeric<double>("activation_dropout", [](RunConfig& c) -> double& { return c.model.activation_dropout; }));
    f.push_back(numeric<int>("feature_dim", [](RunConfig& c) -> int& { return c.model.feature_dim; }));
    f.push_back(numeric<int>("vocab_size", [](RunConfig& c) -> int& { return c.model.vocab_size; }));
    f.push_back(numeric<int>("max_positions", [](RunConfig& c) -> int& { return c.model.max_positions; }));

    f.push_back(numeric<int>("max_epochs", [](RunConfig& c) -> int& { return c.train.max_epochs; }));
    f.push_back(numeric<std::int64_t>("max_steps", [](RunConfig& c) -> std::int64_t& { return c.train.max_steps; }));
    f.push_back(numeric<int>("batch_size", [](RunConfig& c) -> int& { return c.train.batch_size; }));
    f.push_back(numeric<std::uint64_t>("seed", [](RunConfig& c) -> std::uint64_t& { return c.train.seed; }));
    f.push_back(numeric<std::int64_t>("save_interval", [](RunConfig& c) -> std::int64_t& { return c.train.save_interval; }));
    f.push_back(numeric<std::int64_t>("validate_interval", [](RunConfig& c) -> std::int64_t& { return c.train.validate_interval; }));
    f.push_back(numeric<std::int64_t>("log_interval", [](RunConfig& c) -> std::int64_t& { return c.train.log_interval; }));
    f.push_back(numeric<double>("clip_norm", [](RunConfig& c) -> double& { return c.train.clip_norm; }));
    f.push_back(numeric<int>("bucket_width", [](RunConfig& c) -> int& { return c.train.bucket_width; }));
    f.push_back(numeric<int>("bpe_vocab_size", [](RunConfig& c) -> int& { return c.train.bpe_vocab_size; }));
    f.push_back(numeric<int>("threads", [](RunConfig& c) -> int& { return c.train.threads; }));

    f.push_back({"scheduler", [](const RunConfig& c) { return to_string(c.schedule.kind); },
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.schedule.kind = parse_scheduler(v);
                   } catch (const InputError& e) {
                     throw ConfigError("scheduler", e.what());
                   }
                 }});
    f.push_back(numeric<double>("lr", [](RunConfig& c) -> double& { return c.schedule.lr_max; }));
    f.push_back(numeric<double>("lr_min", [](RunConfig& c) -> double& { return c.schedule.lr_min; }));
    f.push_back(numeric<std::int64_t>("warmup_steps", [](RunConfig& c) -> std::int64_t& { return c.schedule.warmup_steps; }));
    f.push_back(numeric<std::int64_t>("restart_period", [](RunConfig& c) -> std::int64_t& { return c.schedule.period; }));
    f.push_back(numeric<double>("warmup_init_lr", [](RunConfig& c) -> double& { return c.schedule.warmup_init_lr; }));

    f.push_back(numeric<double>("adam_beta1", [](RunConfig& c) -> double& { return c.optim.beta1; }));
    f.push_back(numeric<double>("adam_beta2", [](RunConfig& c) -> double& { return c.optim.beta2; }));
    f.push_back(numeric<double>("adam_eps", [](RunConfig& c) -> double& { return c.optim.eps; }));
    f.push_back(numeric<double>("weight_decay", [](RunConfig& c) -> double& { return c.optim.weight_decay; }));
    f.push_back(numeric<double>("label_smoothing", [](RunConfig& c) -> double& { return c.label_smoothing; }));

    f.push_back(numeric<int>("beam_size", [](RunConfig& c) -> int& { return c.decode.beam_size; }));
    f.push_back(numeric<int>("max_len", [](RunConfig& c) -> int& { return c.decode.max_len; }));
    f.push_back(numeric<double>("length_penalty", [](RunConfig& c) -> double& { return c.decode.length_penalty; }));
    f.push_back(numeric<int>("feature_stride", [](RunConfig& c) -> int& { return c.decode.feature_stride; }));

    f.push_back(text("train_manifest", [](RunConfig& c) -> std::string& { return c.paths.train_manifest; }));
    f.push_back(text("valid_manifest", [](RunConfig& c) -> std::string& { return c.paths.valid_manifest; }));
    f.push_back(text("test_manifest", [](RunConfig& c) -> std::string& { return c.paths.test_manifest; }));
    f.push_back(text("vocab", [](RunConfig& c) -> std::string& { return c.paths.vocab; }));
    f.push_back(text("casing", [](RunConfig& c) -> std::string& { return c.paths.casing; }));
    f.push_back(text("exclusions", [](RunConfig& c) -> std::string& { return c.paths.exclusions; }));
    f.push_back(text("output_dir", [](RunConfig& c) -> std::string& { return c.paths.output_dir; }));
    return f;
  }();
  return table;
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  schedule.validate();
  optim.validate();
  loss().validate();
  decode.validate();
  if (train.max_epochs < 1) throw ConfigError("max_epochs", "must be >= 1");
  if (train.max_steps < 1) throw ConfigError("max_steps", "must be >= 1");
  if (train.batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (train.save_interval < 0) throw ConfigError("save_interval", "must be >= 0");
  if (train.validate_interval < 0) throw ConfigError("validate_interval", "must be >= 0");
  if (train.log_interval < 1) throw ConfigError("log_interval", "must be >= 1");
  if (!(train.clip_norm >= 0.0)) throw ConfigError("clip_norm", "must be >= 0");
  if (train.bucket_width < 1) throw ConfigError("bucket_width", "must be >= 1");
  if (train.bpe_vocab_size <= kNumSpecialIds) {
    throw ConfigError("bpe_vocab_size", fmt::format("must exceed {}", kNumSpecialIds));
  }
  if (train.threads < 1) throw ConfigError("threads", "must be >= 1");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw ConfigError("label_smoothing", fmt::format("must be in [0, 1), got {}", label_smoothing));
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(*this, value);
      return;
    }
  }
  throw ConfigError(key, "unknown key");
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

RunConfig parse_run_config(std::string_view text, RunConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw FormatError(fmt::format("config line {}: expected 'key = value', got '{}'", number, stripped));
    }
    base.set(trim(std::string_view(stripped).substr(0, eq)),
             trim(std::string_view(stripped).substr(eq + 1)));
  }
  return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), std::move(base));
}

std::string format_run_config(const RunConfig& config) {
  std::string out;
  for (const auto& [key, value] : config.entries()) {
    out += value.empty() ? fmt::format("{} =\n", key) : fmt::format("{} = {}\n", key, value);
  }
  return out;
}

void apply_overrides(RunConfig& config, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError(o, "override must look like key=value");
    config.set(trim(std::string_view(o).substr(0, eq)), trim(std::string_view(o).substr(eq + 1)));
  }
}

void apply_environment(RunConfig& config) {
  if (const char* seed = std::getenv("SLT_SEED"); seed != nullptr && *seed != '\0') {
    config.set("seed", seed);
  }
}

}  // namespace slt
