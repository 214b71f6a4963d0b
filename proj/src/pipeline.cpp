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

#include "slt/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>

#include "slt/errors.hpp"
#include "slt/presets.hpp"

namespace slt {
namespace fs = std::filesystem;
namespace {

constexpr const char* kStatePrefix = "state.";

template <typename T>
T state_value(const Checkpoint& ckpt, const std::string& key) {
  const auto* text = ckpt.find_config(kStatePrefix + key);
  if (text == nullptr) throw FormatError("checkpoint lacks '" + std::string(kStatePrefix) + key + "'");
  T out{};
  const auto [ptr, ec] = std::from_chars(text->data(), text->data() + text->size(), out);
  if (ec != std::errc() || ptr != text->data() + text->size()) {
    throw FormatError("checkpoint value for '" + key + "' is malformed: " + *text);
  }
  return out;
}

std::vector<float> tensor_values(const Checkpoint& ckpt, const std::string& name, const Shape& shape) {
  const auto* t = ckpt.find_tensor(name);
  if (t == nullptr) throw FormatError("checkpoint lacks tensor '" + name + "'");
  if (t->shape != shape) {
    throw FormatError(fmt::format("checkpoint tensor '{}' has shape {}, expected {}", name,
                                  to_string(t->shape), to_string(shape)));
  }
  return t->values;
}

void save(const fs::path& path, const RunConfig& config, const TrainingSession& session,
          std::ostream& log) {
  save_checkpoint(path, make_checkpoint(config, session));
  log << "saved " << path.string() << '\n';
}

std::string absolute_string(const fs::path& p) { return fs::absolute(p).lexically_normal().string(); }

ExclusionList load_exclusions(const RunConfig& config) {
  return ExclusionList::load(config.paths.exclusions.empty() ? default_exclusion_list_path()
                                                             : fs::path(config.paths.exclusions));
}

}  // namespace

Checkpoint make_checkpoint(const RunConfig& config, const TrainingSession& session) {
  Checkpoint ckpt;
  ckpt.config = config.entries();
  const auto& s = session.state;
  auto put = [&](const std::string& key, const std::string& value) {
    ckpt.config.emplace_back(kStatePrefix + key, value);
  };
  put("global_step", std::to_string(s.global_step));
  put("epoch", std::to_string(s.epoch));
  put("batch_in_epoch", std::to_string(s.batch_in_epoch));
  put("best_rbleu", fmt::format("{}", s.best_rbleu));
  put("best_bleu", fmt::format("{}", s.best_bleu));
  put("adam_steps", std::to_string(session.optim.steps()));

  const auto& named = session.named();
  for (const auto& [name, t] : named) ckpt.tensors.push_back(to_named_array(name, t));
  const auto& m = session.optim.first_moments();
  const auto& v = session.optim.second_moments();
  for (std::size_t i = 0; i < named.size(); ++i) {
    const auto& shape = named[i].second.shape();
    ckpt.tensors.push_back({"adam.m." + named[i].first, shape, m[i]});
    ckpt.tensors.push_back({"adam.v." + named[i].first, shape, v[i]});
  }
  return ckpt;
}

RunConfig checkpoint_config(const Checkpoint& checkpoint) {
  RunConfig config;
  for (const auto& [key, value] : checkpoint.config) {
    if (key.starts_with(kStatePrefix)) continue;
    config.set(key, value);
  }
  config.validate();
  return config;
}

ModelParams<float> checkpoint_params(const Checkpoint& checkpoint, const ModelConfig& config) {
  auto params = allocate_params<float>(config);
  for (auto& [name, t] : params.named()) {
    const auto values = tensor_values(checkpoint, name, t.shape());
    std::copy(values.begin(), values.end(), t.data().begin());
  }
  return params;
}

void restore_session(const Checkpoint& checkpoint, TrainingSession& session) {
  const auto& named = session.named();
  std::vector<std::vector<float>> m, v;
  for (const auto& [name, t] : named) {
    m.push_back(tensor_values(checkpoint, "adam.m." + name, t.shape()));
    v.push_back(tensor_values(checkpoint, "adam.v." + name, t.shape()));
  }
  session.optim.restore(state_value<std::int64_t>(checkpoint, "adam_steps"), std::move(m), std::move(v));
  auto& s = session.state;
  s.global_step = state_value<std::int64_t>(checkpoint, "global_step");
  s.epoch = state_value<std::int64_t>(checkpoint, "epoch");
  s.batch_in_epoch = state_value<std::int64_t>(checkpoint, "batch_in_epoch");
  s.best_rbleu = state_value<double>(checkpoint, "best_rbleu");
  s.best_bleu = state_value<double>(checkpoint, "best_bleu");
}

LoadedModel load_model(const fs::path& checkpoint, const std::string& vocab_path,
                       const std::string& casing_path) {
  const auto ckpt = load_checkpoint(checkpoint);
  auto config = checkpoint_config(ckpt);
  auto params = checkpoint_params(ckpt, config.model);
  const auto vocab_file = vocab_path.empty() ? config.paths.vocab : vocab_path;
  if (vocab_file.empty()) throw ConfigError("vocab", "checkpoint names no vocabulary; pass one");
  auto vocab = Vocabulary::load(vocab_file);
  if (vocab.size() != static_cast<std::size_t>(config.model.vocab_size)) {
    throw InputError(fmt::format("vocabulary {} has {} entries but the checkpoint expects {}",
                                 vocab_file, vocab.size(), config.model.vocab_size));
  }
  const auto casing_file = casing_path.empty() ? config.paths.casing : casing_path;
  auto casing = casing_file.empty() ? CasingModel{} : CasingModel::load(casing_file);
  return {std::move(config), std::move(params), std::move(vocab), std::move(casing)};
}

void use_data(RunConfig& config, const std::string& data, const fs::path& synth_dir) {
  fs::path dir = data;
  if (data == "synth") {
    dir = synth_dir;
    if (!fs::exists(dir / "train.tsv")) write_synthetic(synthesize(SyntheticConfig{}), dir);
  }
  if (!fs::exists(dir / "train.tsv")) throw IoError("no train.tsv in " + dir.string());
  config.paths.train_manifest = absolute_string(dir / "train.tsv");
  config.paths.valid_manifest = fs::exists(dir / "valid.tsv") ? absolute_string(dir / "valid.tsv") : "";
  config.paths.test_manifest = fs::exists(dir / "test.tsv") ? absolute_string(dir / "test.tsv") : "";
}

TrainingSummary run_training(RunConfig config, const TrainOptions& options, std::ostream& log) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  if (config.paths.train_manifest.empty()) throw ConfigError("train_manifest", "required for training");
  const fs::path out = config.paths.output_dir;
  fs::create_directories(out);

  const auto train_manifest = load_manifest(config.paths.train_manifest);
  std::optional<Manifest> valid_manifest;
  if (!config.paths.valid_manifest.empty()) valid_manifest = load_manifest(config.paths.valid_manifest);
  std::vector<std::string> transcripts;
  for (const auto& r : train_manifest.records) transcripts.push_back(r.transcript);

  const bool have_vocab = !config.paths.vocab.empty() && !options.train_vocab;
  std::optional<Vocabulary> vocab;
  if (have_vocab) {
    vocab = Vocabulary::load(config.paths.vocab);
  } else {
    vocab = Vocabulary::train(transcripts, static_cast<std::size_t>(config.train.bpe_vocab_size));
    const auto path = out / "vocab.txt";
    vocab->save(path);
    config.paths.vocab = absolute_string(path);
    log << fmt::format("trained vocabulary: {} entries, {} merges -> {}\n", vocab->size(),
                       vocab->merges().size(), path.string());
  }
  CasingModel casing;
  if (!config.paths.casing.empty()) {
    casing = CasingModel::load(config.paths.casing);
  } else {
    casing = CasingModel::learn(transcripts);
    const auto path = out / "casing.txt";
    casing.save(path);
    config.paths.casing = absolute_string(path);
  }

  config.model.vocab_size = static_cast<int>(vocab->size());
  const auto train = load_dataset(train_manifest, *vocab);
  if (train.size() == 0) throw InputError("training manifest is empty");
  const auto feature_dim = train.examples.front().features.dim();
  config.model.feature_dim = static_cast<int>(feature_dim);
  std::optional<Dataset> valid;
  if (valid_manifest) valid = load_dataset(*valid_manifest, *vocab, feature_dim);
  config.validate();

  std::optional<Checkpoint> resume;
  if (!options.resume.empty()) {
    resume = load_checkpoint(options.resume);
    const auto saved = checkpoint_config(*resume);
    if (!(saved.model == config.model)) {
      throw ConfigError("resume", "checkpoint model configuration differs from the run configuration");
    }
    if (saved.train.seed != config.train.seed || saved.train.batch_size != config.train.batch_size) {
      throw ConfigError("resume", "checkpoint seed or batch_size differs from the run configuration");
    }
  }
  TrainingSession session(config.model,
                          resume ? checkpoint_params(*resume, config.model)
                                 : init_params<float>(config.model, config.train.seed),
                          config.optim, config.loss(), config.schedule, config.train.seed,
                          config.train.clip_norm);
  if (resume) {
    restore_session(*resume, session);
    log << fmt::format("resumed from {} at step {}\n", options.resume, session.state.global_step);
  }

  const auto log_path = out / "train.log";
  const bool fresh_log = options.resume.empty() || !fs::exists(log_path);
  std::ofstream train_log(log_path, fresh_log ? std::ios::trunc : std::ios::app);
  if (!train_log) throw IoError("cannot write " + log_path.string());
  if (fresh_log) train_log << step_log_header() << '\n';
  log << step_log_header() << '\n';

  TrainingSummary summary;
  const auto exclusions = valid ? load_exclusions(config) : ExclusionList{};
  std::int64_t last_validated = -1;
  auto validate = [&] {
    if (!valid || last_validated == session.state.global_step) return;
    last_validated = session.state.global_step;
    auto result = evaluate_split(session.params, config.model, *valid, *vocab, casing, config.decode,
                                 exclusions, config.train.threads);
    log << fmt::format("valid step {}: {} | exact {:.3f}\n", session.state.global_step,
                       report_row(result.bleu, result.rbleu), result.exact_match);
    auto& s = session.state;
    const bool best_r = result.rbleu.score() > s.best_rbleu;
    const bool best_b = result.bleu.score() > s.best_bleu;
    if (best_r) s.best_rbleu = result.rbleu.score();
    if (best_b) s.best_bleu = result.bleu.score();
    if (best_r || !summary.best) summary.best = result;
    if (best_r) save(out / "checkpoint_best.bin", config, session, log);
    if (best_b) save(out / "checkpoint_best_bleu.bin", config, session, log);
    summary.last = std::move(result);
  };

  const auto& t = config.train;
  auto on_step = [&](const StepRecord& record) {
    summary.loss_trace.push_back(record.loss);
    summary.lr_trace.push_back(record.lr);
    summary.final_loss = record.loss;
    if (record.step % t.log_interval == 0 || record.step == t.max_steps) {
      const auto line = format_step(record);
      train_log << line << '\n';
      log << line << '\n';
    }
    if (t.validate_interval > 0 && record.step % t.validate_interval == 0) validate();
    if (t.save_interval > 0 && record.step % t.save_interval == 0) {
      const auto path = out / fmt::format("checkpoint_{}.bin", record.step);
      save(path, config, session, log);
      summary.checkpoints.push_back(path);
    }
    return true;
  };

  while (session.state.global_step < t.max_steps && session.state.epoch < t.max_epochs) {
    const auto stats = train_epoch(session, train, static_cast<std::size_t>(t.batch_size),
                                   t.max_steps, on_step, static_cast<std::size_t>(t.bucket_width));
    if (stats.completed && t.validate_interval == 0) validate();
  }
  validate();

  summary.last_checkpoint = out / "checkpoint_last.bin";
  save(summary.last_checkpoint, config, session, log);
  summary.checkpoints.push_back(summary.last_checkpoint);
  summary.state = session.state;
  summary.config = config;
  summary.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return summary;
}

std::string result_header() {
  return "preset\tsplit\trBLEU\tBLEU-1\tBLEU-2\tBLEU-3\tBLEU\twall_clock_s\tsteps";
}

std::string format_result(const ResultRow& row) {
  return fmt::format("{}\t{}\t{}\t{:.1f}\t{}", row.preset, row.split, report_row(row.bleu, row.rbleu),
                     row.wall_clock_s, row.steps);
}

int run_ablation(const RunConfig& base, const AblationOptions& options, std::ostream& table,
                 std::ostream& log) {
  if (options.steps < 1) throw ConfigError("steps", "must be >= 1");
  fs::create_directories(options.output_dir);
  const auto results_path = options.output_dir / "results.tsv";
  const bool fresh = !fs::exists(results_path);
  std::ofstream results(results_path, std::ios::app);
  if (!results) throw IoError("cannot write " + results_path.string());
  if (fresh) results << result_header() << '\n';

  std::vector<ResultRow> rows;
  int failures = 0;
  for (const auto& id : options.presets) {
    try {
      auto config = resolve_preset(id, base);
      config.train.max_steps = options.steps;
      config.paths.output_dir = (options.output_dir / ("preset_" + id)).string();
      log << "== preset " << id << '\n';
      const auto summary = run_training(config, {}, log);
      if (!summary.best) throw ConfigError("valid_manifest", "ablation needs a validation split");
      ResultRow row{id, "valid", summary.best->bleu, summary.best->rbleu, summary.wall_clock_s,
                    summary.state.global_step};
      results << format_result(row) << '\n' << std::flush;
      rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      ++failures;
      log << fmt::format("preset {} failed: {}\n", id, e.what());
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return a.rbleu.score() > b.rbleu.score();
  });
  table << result_header() << '\n';
  for (const auto& row : rows) table << format_result(row) << '\n';
  return failures;
}

}  // namespace slt
