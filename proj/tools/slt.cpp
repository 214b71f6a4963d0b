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

// Command-line entry point: train, translate, evaluate, ablate, gen-synth,
// train-vocab. Data goes to stdout, everything else to stderr.
// Exit codes: 0 ok, 1 bad input or configuration, 2 internal error.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "slt/config.hpp"
#include "slt/errors.hpp"
#include "slt/inference.hpp"
#include "slt/pipeline.hpp"
#include "slt/presets.hpp"

namespace fs = std::filesystem;

namespace {

struct ConfigFlags {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string data;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "key = value config file");
    cmd->add_option("--set", overrides, "override a config field (key=value), repeatable");
  }

  slt::RunConfig resolve() const {
    slt::RunConfig config;
    if (!config_file.empty()) config = slt::load_run_config(config_file);
    slt::apply_overrides(config, overrides);
    slt::apply_environment(config);
    return config;
  }
};

int cmd_train(const ConfigFlags& flags, std::int64_t max_steps, const std::string& output_dir,
              const std::string& resume, bool train_vocab) {
  auto config = flags.resolve();
  if (max_steps > 0) config.train.max_steps = max_steps;
  if (!output_dir.empty()) config.paths.output_dir = output_dir;
  config.validate();
  if (!flags.data.empty()) slt::use_data(config, flags.data, fs::path(config.paths.output_dir) / "synth");
  const auto summary = slt::run_training(config, {resume, train_vocab}, std::cerr);
  std::cerr << fmt::format("done: {} steps, final loss {:.6f}, {:.1f}s\n", summary.state.global_step,
                           summary.final_loss, summary.wall_clock_s);
  return 0;
}

int cmd_translate(const std::string& checkpoint, const std::vector<std::string>& features,
                  const std::string& manifest, int beam, bool use_greedy, int max_len,
                  const std::string& vocab, const std::string& casing, const std::string& output,
                  int threads) {
  const auto model = slt::load_model(checkpoint, vocab, casing);
  auto decode = model.config.decode;
  if (beam > 0) decode.beam_size = beam;
  if (max_len > 0) decode.max_len = max_len;

  std::vector<slt::FeatureSequence> inputs;
  if (!manifest.empty()) {
    for (const auto& record : slt::load_manifest(manifest).records) {
      inputs.push_back(slt::load_features(record.features));
    }
  }
  for (const auto& path : features) inputs.push_back(slt::load_features(path));
  if (inputs.empty()) throw slt::InputError("nothing to translate: pass --features or --manifest");
  for (const auto& f : inputs) {
    if (f.dim() != static_cast<std::size_t>(model.config.model.feature_dim)) {
      throw slt::InputError(fmt::format("feature dim {} does not match the checkpoint's {}", f.dim(),
                                        model.config.model.feature_dim));
    }
  }
  std::vector<const slt::FeatureSequence*> items;
  for (const auto& f : inputs) items.push_back(&f);
  const auto results = slt::translate_all(model.params, model.config.model, items, decode, use_greedy, threads);

  std::ostringstream text;
  for (const auto& r : results) text << slt::postprocess(r.tokens, model.vocab, model.casing) << '\n';
  if (output.empty()) {
    std::cout << text.str() << std::flush;
  } else {
    std::ofstream out(output);
    if (!out || !(out << text.str())) throw slt::IoError("cannot write " + output);
  }
  return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& manifest,
                 const std::string& exclusions, const std::string& hypotheses, int beam,
                 bool references, int threads, const std::string& vocab, const std::string& casing) {
  const auto model = slt::load_model(checkpoint, vocab, casing);
  auto decode = model.config.decode;
  if (beam > 0) decode.beam_size = beam;
  const auto data = slt::load_dataset(slt::load_manifest(manifest), model.vocab,
                                      static_cast<std::size_t>(model.config.model.feature_dim));
  const auto excl = slt::ExclusionList::load(exclusions.empty() ? slt::default_exclusion_list_path()
                                                                : fs::path(exclusions));
  const auto result = slt::evaluate_split(model.params, model.config.model, data, model.vocab,
                                          model.casing, decode, excl, threads, references);
  if (!hypotheses.empty()) slt::write_hypotheses(hypotheses, result);
  if (result.rbleu.warning) std::cerr << "warning: " << result.rbleu.warning_message << '\n';
  std::cerr << fmt::format("exact match {:.4f} over {} sentences\n", result.exact_match,
                           result.ids.size());
  std::cout << slt::report_header() << '\n' << slt::report_row(result.bleu, result.rbleu) << '\n';
  return 0;
}

int cmd_ablate(const ConfigFlags& flags, std::vector<std::string> ids, bool dry_run,
               std::int64_t steps, const std::string& output_dir) {
  const auto base = flags.resolve();
  if (ids.empty()) ids = {"19-36"};
  const auto expanded = slt::expand_preset_ids(ids);
  if (dry_run) {
    std::ostringstream text;
    for (const auto& id : expanded) {
      const auto config = slt::resolve_preset(id, base);
      config.validate();
      text << "# preset " << id << '\n' << slt::format_run_config(config) << '\n';
    }
    std::cout << text.str();
    return 0;
  }
  auto config = base;
  slt::AblationOptions options;
  options.presets = expanded;
  options.steps = steps;
  options.output_dir = output_dir;
  if (config.paths.train_manifest.empty() || !flags.data.empty()) {
    slt::use_data(config, flags.data.empty() ? "synth" : flags.data, options.output_dir / "synth");
  }
  std::ostringstream table;
  const int failures = slt::run_ablation(config, options, table, std::cerr);
  std::cout << table.str();
  if (failures > 0) {
    std::cerr << failures << " preset(s) failed\n";
    return 2;
  }
  return 0;
}

int cmd_gen_synth(const slt::SyntheticConfig& config, const std::string& out) {
  const auto files = slt::write_synthetic(slt::synthesize(config), out);
  std::cerr << fmt::format("wrote {} / {} / {} items under {}\n", config.train_items,
                           config.valid_items, config.test_items, out);
  std::cout << files.train_manifest.string() << '\n'
            << files.valid_manifest.string() << '\n'
            << files.test_manifest.string() << '\n';
  return 0;
}

int cmd_train_vocab(const std::string& manifest, std::size_t size, const std::string& out,
                    const std::string& casing_out) {
  std::vector<std::string> transcripts;
  for (const auto& r : slt::load_manifest(manifest).records) transcripts.push_back(r.transcript);
  const auto vocab = slt::Vocabulary::train(transcripts, size);
  vocab.save(out);
  if (!casing_out.empty()) slt::CasingModel::learn(transcripts).save(casing_out);
  std::cerr << fmt::format("vocabulary: {} entries, {} merges\n", vocab.size(), vocab.merges().size());
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Gloss-free sign language translation"};
  app.require_subcommand(1);

  ConfigFlags train_flags;
  std::int64_t max_steps = 0;
  std::string train_out, resume;
  bool train_vocab = false;
  auto* train = app.add_subcommand("train", "train a model");
  train_flags.attach(train);
  train->add_option("--data", train_flags.data, "'synth' or a directory with train/valid/test.tsv");
  train->add_option("--max-steps", max_steps, "override max_steps");
  train->add_option("--output-dir", train_out, "override output_dir");
  train->add_option("--resume", resume, "continue from a checkpoint");
  train->add_flag("--train-vocab", train_vocab, "build the vocabulary from the training split");

  std::string checkpoint, manifest, vocab, casing, output;
  std::vector<std::string> features;
  int beam = 0, max_len = 0, threads = 1;
  bool use_greedy = false;
  auto* translate = app.add_subcommand("translate", "translate feature files");
  translate->add_option("--checkpoint", checkpoint)->required();
  translate->add_option("--features", features, "SLTF feature files");
  translate->add_option("--manifest", manifest, "manifest whose items to translate");
  translate->add_option("--beam", beam, "beam size (default: from checkpoint)");
  translate->add_flag("--greedy", use_greedy, "argmax decoding");
  translate->add_option("--max-len", max_len, "cap on generated tokens");
  translate->add_option("--vocab", vocab);
  translate->add_option("--casing", casing);
  translate->add_option("--output", output, "write here instead of stdout");
  translate->add_option("--threads", threads);

  std::string eval_manifest, exclusions, hypotheses;
  bool references = false;
  auto* evaluate = app.add_subcommand("evaluate", "score a split");
  evaluate->add_option("--checkpoint", checkpoint)->required();
  evaluate->add_option("--manifest", eval_manifest)->required();
  evaluate->add_option("--exclusions", exclusions, "rBLEU word list (default: shipped list)");
  evaluate->add_option("--hypotheses", hypotheses, "write id/hypothesis/reference TSV");
  evaluate->add_option("--beam", beam);
  evaluate->add_option("--threads", threads);
  evaluate->add_option("--vocab", vocab);
  evaluate->add_option("--casing", casing);
  evaluate->add_flag("--references-as-hypotheses", references,
                     "score references against themselves through the pipeline");

  ConfigFlags ablate_flags;
  std::vector<std::string> ids;
  bool dry_run = false;
  std::int64_t ablate_steps = 3000;
  std::string ablate_out = "runs/ablate";
  auto* ablate = app.add_subcommand("ablate", "run ablation presets");
  ablate_flags.attach(ablate);
  ablate->add_option("presets", ids, "ids, ranges (19-36), 'baseline' or 'all'; default 19-36");
  ablate->add_option("--data", ablate_flags.data, "'synth' (default) or a data directory");
  ablate->add_flag("--dry-run", dry_run, "print resolved configs only");
  ablate->add_option("--steps", ablate_steps, "training steps per preset");
  ablate->add_option("--output-dir", ablate_out);

  slt::SyntheticConfig synth;
  std::string synth_out;
  auto* gen = app.add_subcommand("gen-synth", "write a synthetic dataset");
  gen->add_option("--out", synth_out)->required();
  gen->add_option("--train", synth.train_items);
  gen->add_option("--valid", synth.valid_items);
  gen->add_option("--test", synth.test_items);
  gen->add_option("--words", synth.vocab_words);
  gen->add_option("--frames-per-word", synth.frames_per_word);
  gen->add_option("--dim", synth.dim);
  gen->add_option("--noise", synth.noise);
  gen->add_option("--seed", synth.seed);

  std::string vocab_manifest, vocab_out, casing_out;
  std::size_t vocab_size = 7000;
  auto* tv = app.add_subcommand("train-vocab", "learn a BPE vocabulary");
  tv->add_option("--manifest", vocab_manifest)->required();
  tv->add_option("--size", vocab_size);
  tv->add_option("--out", vocab_out)->required();
  tv->add_option("--casing", casing_out, "also write a truecasing model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*train) return cmd_train(train_flags, max_steps, train_out, resume, train_vocab);
  if (*translate) {
    return cmd_translate(checkpoint, features, manifest, beam, use_greedy, max_len, vocab, casing,
                         output, threads);
  }
  if (*evaluate) {
    return cmd_evaluate(checkpoint, eval_manifest, exclusions, hypotheses, beam, references, threads,
                        vocab, casing);
  }
  if (*ablate) return cmd_ablate(ablate_flags, ids, dry_run, ablate_steps, ablate_out);
  if (*gen) return cmd_gen_synth(synth, synth_out);
  return cmd_train_vocab(vocab_manifest, vocab_size, vocab_out, casing_out);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const slt::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
}
