// Copyright 2026 The sedkit authors
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

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sedkit/config.hpp"

namespace fs = std::filesystem;
using namespace sedkit;

namespace {

struct Override {
  std::string key, value;
};

RunConfig build_config(const std::string& config_path, const std::vector<Override>& overrides) {
  RunConfig cfg = config_path.empty() ? default_run_config() : load_run_config(config_path);
  for (const auto& o : overrides) apply_override(cfg, o.key, o.value);
  cfg.validate();
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError(msg("cannot write '", path, "'"));
  out << text;
}

int cmd_generate(const std::string& kind, const std::string& out_dir, uint64_t seed,
                 const std::string& config_path, const std::vector<Override>& overrides) {
  RunConfig cfg = build_config(config_path, overrides);
  cfg.corpus.kind = corpus_kind_from_name(kind);
  const Corpus corpus = make_corpus(cfg.corpus, seed);
  fs::create_directories(out_dir);
  write_corpus(corpus, out_dir);
  std::cout << "wrote " << corpus.sequences.size() << " sequences ("
            << corpus.count(Split::Train) << " train / " << corpus.count(Split::Val)
            << " val / " << corpus.count(Split::Test) << " test) to " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, const std::vector<Override>& overrides) {
  RunConfig cfg = build_config(config_path, overrides);
  const Corpus corpus = load_corpus(data_dir);
  const uint64_t fingerprint = config_fingerprint(cfg);

  fs::create_directories(out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  TrainOutcome outcome = train(cfg.train, cfg.model, cfg.schedule, corpus, fingerprint);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ostringstream header;
  header << "# sedkit training log\n";
  header << "# config_fingerprint=" << fingerprint << "\n";
  for (const auto& o : overrides) header << "# override " << o.key << "=" << o.value << "\n";
  std::istringstream dump(dump_run_config(cfg));
  for (std::string line; std::getline(dump, line);) header << "# " << line << "\n";

  write_text((fs::path(out_dir) / "train_log.txt").string(),
             header.str() + format_train_log(outcome.log));
  save_checkpoint((fs::path(out_dir) / "checkpoint.sedm").string(),
                  outcome.best_checkpoint);

  std::cout << "trained " << outcome.log.size() << " epochs (" << outcome.updates
            << " updates) in " << std::fixed << std::setprecision(1) << seconds
            << " s; best validation loss " << std::setprecision(6)
            << outcome.best_val_loss << " at epoch " << outcome.best_epoch << "\n";
  std::cout << "checkpoint: " << (fs::path(out_dir) / "checkpoint.sedm").string() << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_dir,
             const std::string& split, double threshold) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const Corpus corpus = load_corpus(data_dir);
  const Score score =
      evaluate_checkpoint(ckpt, corpus, split_from_name(split), threshold);
  std::cout << format_score_table(score) << "\n" << format_score_kv(score);
  return 0;
}

int cmd_ab(int seeds, const std::string& out_dir, const std::string& config_path,
           const std::vector<Override>& overrides, bool verbose) {
  RunConfig cfg = build_config(config_path, overrides);
  if (seeds > 0) cfg.ab_seeds = seeds;
  if (cfg.ab_seeds < 3)
    throw ConfigError(msg("ab: need at least 3 seeds, got ", cfg.ab_seeds));
  const AbResult result = ab_experiment(cfg.train, cfg.model, cfg.schedule, cfg.corpus,
                                        cfg.ab_seeds, verbose);
  fs::create_directories(out_dir);
  write_text((fs::path(out_dir) / "ab_table.txt").string(), format_ab_table(result));
  write_text((fs::path(out_dir) / "ab_results.kv").string(), format_ab_kv(result));
  std::cout << format_ab_table(result);
  return 0;
}

int cmd_schedule(double gamma, double pmin, double pmax, int nb, int updates,
                 const std::string& out_path) {
  ScheduleParams params;
  params.gamma = gamma;
  params.p_min = pmin;
  params.p_max = pmax;
  params.n_batches = nb;
  params.validate();
  const auto curve = schedule_curve(params, updates);
  std::ostringstream os;
  char buf[64];
  for (const auto& [i, p] : curve) {
    std::snprintf(buf, sizeof(buf), "%lld %.10g\n", static_cast<long long>(i), p);
    os << buf;
  }
  write_text(out_path, os.str());
  std::cout << "wrote " << curve.size() << " points to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sedkit: sound event detection with a teacher-forced, scheduled-sampling CRNN"};
  app.require_subcommand(1);
  app.footer("Config keys (for --config files and --set overrides):\n" + config_key_help());

  std::string kind = "structured", out_dir, config_path, data_dir, checkpoint_path;
  std::string split = "test", schedule_out = "schedule.txt";
  uint64_t seed = 1;
  double threshold = 0.5;
  int ab_seeds = 0;
  bool verbose = false;
  double gamma = 1.0 / 12.0, pmin = 0.05, pmax = 0.9;
  int nb = 44, updates = 4400;
  std::vector<std::string> set_overrides;
  std::string lr_override, clip_override, seed_override, epochs_override, batch_override;
  std::string conditioning_override;

  auto* gen = app.add_subcommand("generate", "Generate a synthetic labeled corpus");
  gen->add_option("--kind", kind, "structured | unstructured")->required();
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--seed", seed, "generation seed")->default_val(1);
  gen->add_option("--config", config_path, "config file");
  gen->add_option("--set", set_overrides, "config override key=value");

  auto* tr = app.add_subcommand("train", "Train a model on a generated corpus");
  tr->add_option("--config", config_path, "config file");
  tr->add_option("--data", data_dir, "corpus directory")->required();
  tr->add_option("--out", out_dir, "output directory")->required();
  tr->add_option("--lr", lr_override, "learning rate override");
  tr->add_option("--clip", clip_override, "enable gradient clipping with this norm");
  tr->add_option("--seed", seed_override, "seed override");
  tr->add_option("--epochs", epochs_override, "max epochs override");
  tr->add_option("--batch", batch_override, "batch size override");
  tr->add_option("--conditioning", conditioning_override,
                 "off | ground_truth | scheduled | predictions");
  tr->add_option("--set", set_overrides, "config override key=value");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus split");
  ev->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  ev->add_option("--data", data_dir, "corpus directory")->required();
  ev->add_option("--split", split, "train | val | test")->default_val("test");
  ev->add_option("--threshold", threshold, "detection threshold")->default_val(0.5);

  auto* ab = app.add_subcommand("ab", "Run the baseline-vs-proposed A/B experiment");
  ab->add_option("--seeds", ab_seeds, "number of seeds (>= 3)");
  ab->add_option("--out", out_dir, "output directory")->required();
  ab->add_option("--config", config_path, "config file");
  ab->add_option("--set", set_overrides, "config override key=value");
  ab->add_flag("--verbose", verbose, "log per-run scores to stderr");

  auto* sc = app.add_subcommand("schedule", "Export the p_TF schedule curve");
  sc->add_option("--gamma", gamma, "decay slope")->default_val(1.0 / 12.0);
  sc->add_option("--pmin", pmin, "minimum probability")->default_val(0.05);
  sc->add_option("--pmax", pmax, "maximum probability")->default_val(0.9);
  sc->add_option("--nb", nb, "batches per epoch")->default_val(44);
  sc->add_option("--updates", updates, "number of updates to tabulate")->default_val(4400);
  sc->add_option("--out", schedule_out, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    std::vector<Override> overrides;
    for (const auto& s : set_overrides) {
      const size_t eq = s.find('=');
      if (eq == std::string::npos)
        throw ConfigError(msg("--set expects key=value, got '", s, "'"));
      overrides.push_back({s.substr(0, eq), s.substr(eq + 1)});
    }
    if (!lr_override.empty()) overrides.push_back({"train.learning_rate", lr_override});
    if (!clip_override.empty()) {
      overrides.push_back({"train.grad_clip", "true"});
      overrides.push_back({"train.clip_norm", clip_override});
    }
    if (!seed_override.empty()) overrides.push_back({"train.seed", seed_override});
    if (!epochs_override.empty()) overrides.push_back({"train.max_epochs", epochs_override});
    if (!batch_override.empty()) overrides.push_back({"train.batch_size", batch_override});
    if (!conditioning_override.empty())
      overrides.push_back({"model.conditioning", conditioning_override});

    if (gen->parsed()) return cmd_generate(kind, out_dir, seed, config_path, overrides);
    if (tr->parsed()) return cmd_train(config_path, data_dir, out_dir, overrides);
    if (ev->parsed()) return cmd_eval(checkpoint_path, data_dir, split, threshold);
    if (ab->parsed()) return cmd_ab(ab_seeds, out_dir, config_path, overrides, verbose);
    if (sc->parsed()) return cmd_schedule(gamma, pmin, pmax, nb, updates, schedule_out);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
