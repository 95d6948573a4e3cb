// tools/lattice_cli.cc
//
// Copyright 2026 The lattice-lid Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lattice/ablation.h"
#include "lattice/config.h"
#include "lattice/corpus.h"
#include "lattice/evaluation.h"
#include "lattice/model.h"
#include "lattice/trainer.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lattice;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string preset = "desk";
  uint64_t seed = 0;
  uint64_t corpus_seed = 0;
  int n_utterances = 0;
  int epochs = 0;
  double alpha = -1.0;
  std::string variant;
  bool seed_set = false, corpus_seed_set = false, n_utts_set = false;
  bool epochs_set = false, alpha_set = false, variant_set = false;
};

void add_common(CLI::App* cmd, CommonOpts* o) {
  auto* cfg = cmd->add_option("--config", o->config_path,
                              "JSON config file (overrides the preset)");
  cmd->add_option("--preset", o->preset, "Preset name: desk or paper")
      ->excludes(cfg);
  cmd->add_option("--seed", o->seed, "Training seed override")
      ->each([o](const std::string&) { o->seed_set = true; });
  cmd->add_option("--corpus-seed", o->corpus_seed, "Corpus seed override")
      ->each([o](const std::string&) { o->corpus_seed_set = true; });
  cmd->add_option("--n-utterances", o->n_utterances,
                  "Corpus size override")
      ->each([o](const std::string&) { o->n_utts_set = true; });
  cmd->add_option("--epochs", o->epochs, "Epoch count override")
      ->each([o](const std::string&) { o->epochs_set = true; });
  cmd->add_option("--alpha", o->alpha, "Label-prior alpha override")
      ->each([o](const std::string&) { o->alpha_set = true; });
  cmd->add_option("--variant", o->variant,
                  "Model variant override (baseline, scctc, scctc_lid3, "
                  "scctc_lidall, dmoe, proposed)")
      ->each([o](const std::string&) { o->variant_set = true; });
}

RunConfig resolve_config(const CommonOpts& o) {
  RunConfig cfg = o.config_path.empty() ? preset_config(o.preset)
                                        : load_run_config(o.config_path);
  if (o.seed_set) cfg.train.seed = o.seed;
  if (o.corpus_seed_set) cfg.corpus.seed = o.corpus_seed;
  if (o.n_utts_set) cfg.n_utterances = o.n_utterances;
  if (o.epochs_set) cfg.train.epochs = o.epochs;
  if (o.alpha_set) cfg.model.npc.alpha = o.alpha;
  if (o.variant_set) cfg.model.variant = variant_from_name(o.variant);
  if (const char* env = std::getenv("LATTICE_LID_SEED")) {
    const uint64_t s = std::stoull(env);
    cfg.corpus.seed = s;
    cfg.train.seed = s;
  }
  cfg.model.feature_dim = cfg.corpus.feature_dim;
  cfg.model.lang_a_vocab = cfg.corpus.lang_a_vocab;
  cfg.model.lang_b_vocab = cfg.corpus.lang_b_vocab;
  cfg.model.validate();
  cfg.train.validate();
  return cfg;
}

Model load_model(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  Model model(ckpt.config);
  load_params_into(model, ckpt.params);
  return model;
}

json boundary_to_json(const BoundaryReport& b) {
  return json{{"median_offset", b.median_offset},
              {"f1", b.f1},
              {"blank_coverage", b.blank_coverage},
              {"tolerance", b.tolerance},
              {"gold_switches", b.gold_switches},
              {"pred_switches", b.pred_switches}};
}

int cmd_gen_corpus(const CommonOpts& opts, const std::string& out_path) {
  RunConfig cfg = resolve_config(opts);
  Corpus corpus = generate_corpus(cfg.corpus, cfg.n_utterances);
  save_corpus(corpus, out_path);
  json companion{{"corpus", corpus_spec_to_json(cfg.corpus)},
                 {"n_utterances", cfg.n_utterances}};
  std::ofstream(out_path + ".spec.json") << companion.dump(2) << "\n";
  std::cout << "wrote " << corpus.utterances.size() << " utterances to "
            << out_path << "\n";
  return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& corpus_path,
              const std::string& out_dir, const std::string& resume) {
  RunConfig cfg = resolve_config(opts);
  Corpus corpus = load_corpus(corpus_path);
  cfg.corpus = corpus.spec;
  cfg.model.feature_dim = corpus.spec.feature_dim;
  cfg.model.lang_a_vocab = corpus.spec.lang_a_vocab;
  cfg.model.lang_b_vocab = corpus.spec.lang_b_vocab;
  fs::create_directories(out_dir);
  save_run_config(cfg, out_dir + "/config.json");
  Model model(cfg.model);
  TrainResult result = train(cfg.train, corpus, model, out_dir, resume);
  const auto& last = result.metrics.back();
  std::cout << "final model: " << result.final_model_path << "\n"
            << "last epoch " << last.epoch << " val_loss "
            << last.val_loss << " val_mer " << last.val_mer << "\n";
  return 0;
}

int cmd_evaluate(const CommonOpts& opts, const std::string& model_path,
                 const std::string& corpus_path) {
  RunConfig cfg = resolve_config(opts);
  Corpus corpus = load_corpus(corpus_path);
  Model model = load_model(model_path);
  std::vector<const Utterance*> utts;
  for (const auto& u : corpus.utterances) utts.push_back(&u);
  EvalSummary s = evaluate_model(model, utts, cfg.eval);
  json out{{"mer",
            {{"mer", s.mer.mer},
             {"cer_a", s.mer.cer_a},
             {"wer_b", s.mer.wer_b},
             {"ref_tokens_a", s.mer.ref_tokens_a},
             {"ref_tokens_b", s.mer.ref_tokens_b},
             {"utterances", s.mer.utterances},
             {"distance", s.mer.ops.distance}}},
           {"peakiness",
            {{"blank_dominance", s.peak.blank_dominance},
             {"mean_max_posterior", s.peak.mean_max_posterior},
             {"tau", s.peak.tau}}},
           {"has_lid", s.has_lid}};
  if (s.has_lid) out["boundary"] = boundary_to_json(s.boundary);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_align(const CommonOpts& opts, const std::string& model_path,
              const std::string& corpus_path, const std::string& out_dir,
              int limit) {
  (void)resolve_config(opts);
  Corpus corpus = load_corpus(corpus_path);
  Model model = load_model(model_path);
  fs::create_directories(out_dir);
  int n = 0;
  for (const auto& u : corpus.utterances) {
    if (limit > 0 && n >= limit) break;
    ForwardResult res = model.forward(u, u.frames, /*with_loss=*/false);
    export_posteriorgram(res.final_post, model.vocab(),
                         out_dir + "/" + u.id + "_final.csv");
    if (res.has_lid)
      export_posteriorgram(res.lid_post, model.vocab(),
                           out_dir + "/" + u.id + "_lid.csv");
    ++n;
  }
  std::cout << "exported posteriorgrams for " << n << " utterances to "
            << out_dir << "\n";
  return 0;
}

int cmd_ablate(const CommonOpts& opts, const std::string& corpus_path,
               const std::string& out_dir,
               const std::vector<double>& alphas,
               const std::vector<uint64_t>& seeds,
               const std::vector<std::string>& variants) {
  RunConfig cfg = resolve_config(opts);
  if (!alphas.empty()) cfg.ablate_alphas = alphas;
  if (!seeds.empty()) cfg.ablate_seeds = seeds;
  if (!variants.empty()) cfg.ablate_variants = variants;
  Corpus corpus = load_corpus(corpus_path);
  cfg.corpus = corpus.spec;
  cfg.model.feature_dim = corpus.spec.feature_dim;
  cfg.model.lang_a_vocab = corpus.spec.lang_a_vocab;
  cfg.model.lang_b_vocab = corpus.spec.lang_b_vocab;
  fs::create_directories(out_dir);
  save_run_config(cfg, out_dir + "/config.json");
  AblationReport report = run_ablation(cfg, corpus, out_dir);
  write_ablation_csv(report, out_dir + "/ablation.csv");
  std::cout << ablation_table(report);
  std::cout << "csv: " << out_dir << "/ablation.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Code-switching encoder toolkit"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string out_path = "corpus.jsonl";
  std::string corpus_path, model_path, out_dir, resume;
  int align_limit = 0;
  std::vector<double> alphas;
  std::vector<uint64_t> seeds;
  std::vector<std::string> variants;

  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic corpus");
  add_common(gen, &opts);
  gen->add_option("--out", out_path, "Output JSONL path");

  auto* tr = app.add_subcommand("train", "Train a model");
  add_common(tr, &opts);
  tr->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
  tr->add_option("--out", out_dir, "Run directory")->required();
  tr->add_option("--resume", resume, "Checkpoint to resume from");

  auto* ev = app.add_subcommand("evaluate", "Evaluate a trained model");
  add_common(ev, &opts);
  ev->add_option("--model", model_path, "Model checkpoint")->required();
  ev->add_option("--corpus", corpus_path, "Corpus JSONL")->required();

  auto* al = app.add_subcommand("align", "Export posteriorgram CSVs");
  add_common(al, &opts);
  al->add_option("--model", model_path, "Model checkpoint")->required();
  al->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
  al->add_option("--out", out_dir, "Output directory")->required();
  al->add_option("--limit", align_limit, "Max utterances (0 = all)");

  auto* ab = app.add_subcommand("ablate", "Run the alpha/variant sweep");
  add_common(ab, &opts);
  ab->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
  ab->add_option("--out", out_dir, "Results directory")->required();
  ab->add_option("--alphas", alphas, "Alpha values")->delimiter(',');
  ab->add_option("--seeds", seeds, "Training seeds")->delimiter(',');
  ab->add_option("--variants", variants, "Variant names")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_corpus(opts, out_path);
    if (tr->parsed()) return cmd_train(opts, corpus_path, out_dir, resume);
    if (ev->parsed()) return cmd_evaluate(opts, model_path, corpus_path);
    if (al->parsed())
      return cmd_align(opts, model_path, corpus_path, out_dir, align_limit);
    if (ab->parsed())
      return cmd_ablate(opts, corpus_path, out_dir, alphas, seeds, variants);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
