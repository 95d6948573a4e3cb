// lattice/config.cc
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

#include "lattice/config.h"

#include <fstream>
#include <set>

namespace lattice {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!known.count(key))
      throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json corpus_spec_to_json(const CorpusSpec& s) {
  return json{{"lang_a_vocab", s.lang_a_vocab},
              {"lang_b_vocab", s.lang_b_vocab},
              {"feature_dim", s.feature_dim},
              {"min_token_frames", s.min_token_frames},
              {"max_token_frames", s.max_token_frames},
              {"noise_std", s.noise_std},
              {"switch_prob", s.switch_prob},
              {"min_tokens", s.min_tokens},
              {"max_tokens", s.max_tokens},
              {"homophone_fraction", s.homophone_fraction},
              {"seed", s.seed}};
}

CorpusSpec corpus_spec_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"lang_a_vocab", "lang_b_vocab", "feature_dim",
                       "min_token_frames", "max_token_frames", "noise_std",
                       "switch_prob", "min_tokens", "max_tokens",
                       "homophone_fraction", "seed"},
                      "corpus");
  CorpusSpec s;
  read(j, "lang_a_vocab", s.lang_a_vocab);
  read(j, "lang_b_vocab", s.lang_b_vocab);
  read(j, "feature_dim", s.feature_dim);
  read(j, "min_token_frames", s.min_token_frames);
  read(j, "max_token_frames", s.max_token_frames);
  read(j, "noise_std", s.noise_std);
  read(j, "switch_prob", s.switch_prob);
  read(j, "min_tokens", s.min_tokens);
  read(j, "max_tokens", s.max_tokens);
  read(j, "homophone_fraction", s.homophone_fraction);
  read(j, "seed", s.seed);
  return s;
}

json model_config_to_json(const ModelConfig& c) {
  json j{{"variant", variant_name(c.variant)},
         {"feature_dim", c.feature_dim},
         {"model_dim", c.model_dim},
         {"ff_dim", c.ff_dim},
         {"heads", c.heads},
         {"num_blocks", c.num_blocks},
         {"taps", c.taps},
         {"lid_tap", c.lid_tap},
         {"shared_blocks", c.shared_blocks},
         {"expert_blocks", c.expert_blocks},
         {"shared_lid_tap", c.shared_lid_tap},
         {"shared_gt_tap", c.shared_gt_tap},
         {"lambda_disentangle", c.lambda_disentangle},
         {"alpha", c.npc.alpha},
         {"backprop_through_prior", c.npc.backprop_through_prior},
         {"posterior_injection", c.posterior_injection},
         {"condition_taps", c.condition_taps},
         {"lid_target_mode", c.lid_target_mode == LidTargetMode::kPerToken
                                 ? "per_token"
                                 : "run_collapsed"},
         {"disentangle_mode",
          c.disentangle_mode == DisentangleMode::kSquaredCosine
              ? "squared_cosine"
              : "plain_cosine"},
         {"dropout", c.dropout},
         {"beam_width", c.beam_width},
         {"lang_a_vocab", c.lang_a_vocab},
         {"lang_b_vocab", c.lang_b_vocab}};
  j["alpha_mix"] = c.alpha_mix ? json(*c.alpha_mix) : json(nullptr);
  j["alpha_lang"] = c.alpha_lang ? json(*c.alpha_lang) : json(nullptr);
  j["alpha_inter"] = c.alpha_inter ? json(*c.alpha_inter) : json(nullptr);
  return j;
}

ModelConfig model_config_from_json(const json& j) {
  reject_unknown_keys(
      j,
      {"variant", "feature_dim", "model_dim", "ff_dim", "heads", "num_blocks",
       "taps", "lid_tap", "shared_blocks", "expert_blocks", "shared_lid_tap",
       "shared_gt_tap", "lambda_disentangle", "alpha",
       "backprop_through_prior", "alpha_mix", "alpha_lang", "alpha_inter",
       "posterior_injection", "condition_taps", "lid_target_mode",
       "disentangle_mode", "dropout", "beam_width", "lang_a_vocab",
       "lang_b_vocab"},
      "model");
  ModelConfig c;
  if (j.contains("variant")) c.variant = variant_from_name(j.at("variant"));
  read(j, "feature_dim", c.feature_dim);
  read(j, "model_dim", c.model_dim);
  read(j, "ff_dim", c.ff_dim);
  read(j, "heads", c.heads);
  read(j, "num_blocks", c.num_blocks);
  read(j, "taps", c.taps);
  read(j, "lid_tap", c.lid_tap);
  read(j, "shared_blocks", c.shared_blocks);
  read(j, "expert_blocks", c.expert_blocks);
  read(j, "shared_lid_tap", c.shared_lid_tap);
  read(j, "shared_gt_tap", c.shared_gt_tap);
  read(j, "lambda_disentangle", c.lambda_disentangle);
  read(j, "alpha", c.npc.alpha);
  read(j, "backprop_through_prior", c.npc.backprop_through_prior);
  for (const auto& [key, field] :
       std::initializer_list<std::pair<const char*, std::optional<double>*>>{
           {"alpha_mix", &c.alpha_mix},
           {"alpha_lang", &c.alpha_lang},
           {"alpha_inter", &c.alpha_inter}}) {
    if (j.contains(key) && !j.at(key).is_null())
      *field = j.at(key).get<double>();
  }
  read(j, "posterior_injection", c.posterior_injection);
  read(j, "condition_taps", c.condition_taps);
  if (j.contains("lid_target_mode")) {
    const std::string m = j.at("lid_target_mode");
    if (m == "per_token") c.lid_target_mode = LidTargetMode::kPerToken;
    else if (m == "run_collapsed") c.lid_target_mode = LidTargetMode::kRunCollapsed;
    else throw ConfigError("bad lid_target_mode '" + m + "'");
  }
  if (j.contains("disentangle_mode")) {
    const std::string m = j.at("disentangle_mode");
    if (m == "squared_cosine") c.disentangle_mode = DisentangleMode::kSquaredCosine;
    else if (m == "plain_cosine") c.disentangle_mode = DisentangleMode::kPlainCosine;
    else throw ConfigError("bad disentangle_mode '" + m + "'");
  }
  read(j, "dropout", c.dropout);
  read(j, "beam_width", c.beam_width);
  read(j, "lang_a_vocab", c.lang_a_vocab);
  read(j, "lang_b_vocab", c.lang_b_vocab);
  return c;
}

json train_config_to_json(const TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"warmup_steps", c.warmup_steps},
              {"lr_scale", c.lr_scale},
              {"batch_size", c.batch_size},
              {"seed", c.seed},
              {"keep_checkpoints", c.keep_checkpoints},
              {"average_top_k", c.average_top_k},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"adam_eps", c.adam_eps},
              {"val_fraction", c.val_fraction},
              {"grad_clip", c.grad_clip}};
}

TrainConfig train_config_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"epochs", "warmup_steps", "lr_scale", "batch_size",
                       "seed", "keep_checkpoints", "average_top_k", "beta1",
                       "beta2", "adam_eps", "val_fraction", "grad_clip"},
                      "train");
  TrainConfig c;
  read(j, "epochs", c.epochs);
  read(j, "warmup_steps", c.warmup_steps);
  read(j, "lr_scale", c.lr_scale);
  read(j, "batch_size", c.batch_size);
  read(j, "seed", c.seed);
  read(j, "keep_checkpoints", c.keep_checkpoints);
  read(j, "average_top_k", c.average_top_k);
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "adam_eps", c.adam_eps);
  read(j, "val_fraction", c.val_fraction);
  read(j, "grad_clip", c.grad_clip);
  return c;
}

namespace {

json eval_config_to_json(const EvalConfig& c) {
  return json{{"decoder", c.decoder},
              {"peakiness_tau", c.peakiness_tau},
              {"boundary_tolerance", c.boundary_tolerance}};
}

EvalConfig eval_config_from_json(const json& j) {
  reject_unknown_keys(j, {"decoder", "peakiness_tau", "boundary_tolerance"},
                      "eval");
  EvalConfig c;
  read(j, "decoder", c.decoder);
  if (c.decoder != "beam" && c.decoder != "greedy")
    throw ConfigError("decoder must be 'beam' or 'greedy'");
  read(j, "peakiness_tau", c.peakiness_tau);
  read(j, "boundary_tolerance", c.boundary_tolerance);
  return c;
}

}  // namespace

RunConfig preset_config(const std::string& name) {
  RunConfig c;
  if (name == "paper") {
    c.model.model_dim = 256;
    c.model.ff_dim = 2048;
    c.model.heads = 4;
    c.model.num_blocks = 15;
    c.model.taps = {3, 6, 9, 12};
    c.model.lid_tap = 3;
    c.model.shared_blocks = 9;
    c.model.expert_blocks = 3;
    c.model.shared_lid_tap = 3;
    c.model.shared_gt_tap = 6;
    c.model.lambda_disentangle = 10.0;
    c.model.npc.alpha = 0.3;
    c.model.beam_width = 10;
    c.train.epochs = 100;
    c.train.warmup_steps = 25000;
    c.train.average_top_k = 10;
    c.train.keep_checkpoints = 100;
  } else if (name == "desk") {
    c.model.model_dim = 32;
    c.model.ff_dim = 64;
    c.model.heads = 2;
    c.model.num_blocks = 6;
    c.model.taps = {2, 4};
    c.model.lid_tap = 2;
    c.model.shared_blocks = 4;
    c.model.expert_blocks = 2;
    c.model.shared_lid_tap = 2;
    c.model.shared_gt_tap = 3;
    c.model.lambda_disentangle = 10.0;
    c.model.npc.alpha = 0.3;
    c.model.beam_width = 10;
    c.train.epochs = 40;
    c.train.warmup_steps = 500;
    c.train.average_top_k = 10;
    c.train.keep_checkpoints = 40;
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected paper or desk)");
  }
  return c;
}

json run_config_to_json(const RunConfig& c) {
  return json{{"corpus", corpus_spec_to_json(c.corpus)},
              {"model", model_config_to_json(c.model)},
              {"train", train_config_to_json(c.train)},
              {"eval", eval_config_to_json(c.eval)},
              {"n_utterances", c.n_utterances},
              {"ablate_alphas", c.ablate_alphas},
              {"ablate_variants", c.ablate_variants},
              {"ablate_seeds", c.ablate_seeds}};
}

RunConfig run_config_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"corpus", "model", "train", "eval", "n_utterances",
                       "ablate_alphas", "ablate_variants", "ablate_seeds"},
                      "run config");
  RunConfig c;
  try {
    if (j.contains("corpus")) c.corpus = corpus_spec_from_json(j.at("corpus"));
    if (j.contains("model")) c.model = model_config_from_json(j.at("model"));
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    if (j.contains("eval")) c.eval = eval_config_from_json(j.at("eval"));
    read(j, "n_utterances", c.n_utterances);
    read(j, "ablate_alphas", c.ablate_alphas);
    read(j, "ablate_variants", c.ablate_variants);
    read(j, "ablate_seeds", c.ablate_seeds);
    c.model.validate();
    c.train.validate();
    for (const auto& v : c.ablate_variants) variant_from_name(v);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return run_config_from_json(j);
}

void save_run_config(const RunConfig& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << run_config_to_json(c).dump(2) << "\n";
}

}  // namespace lattice
