// lattice/config.h
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

#ifndef LATTICE_CONFIG_H_
#define LATTICE_CONFIG_H_

#include <string>
#include <vector>

#include <json.hpp>

#include "lattice/corpus.h"
#include "lattice/model.h"
#include "lattice/trainer_types.h"

namespace lattice {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct EvalConfig {
  std::string decoder = "beam";  // "beam" or "greedy"
  double peakiness_tau = 0.9;
  int boundary_tolerance = 2;
};

// One plain-text configuration document driving every CLI command.
// Unknown keys are rejected; flags override file values.
struct RunConfig {
  CorpusSpec corpus;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  int n_utterances = 2000;
  std::vector<double> ablate_alphas = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<std::string> ablate_variants = {"scctc", "scctc_lidall",
                                              "scctc_lid3"};
  std::vector<uint64_t> ablate_seeds = {1};
};

// Fully-populated presets. "paper" carries the full-size recipe constants,
// "desk" a configuration sized for a single desktop core.
RunConfig preset_config(const std::string& name);

nlohmann::json corpus_spec_to_json(const CorpusSpec& s);
CorpusSpec corpus_spec_from_json(const nlohmann::json& j);
nlohmann::json model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json run_config_to_json(const RunConfig& c);
// Parses a full document; throws ConfigError on unknown keys or bad values.
RunConfig run_config_from_json(const nlohmann::json& j);

RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& c, const std::string& path);

}  // namespace lattice

#endif  // LATTICE_CONFIG_H_
