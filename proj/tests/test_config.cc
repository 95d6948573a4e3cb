// tests/test_config.cc
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "lattice/config.h"

using namespace lattice;

TEST_CASE("paper preset carries the full-size recipe constants") {
  RunConfig c = preset_config("paper");
  CHECK(c.model.num_blocks == 15);
  CHECK(c.model.ff_dim == 2048);
  CHECK(c.model.model_dim == 256);
  CHECK(c.model.heads == 4);
  CHECK(c.model.taps == std::vector<int>{3, 6, 9, 12});
  CHECK(c.model.shared_blocks == 9);
  CHECK(c.model.expert_blocks == 3);
  CHECK(c.model.shared_lid_tap == 3);
  CHECK(c.model.shared_gt_tap == 6);
  CHECK(c.model.lambda_disentangle == 10.0);
  CHECK(c.model.beam_width == 10);
  CHECK(c.train.epochs == 100);
  CHECK(c.train.warmup_steps == 25000);
  CHECK(c.train.average_top_k == 10);
  CHECK(c.train.beta1 == 0.9);
  CHECK(c.train.beta2 == 0.98);
  CHECK(c.train.adam_eps == 1e-9);
}

TEST_CASE("desk preset is valid and small") {
  RunConfig c = preset_config("desk");
  CHECK(c.model.model_dim == 32);
  CHECK(c.train.epochs == 40);
  CHECK(c.train.warmup_steps == 500);
  c.model.validate();
  c.train.validate();
  CHECK_THROWS_AS(preset_config("huge"), ConfigError);
}

TEST_CASE("run config json round trip") {
  RunConfig c = preset_config("desk");
  c.model.variant = Variant::kScctcLid3;
  c.model.npc.alpha = 0.25;
  c.model.alpha_lang = 0.1;
  c.corpus.seed = 42;
  c.n_utterances = 123;
  c.ablate_alphas = {0.0, 0.5};
  c.eval.decoder = "greedy";
  RunConfig back = run_config_from_json(run_config_to_json(c));
  CHECK(run_config_to_json(back) == run_config_to_json(c));
  CHECK(back.model.variant == Variant::kScctcLid3);
  CHECK(back.model.alpha_lang.has_value());
  CHECK(back.model.alpha_lang.value() == 0.1);
  CHECK(!back.model.alpha_mix.has_value());
  CHECK(back.eval.decoder == "greedy");
}

TEST_CASE("unknown keys are rejected") {
  nlohmann::json j = run_config_to_json(preset_config("desk"));
  j["model"]["warp_factor"] = 9;
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);

  nlohmann::json j2 = run_config_to_json(preset_config("desk"));
  j2["mystery"] = 1;
  CHECK_THROWS_AS(run_config_from_json(j2), ConfigError);
}

TEST_CASE("config file round trip") {
  RunConfig c = preset_config("desk");
  c.train.seed = 77;
  const std::string path = "/tmp/test_run_config.json";
  save_run_config(c, path);
  RunConfig back = load_run_config(path);
  CHECK(run_config_to_json(back) == run_config_to_json(c));

  std::ofstream(path) << "{ not json";
  CHECK_THROWS(load_run_config(path));
}
