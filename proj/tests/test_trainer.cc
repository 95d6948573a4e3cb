// tests/test_trainer.cc
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

#include <cmath>
#include <filesystem>
#include <fstream>

#include "lattice/trainer.h"

using namespace lattice;
namespace fs = std::filesystem;

namespace {

CorpusSpec tiny_spec() {
  CorpusSpec s;
  s.lang_a_vocab = 3;
  s.lang_b_vocab = 2;
  s.feature_dim = 4;
  s.min_tokens = 2;
  s.max_tokens = 4;
  s.min_token_frames = 2;
  s.max_token_frames = 3;
  s.seed = 5;
  return s;
}

ModelConfig tiny_model(Variant v = Variant::kBaseline) {
  ModelConfig c;
  c.variant = v;
  c.feature_dim = 4;
  c.model_dim = 8;
  c.ff_dim = 8;
  c.heads = 2;
  c.num_blocks = 2;
  c.taps = {1};
  c.lid_tap = 1;
  c.shared_blocks = 3;
  c.expert_blocks = 1;
  c.shared_lid_tap = 1;
  c.shared_gt_tap = 2;
  c.npc.alpha = 0.0;
  c.lang_a_vocab = 3;
  c.lang_b_vocab = 2;
  return c;
}

TrainConfig tiny_train(int epochs) {
  TrainConfig t;
  t.epochs = epochs;
  t.warmup_steps = 10;
  t.batch_size = 4;
  t.seed = 3;
  t.keep_checkpoints = epochs;
  t.average_top_k = std::min(2, epochs);
  t.val_fraction = 0.2;
  return t;
}

std::string fresh_dir(const std::string& name) {
  std::string d = "/tmp/lattice_test_" + name;
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("lr schedule") {
  const int dim = 64;
  const int warmup = 100;
  // Both arms of the min agree at step == warmup.
  const double at = lr_schedule(warmup, dim, warmup, 1.0);
  const double before = lr_schedule(warmup - 1, dim, warmup, 1.0);
  const double after = lr_schedule(warmup + 1, dim, warmup, 1.0);
  CHECK(at == doctest::Approx(std::pow(dim, -0.5) * std::pow(warmup, -0.5))
                  .epsilon(1e-15));
  CHECK(before < at);
  CHECK(after < at);
  for (int s = 1; s < warmup; ++s)
    CHECK(lr_schedule(s, dim, warmup, 1.0) < lr_schedule(s + 1, dim, warmup, 1.0));
  for (int s = warmup; s < warmup + 50; ++s)
    CHECK(lr_schedule(s, dim, warmup, 1.0) > lr_schedule(s + 1, dim, warmup, 1.0));
  CHECK(lr_schedule(37, dim, warmup, 2.0) ==
        doctest::Approx(2.0 * lr_schedule(37, dim, warmup, 1.0)).epsilon(1e-15));
  CHECK_THROWS(lr_schedule(0, dim, warmup, 1.0));
}

TEST_CASE("adam step") {
  TrainConfig cfg;
  SUBCASE("zero gradient leaves parameters unchanged") {
    std::map<std::string, Tensor> params;
    params.emplace("w", Tensor::from_data({2}, {1.5, -2.0}, true));
    params.at("w").zero_grad();
    AdamState st;
    adam_step(params, st, cfg, 0.1);
    CHECK(params.at("w").data()[0] == 1.5);
    CHECK(params.at("w").data()[1] == -2.0);
    CHECK(st.step == 1);
  }

  SUBCASE("first step moves by about lr for a constant gradient") {
    std::map<std::string, Tensor> params;
    params.emplace("w", Tensor::from_data({1}, {0.0}, true));
    params.at("w").zero_grad();
    params.at("w").node()->grad[0] = 3.7;
    AdamState st;
    adam_step(params, st, cfg, 0.01);
    CHECK(params.at("w").data()[0] == doctest::Approx(-0.01).epsilon(1e-6));
  }

  SUBCASE("two steps reproduce a hand-rolled trace") {
    const double g1 = 0.8, g2 = -0.3, lr = 0.05;
    std::map<std::string, Tensor> params;
    params.emplace("w", Tensor::from_data({1}, {1.0}, true));
    AdamState st;
    params.at("w").zero_grad();
    params.at("w").node()->grad[0] = g1;
    adam_step(params, st, cfg, lr);
    params.at("w").zero_grad();
    params.at("w").node()->grad[0] = g2;
    adam_step(params, st, cfg, lr);

    double m = 0, v = 0, w = 1.0;
    int step = 0;
    for (double g : {g1, g2}) {
      ++step;
      m = cfg.beta1 * m + (1 - cfg.beta1) * g;
      v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
      const double mh = m / (1 - std::pow(cfg.beta1, step));
      const double vh = v / (1 - std::pow(cfg.beta2, step));
      w -= lr * mh / (std::sqrt(vh) + cfg.adam_eps);
    }
    CHECK(std::abs(params.at("w").data()[0] - w) <= 1e-12);
  }

  SUBCASE("non-finite gradient names the parameter") {
    std::map<std::string, Tensor> params;
    params.emplace("bad.W", Tensor::from_data({1}, {0.0}, true));
    params.at("bad.W").zero_grad();
    params.at("bad.W").node()->grad[0] = std::nan("");
    AdamState st;
    try {
      adam_step(params, st, cfg, 0.1);
      FAIL("expected TrainingDiverged");
    } catch (const TrainingDiverged& e) {
      CHECK(std::string(e.what()).find("bad.W") != std::string::npos);
    }
  }
}

TEST_CASE("make_batches covers every utterance deterministically") {
  Corpus c = generate_corpus(tiny_spec(), 11);
  std::vector<const Utterance*> utts;
  for (const auto& u : c.utterances) utts.push_back(&u);

  std::mt19937_64 r1(9), r2(9), r3(10);
  auto b1 = make_batches(utts, 4, r1);
  auto b2 = make_batches(utts, 4, r2);
  auto b3 = make_batches(utts, 4, r3);
  CHECK(b1.size() == 3);
  int covered = 0;
  std::set<int> seen;
  for (const auto& b : b1) {
    int mx = 0;
    for (int idx : b.utterances) {
      seen.insert(idx);
      ++covered;
      mx = std::max(mx, utts[idx]->frames);
    }
    CHECK(b.max_frames == mx);
  }
  CHECK(covered == 11);
  CHECK(seen.size() == 11);
  for (size_t i = 0; i < b1.size(); ++i)
    CHECK(b1[i].utterances == b2[i].utterances);
  bool same_order = true;
  for (size_t i = 0; i < b1.size(); ++i)
    if (b1[i].utterances != b3[i].utterances) same_order = false;
  CHECK(!same_order);

  std::mt19937_64 r4(1);
  auto singles = make_batches(utts, 1, r4);
  CHECK(singles.size() == 11);
  for (const auto& b : singles)
    CHECK(b.max_frames == utts[b.utterances[0]]->frames);
}

TEST_CASE("a few optimizer steps on one batch decrease the loss") {
  Corpus c = generate_corpus(tiny_spec(), 4);
  Model m(tiny_model());
  m.init_params(1);
  TrainConfig cfg;
  AdamState st;
  std::vector<double> losses;
  for (int step = 0; step < 5; ++step) {
    m.zero_grads();
    double total = 0.0;
    for (const auto& u : c.utterances) {
      ForwardResult r = m.forward(u, u.frames, true);
      total += r.losses.l_total;
      scale(r.total, 1.0 / c.utterances.size()).backward();
    }
    losses.push_back(total / c.utterances.size());
    adam_step(m.params(), st, cfg, 1e-3);
  }
  for (size_t i = 1; i < losses.size(); ++i) CHECK(losses[i] < losses[i - 1]);
}

TEST_CASE("training writes checkpoints, metrics, and an averaged model") {
  Corpus c = generate_corpus(tiny_spec(), 10);
  Model m(tiny_model());
  const std::string dir = fresh_dir("train_basic");
  TrainResult res = train(tiny_train(3), c, m, dir);
  CHECK(res.metrics.size() == 3);
  CHECK(fs::exists(dir + "/ckpt_epoch_1.json"));
  CHECK(fs::exists(dir + "/ckpt_epoch_3.json"));
  CHECK(fs::exists(dir + "/manifest.json"));
  CHECK(fs::exists(res.final_model_path));

  int lines = 0;
  std::ifstream in(dir + "/metrics.jsonl");
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 3);
}

TEST_CASE("training is deterministic under a fixed seed") {
  Corpus c = generate_corpus(tiny_spec(), 10);
  const std::string d1 = fresh_dir("det_1");
  const std::string d2 = fresh_dir("det_2");
  Model m1(tiny_model());
  Model m2(tiny_model());
  train(tiny_train(2), c, m1, d1);
  train(tiny_train(2), c, m2, d2);
  std::ifstream f1(d1 + "/metrics.jsonl"), f2(d2 + "/metrics.jsonl");
  std::string s1((std::istreambuf_iterator<char>(f1)),
                 std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)),
                 std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  CHECK(!s1.empty());
}

TEST_CASE("optimizer state round-trips through checkpoints") {
  Corpus c = generate_corpus(tiny_spec(), 8);
  Model m(tiny_model());
  const std::string dir = fresh_dir("ckpt_rt");
  train(tiny_train(2), c, m, dir);
  Checkpoint a = load_checkpoint(dir + "/last_state.json");
  REQUIRE(a.has_opt);
  const std::string copy = dir + "/copy.json";
  save_checkpoint(a, copy);
  Checkpoint b = load_checkpoint(copy);
  CHECK(a.params == b.params);
  CHECK(a.opt.m == b.opt.m);
  CHECK(a.opt.v == b.opt.v);
  CHECK(a.opt.step == b.opt.step);
  CHECK(a.rng_state == b.rng_state);
  CHECK(a.epoch == b.epoch);
}

TEST_CASE("resume reproduces the uninterrupted run") {
  Corpus c = generate_corpus(tiny_spec(), 10);
  const std::string full_dir = fresh_dir("resume_full");
  Model full(tiny_model());
  TrainResult full_res = train(tiny_train(4), c, full, full_dir);

  const std::string part_dir = fresh_dir("resume_part");
  Model part(tiny_model());
  train(tiny_train(2), c, part, part_dir);
  Model resumed(tiny_model());
  TrainResult tail = train(tiny_train(4), c, resumed, part_dir,
                           part_dir + "/last_state.json");
  REQUIRE(tail.metrics.size() == 2);
  CHECK(tail.metrics[0].epoch == 3);
  CHECK(tail.metrics[0].val_loss == full_res.metrics[2].val_loss);
  CHECK(tail.metrics[1].val_loss == full_res.metrics[3].val_loss);
  CHECK(tail.metrics[1].val_mer == full_res.metrics[3].val_mer);
}

TEST_CASE("checkpoint averaging") {
  Corpus c = generate_corpus(tiny_spec(), 8);
  Model m(tiny_model());
  const std::string dir = fresh_dir("avg");
  train(tiny_train(1), c, m, dir);
  Checkpoint ck = load_checkpoint(dir + "/ckpt_epoch_1.json");

  // Mean of k identical checkpoints is the identity.
  Model same = average_checkpoints(
      {dir + "/ckpt_epoch_1.json", dir + "/ckpt_epoch_1.json"}, 2);
  for (auto& [name, t] : same.params())
    CHECK(t.data() == ck.params.at(name));

  // Averaging a zeroed copy with the original halves every weight.
  Checkpoint zero = ck;
  for (auto& [name, v] : zero.params) std::fill(v.begin(), v.end(), 0.0);
  zero.val_mer = ck.val_mer;
  const std::string zp = dir + "/zero.json";
  save_checkpoint(zero, zp);
  Model half = average_checkpoints({dir + "/ckpt_epoch_1.json", zp}, 2);
  for (auto& [name, t] : half.params()) {
    const auto& orig = ck.params.at(name);
    for (size_t i = 0; i < orig.size(); ++i)
      CHECK(t.data()[i] == doctest::Approx(orig[i] / 2.0).epsilon(1e-15));
  }

  // Incompatible configurations are rejected.
  Checkpoint other = ck;
  other.config.model_dim = 16;
  const std::string op = dir + "/other.json";
  save_checkpoint(other, op);
  CHECK_THROWS(average_checkpoints({dir + "/ckpt_epoch_1.json", op}, 2));
}

TEST_CASE("checkpoint retention keeps the best and the latest") {
  Corpus c = generate_corpus(tiny_spec(), 10);
  Model m(tiny_model());
  TrainConfig cfg = tiny_train(5);
  cfg.keep_checkpoints = 2;
  cfg.average_top_k = 2;
  const std::string dir = fresh_dir("retention");
  train(cfg, c, m, dir);
  int kept = 0;
  for (int e = 1; e <= 5; ++e)
    if (fs::exists(dir + "/ckpt_epoch_" + std::to_string(e) + ".json")) ++kept;
  CHECK(kept <= 3);
  CHECK(kept >= 2);
}
