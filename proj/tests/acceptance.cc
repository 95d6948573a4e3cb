// tests/acceptance.cc
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
//
// End-to-end acceptance gate. Each criterion prints one pass/fail line;
// the binary exits nonzero if any criterion fails. Training runs are cached
// under acceptance_cache/ next to the working directory so reruns are cheap.
// Run with a list of criterion numbers to execute a subset, e.g.
// `acceptance 1 2 3`.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lattice/ablation.h"
#include "lattice/config.h"
#include "lattice/corpus.h"
#include "lattice/evaluation.h"
#include "lattice/model.h"
#include "lattice/trainer.h"

using namespace lattice;
namespace fs = std::filesystem;

namespace {

const char* kCacheDir = "acceptance_cache";

Posteriorgram random_log_post(std::mt19937_64& rng, int frames, int vocab) {
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  Posteriorgram p;
  p.frames = frames;
  p.vocab = vocab;
  p.log_space = true;
  p.values.resize(static_cast<size_t>(frames) * vocab);
  for (int t = 0; t < frames; ++t) {
    double mx = -1e300;
    for (int v = 0; v < vocab; ++v) {
      p.values[t * vocab + v] = d(rng);
      mx = std::max(mx, p.values[t * vocab + v]);
    }
    double z = 0.0;
    for (int v = 0; v < vocab; ++v) z += std::exp(p.values[t * vocab + v] - mx);
    const double logz = mx + std::log(z);
    for (int v = 0; v < vocab; ++v) p.values[t * vocab + v] -= logz;
  }
  return p;
}

TargetSequence random_target(std::mt19937_64& rng, int max_len, int vocab) {
  std::uniform_int_distribution<int> len(0, max_len);
  std::uniform_int_distribution<int> tok(1, vocab - 1);
  TargetSequence y(len(rng));
  for (auto& t : y) t = tok(rng);
  return y;
}

CorpusSpec toy_spec() {
  CorpusSpec s;
  s.lang_a_vocab = 3;
  s.lang_b_vocab = 2;
  s.feature_dim = 4;
  s.min_tokens = 2;
  s.max_tokens = 4;
  s.min_token_frames = 2;
  s.max_token_frames = 3;
  s.switch_prob = 0.5;
  s.seed = 5;
  return s;
}

ModelConfig toy_model(Variant v) {
  ModelConfig c;
  c.variant = v;
  c.feature_dim = 4;
  c.model_dim = 8;
  c.ff_dim = 8;
  c.heads = 2;
  c.num_blocks = 3;
  c.taps = {1, 2};
  c.lid_tap = 1;
  c.shared_blocks = 3;
  c.expert_blocks = 1;
  c.shared_lid_tap = 1;
  c.shared_gt_tap = 2;
  c.npc.alpha = 0.3;
  c.lang_a_vocab = 3;
  c.lang_b_vocab = 2;
  return c;
}

// Desk-scale Proposed configuration shared by criteria 5 and 6.
RunConfig desk_run_config(double alpha, uint64_t train_seed) {
  RunConfig cfg = preset_config("desk");
  cfg.model.variant = Variant::kProposed;
  cfg.model.npc.alpha = alpha;
  cfg.model.feature_dim = cfg.corpus.feature_dim;
  cfg.model.lang_a_vocab = cfg.corpus.lang_a_vocab;
  cfg.model.lang_b_vocab = cfg.corpus.lang_b_vocab;
  cfg.corpus.seed = 7;
  cfg.train.seed = train_seed;
  cfg.train.keep_checkpoints = 12;
  cfg.train.average_top_k = 10;
  return cfg;
}

struct DeskRun {
  EvalSummary eval;
  double minutes = 0.0;
  bool cached = false;
};

const Corpus& desk_corpus() {
  static Corpus c = generate_corpus(desk_run_config(0.3, 7).corpus, 2200);
  return c;
}

// Trains (or reloads) one desk run and evaluates it on the 200 held-out
// utterances. Cache key: alpha and training seed.
DeskRun desk_train_and_eval(double alpha, uint64_t seed) {
  char label[64];
  std::snprintf(label, sizeof(label), "run_a%g_s%llu", alpha,
                static_cast<unsigned long long>(seed));
  const std::string dir = std::string(kCacheDir) + "/" + label;
  RunConfig cfg = desk_run_config(alpha, seed);
  const Corpus& full = desk_corpus();
  Corpus train_part;
  train_part.spec = full.spec;
  train_part.utterances.assign(full.utterances.begin(),
                               full.utterances.begin() + 2000);
  std::vector<const Utterance*> held_out;
  for (int i = 2000; i < 2200; ++i) held_out.push_back(&full.utterances[i]);

  DeskRun out;
  const std::string model_path = dir + "/final_model.json";
  const auto start = std::chrono::steady_clock::now();
  if (!fs::exists(model_path)) {
    fs::create_directories(dir);
    Model model(cfg.model);
    train(cfg.train, train_part, model, dir);
  } else {
    out.cached = true;
  }
  out.minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count() /
      60.0;

  Checkpoint ck = load_checkpoint(model_path);
  Model model(ck.config);
  load_params_into(model, ck.params);
  out.eval = evaluate_model(model, held_out, cfg.eval);

  // Keep one LID posteriorgram per cell around for before/after plots.
  ForwardResult sample = model.forward(*held_out[0], held_out[0]->frames, false);
  if (sample.has_lid)
    export_posteriorgram(sample.lid_post, model.vocab(),
                         dir + "/sample_lid_posteriorgram.csv");
  return out;
}

bool report(int n, const std::string& what, bool ok,
            const std::string& detail) {
  std::printf("criterion %d: %s - %s%s%s\n", n, ok ? "PASS" : "FAIL",
              what.c_str(), detail.empty() ? "" : "; ", detail.c_str());
  std::fflush(stdout);
  return ok;
}

bool criterion1() {
  std::mt19937_64 rng(101);
  int checked = 0;
  double worst = 0.0;
  while (checked < 500) {
    std::uniform_int_distribution<int> fr(1, 6), vs(2, 4);
    const int L = fr(rng), V = vs(rng);
    Posteriorgram p = random_log_post(rng, L, V);
    TargetSequence y = random_target(rng, 3, V);
    double dp, bf;
    try {
      dp = ctc_loss(p, y);
      bf = brute_force_ctc(p, y);
    } catch (const InfeasibleAlignment&) {
      continue;
    }
    worst = std::max(worst, std::abs(dp - bf));
    ++checked;
  }
  char d[96];
  std::snprintf(d, sizeof(d), "500 instances, max |dp - enumeration| = %.3g",
                worst);
  return report(1, "exact forward matches path enumeration", worst <= 1e-9, d);
}

bool criterion2() {
  std::mt19937_64 rng(102);
  double worst_zero = 0.0, worst_fact = 0.0;
  int checked = 0;
  while (checked < 200) {
    std::uniform_int_distribution<int> fr(1, 6), vs(2, 4);
    std::uniform_real_distribution<double> al(0.0, 1.0);
    const int L = fr(rng), V = vs(rng);
    Posteriorgram p = random_log_post(rng, L, V);
    TargetSequence y = random_target(rng, 3, V);
    NpcConfig zero;
    NpcConfig cfg;
    cfg.alpha = al(rng);
    try {
      worst_zero = std::max(worst_zero,
                            std::abs(npc_loss(p, y, zero) - ctc_loss(p, y)));
      Posteriorgram adj =
          adjusted_scores(p, softmax_prior(p.to_probs()), cfg.alpha);
      worst_fact = std::max(
          worst_fact, std::abs(npc_loss(p, y, cfg) -
                               ctc_forward_value(adj.values, L, V, y)));
    } catch (const InfeasibleAlignment&) {
      continue;
    }
    ++checked;
  }

  Posteriorgram two;
  two.frames = 2;
  two.vocab = 2;
  two.values = {0.5, 0.5, 0.5, 0.5};
  NpcConfig half;
  half.alpha = 0.5;
  const double hand = npc_loss(two, {1}, half);
  const bool hand_ok = std::abs(hand - (-std::log(1.5))) <= 1e-12;

  char d[128];
  std::snprintf(d, sizeof(d),
                "alpha=0 gap %.3g, factorization gap %.3g, hand case %.9f",
                worst_zero, worst_fact, hand);
  return report(2, "label-prior loss reductions",
                worst_zero <= 1e-12 && worst_fact <= 1e-12 && hand_ok, d);
}

bool criterion3() {
  std::mt19937_64 rng(103);
  double worst_kernel = 0.0;

  auto fd_max_err = [](const std::vector<double>& analytic,
                       const std::vector<double>& fd) {
    double worst = 0.0;
    for (size_t i = 0; i < fd.size(); ++i)
      worst = std::max(worst, std::abs(analytic[i] - fd[i]) /
                                  std::max(1.0, std::abs(fd[i])));
    return worst;
  };

  int checked = 0;
  while (checked < 20) {
    std::uniform_int_distribution<int> fr(2, 5), vs(2, 4);
    const int L = fr(rng), V = vs(rng);
    Posteriorgram p = random_log_post(rng, L, V);
    TargetSequence y = random_target(rng, 2, V);

    Tensor x1 = Tensor::from_data({L, V}, p.values, true);
    Tensor loss1;
    try {
      loss1 = ctc_loss_op(x1, y);
    } catch (const InfeasibleAlignment&) {
      continue;
    }
    x1.zero_grad();
    loss1.backward();
    worst_kernel = std::max(
        worst_kernel,
        fd_max_err(x1.grad(), finite_difference_grad(
                                  [&](const std::vector<double>& v) {
                                    return ctc_forward_value(v, L, V, y);
                                  },
                                  p.values)));

    NpcConfig cfg;
    cfg.alpha = 0.4;
    Tensor x2 = Tensor::from_data({L, V}, p.values, true);
    Tensor loss2 = npc_loss_op(x2, y, cfg);
    x2.zero_grad();
    loss2.backward();
    const auto prior0 = softmax_prior(p.to_probs());
    worst_kernel = std::max(
        worst_kernel,
        fd_max_err(x2.grad(),
                   finite_difference_grad(
                       [&](const std::vector<double>& v) {
                         Posteriorgram q = p;
                         q.values = v;
                         Posteriorgram adj =
                             adjusted_scores(q, prior0, cfg.alpha);
                         return ctc_forward_value(adj.values, L, V, y);
                       },
                       p.values)));
    ++checked;
  }

  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> ad(6), bd(6);
    for (auto& v : ad) v = d(rng);
    for (auto& v : bd) v = d(rng);
    Tensor a = Tensor::from_data({2, 3}, ad, true);
    Tensor b = Tensor::from_data({2, 3}, bd, true);
    Tensor loss = disentangle_loss_op(a, b, DisentangleMode::kSquaredCosine);
    a.zero_grad();
    b.zero_grad();
    loss.backward();
    worst_kernel = std::max(
        worst_kernel,
        fd_max_err(a.grad(), finite_difference_grad(
                                 [&](const std::vector<double>& v) {
                                   return disentangle_loss_op(
                                              Tensor::from_data({2, 3}, v),
                                              Tensor::from_data({2, 3}, bd),
                                              DisentangleMode::kSquaredCosine)
                                       .item();
                                 },
                                 ad)));
  }

  // Full objective on the dim-8 toy model, prior gradients enabled so plain
  // finite differences are the matching oracle.
  Utterance u = generate_corpus(toy_spec(), 1).utterances[0];
  ModelConfig mc = toy_model(Variant::kProposed);
  mc.npc.backprop_through_prior = true;
  Model m(mc);
  m.init_params(31);
  m.zero_grads();
  m.forward(u, u.frames, true).total.backward();
  double worst_model = 0.0;
  for (const std::string name :
       {"input.W", "shared1.attn.Wq", "shared3.ff.W1", "inject.B.W", "gate.W",
        "head.final.W", "head.lid.W", "expB1.attn.Wv", "cond.gt.W"}) {
    Tensor& p = m.params().at(name);
    const std::vector<double> analytic = p.grad();
    const std::vector<double> x0 = p.data();
    auto fd = finite_difference_grad(
        [&](const std::vector<double>& v) {
          p.mutable_data() = v;
          return m.forward(u, u.frames, true).losses.l_total;
        },
        x0, 1e-5);
    p.mutable_data() = x0;
    worst_model = std::max(worst_model, fd_max_err(analytic, fd));
  }

  char detail[128];
  std::snprintf(detail, sizeof(detail),
                "kernel max rel err %.3g, full-model max rel err %.3g",
                worst_kernel, worst_model);
  return report(3, "analytic gradients match finite differences",
                worst_kernel <= 1e-6 && worst_model <= 1e-4, detail);
}

bool criterion4() {
  Corpus c = generate_corpus(toy_spec(), 3);
  int pad = 0;
  for (const auto& u : c.utterances) pad = std::max(pad, u.frames);
  pad += 5;
  double worst = 0.0;
  for (Variant v : {Variant::kBaseline, Variant::kScctc, Variant::kScctcLid3,
                    Variant::kScctcLidAll, Variant::kDmoe, Variant::kProposed}) {
    Model m(toy_model(v));
    m.init_params(41);
    for (const auto& u : c.utterances) {
      ForwardResult alone = m.forward(u, u.frames, true);
      ForwardResult padded = m.forward(u, pad, true);
      for (double gap :
           {alone.losses.l_mix - padded.losses.l_mix,
            alone.losses.l_lang_a - padded.losses.l_lang_a,
            alone.losses.l_lang_b - padded.losses.l_lang_b,
            alone.losses.l_inter - padded.losses.l_inter,
            alone.losses.l_disentangle - padded.losses.l_disentangle,
            alone.losses.l_total - padded.losses.l_total})
        worst = std::max(worst, std::abs(gap));
    }
  }
  char d[96];
  std::snprintf(d, sizeof(d), "max component gap across variants %.3g", worst);
  return report(4, "losses are padding invariant", worst <= 1e-5, d);
}

bool criterion5() {
  DeskRun run = desk_train_and_eval(0.3, 7);
  char d[160];
  std::snprintf(d, sizeof(d),
                "held-out MER %.4f (limit 0.20), train wall-clock %.1f min%s",
                run.eval.mer.mer, run.minutes,
                run.cached ? " (cached run)" : "");
  const bool time_ok = run.cached || run.minutes <= 30.0;
  return report(5, "desk-scale model learns the task",
                run.eval.mer.mer <= 0.20 && time_ok, d);
}

bool criterion6() {
  const std::vector<uint64_t> seeds{7, 8, 9};
  double dom0 = 0.0, dom3 = 0.0, off0 = 0.0, off3 = 0.0;
  for (uint64_t s : seeds) {
    DeskRun r0 = desk_train_and_eval(0.0, s);
    DeskRun r3 = desk_train_and_eval(0.3, s);
    dom0 += r0.eval.boundary.blank_coverage / seeds.size();
    dom3 += r3.eval.boundary.blank_coverage / seeds.size();
    off0 += r0.eval.boundary.median_offset / seeds.size();
    off3 += r3.eval.boundary.median_offset / seeds.size();
  }
  DeskRun r5 = desk_train_and_eval(0.5, 7);
  char d[256];
  std::snprintf(d, sizeof(d),
                "LID blank dominance %.4f -> %.4f, median boundary offset "
                "%.3f -> %.3f (alpha 0 -> 0.3, mean of 3 seeds); alpha=0.5: "
                "MER %.4f, dominance %.4f, offset %.3f (reported only)",
                dom0, dom3, off0, off3, r5.eval.mer.mer,
                r5.eval.boundary.blank_coverage, r5.eval.boundary.median_offset);
  return report(6, "label prior flattens peaks and sharpens boundaries",
                dom3 < dom0 && off3 < off0, d);
}

bool criterion7() {
  RunConfig cfg;
  cfg.corpus = toy_spec();
  cfg.model = toy_model(Variant::kScctc);
  cfg.train.epochs = 2;
  cfg.train.warmup_steps = 10;
  cfg.train.batch_size = 4;
  cfg.train.keep_checkpoints = 2;
  cfg.train.average_top_k = 2;
  cfg.eval.decoder = "greedy";
  cfg.ablate_alphas = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  cfg.ablate_variants = {"scctc", "scctc_lidall", "scctc_lid3"};
  cfg.ablate_seeds = {1};

  Corpus corpus = generate_corpus(cfg.corpus, 30);
  const std::string dir = std::string(kCacheDir) + "/ablation_toy";
  fs::remove_all(dir);
  AblationReport first = run_ablation(cfg, corpus, dir);
  AblationReport second = run_ablation(cfg, corpus, dir);

  bool ok = first.cells.size() == 18 && second.cells.size() == 18;
  for (const auto& cell : first.cells) ok = ok && !cell.from_cache;
  for (const auto& cell : second.cells) ok = ok && cell.from_cache;
  const std::string table = ablation_table(second);
  for (const auto& v : cfg.ablate_variants)
    ok = ok && table.find(v) != std::string::npos;
  for (const char* a : {"alpha=0", "alpha=0.1", "alpha=0.5"})
    ok = ok && table.find(a) != std::string::npos;
  write_ablation_csv(second, dir + "/ablation.csv");
  ok = ok && fs::exists(dir + "/ablation.csv");
  char d[96];
  std::snprintf(d, sizeof(d), "%zu cells trained, %zu reloaded from cache",
                first.cells.size(), second.cells.size());
  return report(7, "ablation sweep is complete and resumable", ok, d);
}

bool criterion8() {
  bool ok = true;
  std::string failing;

  // Gate weights are a distribution on random forwards.
  Utterance u = generate_corpus(toy_spec(), 1).utterances[0];
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    Model m(toy_model(Variant::kProposed));
    m.init_params(seed);
    ForwardResult r = m.forward(u, u.frames, false);
    for (int t = 0; t < u.frames; ++t)
      if (std::abs(r.gate_weights[2 * t] + r.gate_weights[2 * t + 1] - 1.0) >
          1e-12)
        ok = false, failing = "gate weights";
  }

  // Averaging identical checkpoints is the identity.
  {
    Corpus c = generate_corpus(toy_spec(), 8);
    Model m(toy_model(Variant::kBaseline));
    TrainConfig tc;
    tc.epochs = 1;
    tc.warmup_steps = 10;
    tc.batch_size = 4;
    tc.average_top_k = 1;
    tc.keep_checkpoints = 1;
    const std::string dir = std::string(kCacheDir) + "/unit_avg";
    fs::remove_all(dir);
    train(tc, c, m, dir);
    Checkpoint ck = load_checkpoint(dir + "/ckpt_epoch_1.json");
    Model avg = average_checkpoints(
        {dir + "/ckpt_epoch_1.json", dir + "/ckpt_epoch_1.json"}, 2);
    for (auto& [name, t] : avg.params())
      if (t.data() != ck.params.at(name)) ok = false, failing = "averaging";
  }

  // MER hand examples.
  {
    Vocabulary v = Vocabulary::make(3, 2);
    const int a0 = v.lang_a_token(0), a1 = v.lang_a_token(1),
              a2 = v.lang_a_token(2);
    const int b0 = v.lang_b_token(0), b1 = v.lang_b_token(1);
    if (mer({{a0, b0}}, {{a0, b0}}, v).mer != 0.0)
      ok = false, failing = "mer exact";
    EditOps e = edit_distance({a0, a2, b0, b0}, {a0, a1, b0, b1}, v);
    if (e.distance != 2 || e.sub_a != 1 || e.sub_b != 1)
      ok = false, failing = "mer per-language";
    MerReport pooled =
        mer({{a1}, TargetSequence(9, a0)}, {{a0}, TargetSequence(9, a0)}, v);
    if (std::abs(pooled.mer - 0.1) > 1e-12) ok = false, failing = "mer pooling";
  }

  // Warmup equality point.
  {
    const double lhs = lr_schedule(500, 32, 500, 1.0);
    const double rhs = std::pow(32, -0.5) * std::pow(500, -0.5);
    if (std::abs(lhs - rhs) > 1e-15) ok = false, failing = "lr schedule";
  }

  // Corpus round trip.
  {
    Corpus c = generate_corpus(toy_spec(), 10);
    const std::string path = std::string(kCacheDir) + "/unit_corpus.jsonl";
    fs::create_directories(kCacheDir);
    save_corpus(c, path);
    if (!(load_corpus(path).utterances == c.utterances))
      ok = false, failing = "corpus round trip";
  }

  // Two identical runs, identical metrics logs.
  {
    Corpus c = generate_corpus(toy_spec(), 10);
    TrainConfig tc;
    tc.epochs = 2;
    tc.warmup_steps = 10;
    tc.batch_size = 4;
    tc.seed = 5;
    tc.average_top_k = 1;
    tc.keep_checkpoints = 2;
    const std::string d1 = std::string(kCacheDir) + "/unit_det1";
    const std::string d2 = std::string(kCacheDir) + "/unit_det2";
    fs::remove_all(d1);
    fs::remove_all(d2);
    Model m1(toy_model(Variant::kProposed));
    Model m2(toy_model(Variant::kProposed));
    train(tc, c, m1, d1);
    train(tc, c, m2, d2);
    auto slurp = [](const std::string& p) {
      std::ifstream f(p);
      return std::string((std::istreambuf_iterator<char>(f)),
                         std::istreambuf_iterator<char>());
    };
    const std::string log1 = slurp(d1 + "/metrics.jsonl");
    if (log1.empty() || log1 != slurp(d2 + "/metrics.jsonl"))
      ok = false, failing = "determinism";
  }

  return report(8, "unit-property bundle", ok,
                ok ? "gates, averaging, error rates, schedule, round trip, "
                     "determinism"
                   : "first failing group: " + failing);
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  auto enabled = [&](int n) { return wanted.empty() || wanted.count(n); };

  fs::create_directories(kCacheDir);
  bool all_ok = true;
  if (enabled(1)) all_ok &= criterion1();
  if (enabled(2)) all_ok &= criterion2();
  if (enabled(3)) all_ok &= criterion3();
  if (enabled(4)) all_ok &= criterion4();
  if (enabled(5)) all_ok &= criterion5();
  if (enabled(6)) all_ok &= criterion6();
  if (enabled(7)) all_ok &= criterion7();
  if (enabled(8)) all_ok &= criterion8();
  std::printf("acceptance: %s\n", all_ok ? "ALL PASS" : "FAILURES");
  return all_ok ? 0 : 1;
}
