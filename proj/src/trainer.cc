// lattice/trainer.cc
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

#include "lattice/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lattice/config.h"
#include "lattice/evaluation.h"

namespace lattice {

namespace fs = std::filesystem;
using nlohmann::json;

double lr_schedule(int64_t step, int model_dim, int warmup_steps,
                   double scale) {
  if (step < 1) throw std::invalid_argument("lr_schedule: step < 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup_steps);
  return scale / std::sqrt(static_cast<double>(model_dim)) *
         std::min(1.0 / std::sqrt(s), s / (w * std::sqrt(w)));
}

void adam_step(std::map<std::string, Tensor>& params, AdamState& state,
               const TrainConfig& cfg, double lr) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (auto& [name, t] : params) {
    const auto& g = t.grad();
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.size() != g.size()) m.assign(g.size(), 0.0);
    if (v.size() != g.size()) v.assign(g.size(), 0.0);
    auto& p = t.mutable_data();
    for (size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i]))
        throw TrainingDiverged("non-finite gradient in parameter " + name);
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.adam_eps);
    }
  }
}

std::vector<Batch> make_batches(const std::vector<const Utterance*>& utts,
                                int batch_size, std::mt19937_64& rng) {
  if (batch_size < 1) throw std::invalid_argument("make_batches: batch size");
  std::vector<int> order(utts.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Batch> batches;
  for (size_t start = 0; start < order.size(); start += batch_size) {
    Batch b;
    for (size_t i = start; i < std::min(order.size(), start + batch_size); ++i) {
      b.utterances.push_back(order[i]);
      b.max_frames = std::max(b.max_frames, utts[order[i]]->frames);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

namespace {

json loss_to_json(const LossBreakdown& l) {
  return json{{"l_mix", l.l_mix},
              {"l_lang_a", l.l_lang_a},
              {"l_lang_b", l.l_lang_b},
              {"l_inter_lid", l.l_inter_lid},
              {"l_inter_gt", l.l_inter_gt},
              {"l_inter", l.l_inter},
              {"l_disentangle", l.l_disentangle},
              {"l_total", l.l_total}};
}

void atomic_write(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << contents;
  }
  fs::rename(tmp, path);
}

json adam_state_to_json(const AdamState& s) {
  return json{{"m", s.m}, {"v", s.v}, {"step", s.step}};
}

AdamState adam_state_from_json(const json& j) {
  AdamState s;
  s.m = j.at("m").get<std::map<std::string, std::vector<double>>>();
  s.v = j.at("v").get<std::map<std::string, std::vector<double>>>();
  s.step = j.at("step");
  return s;
}

struct ManifestEntry {
  int epoch;
  std::string file;
  double val_mer;
  double val_loss;
};

void write_manifest(const std::string& dir,
                    const std::vector<ManifestEntry>& entries) {
  json arr = json::array();
  for (const auto& e : entries)
    arr.push_back(json{{"epoch", e.epoch},
                       {"file", e.file},
                       {"val_mer", e.val_mer},
                       {"val_loss", e.val_loss}});
  atomic_write(dir + "/manifest.json", json{{"checkpoints", arr}}.dump(2) + "\n");
}

// Ranking used for both pruning and averaging: lowest validation MER, ties
// by lower loss then earlier epoch.
bool better(const ManifestEntry& a, const ManifestEntry& b) {
  if (a.val_mer != b.val_mer) return a.val_mer < b.val_mer;
  if (a.val_loss != b.val_loss) return a.val_loss < b.val_loss;
  return a.epoch < b.epoch;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  json j{{"version", ckpt.version},
         {"config", model_config_to_json(ckpt.config)},
         {"epoch", ckpt.epoch},
         {"step", ckpt.step},
         {"val_mer", ckpt.val_mer},
         {"val_loss", ckpt.val_loss},
         {"params", ckpt.params}};
  if (ckpt.has_opt) {
    j["opt"] = adam_state_to_json(ckpt.opt);
    j["rng"] = ckpt.rng_state;
  }
  atomic_write(path, j.dump());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  json j;
  in >> j;
  Checkpoint c;
  c.version = j.at("version");
  if (c.version != 1)
    throw std::runtime_error("unsupported checkpoint version in " + path);
  c.config = model_config_from_json(j.at("config"));
  c.epoch = j.at("epoch");
  c.step = j.at("step");
  c.val_mer = j.at("val_mer");
  c.val_loss = j.at("val_loss");
  c.params = j.at("params").get<std::map<std::string, std::vector<double>>>();
  if (j.contains("opt")) {
    c.has_opt = true;
    c.opt = adam_state_from_json(j.at("opt"));
    c.rng_state = j.at("rng");
  }
  return c;
}

void load_params_into(Model& model,
                      const std::map<std::string, std::vector<double>>& params) {
  for (auto& [name, t] : model.params()) {
    auto it = params.find(name);
    if (it == params.end())
      throw std::runtime_error("checkpoint missing parameter " + name);
    if (it->second.size() != static_cast<size_t>(t.size()))
      throw std::runtime_error("checkpoint parameter size mismatch for " + name);
    t.mutable_data() = it->second;
  }
}

Model average_checkpoints(const std::vector<std::string>& paths, int k) {
  if (static_cast<int>(paths.size()) < k || k < 1)
    throw std::invalid_argument("average_checkpoints: need at least k checkpoints");
  std::vector<Checkpoint> ckpts;
  ckpts.reserve(paths.size());
  for (const auto& p : paths) ckpts.push_back(load_checkpoint(p));
  const json ref_config = model_config_to_json(ckpts[0].config);
  for (const auto& c : ckpts)
    if (model_config_to_json(c.config) != ref_config)
      throw std::runtime_error("average_checkpoints: incompatible configs");
  std::vector<int> order(ckpts.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return better({ckpts[a].epoch, "", ckpts[a].val_mer, ckpts[a].val_loss},
                  {ckpts[b].epoch, "", ckpts[b].val_mer, ckpts[b].val_loss});
  });
  Model model(ckpts[0].config);
  for (auto& [name, t] : model.params()) {
    auto& out = t.mutable_data();
    std::fill(out.begin(), out.end(), 0.0);
    for (int i = 0; i < k; ++i) {
      const auto& src = ckpts[order[i]].params.at(name);
      if (src.size() != out.size())
        throw std::runtime_error("average_checkpoints: size mismatch for " + name);
      for (size_t j = 0; j < out.size(); ++j) out[j] += src[j];
    }
    for (auto& v : out) v /= k;
  }
  return model;
}

TrainResult train(const TrainConfig& cfg, const Corpus& corpus, Model& model,
                  const std::string& out_dir, const std::string& resume_from) {
  cfg.validate();
  model.config().validate();
  fs::create_directories(out_dir);

  const int n = static_cast<int>(corpus.utterances.size());
  const int n_val = static_cast<int>(std::lround(cfg.val_fraction * n));
  std::vector<const Utterance*> train_utts, val_utts;
  for (int i = 0; i < n - n_val; ++i) train_utts.push_back(&corpus.utterances[i]);
  for (int i = n - n_val; i < n; ++i) val_utts.push_back(&corpus.utterances[i]);
  if (train_utts.empty()) throw std::invalid_argument("train: empty corpus");

  std::mt19937_64 run_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  AdamState opt;
  int start_epoch = 0;
  std::vector<ManifestEntry> manifest;

  if (resume_from.empty()) {
    model.init_params(cfg.seed);
    // Fresh metrics log.
    std::ofstream(out_dir + "/metrics.jsonl", std::ios::trunc);
  } else {
    Checkpoint c = load_checkpoint(resume_from);
    if (!c.has_opt)
      throw std::runtime_error("resume checkpoint has no optimizer state");
    load_params_into(model, c.params);
    opt = c.opt;
    start_epoch = c.epoch;
    std::istringstream(c.rng_state) >> run_rng;
  }

  const std::string metrics_path = out_dir + "/metrics.jsonl";
  TrainResult result;

  for (int epoch = start_epoch + 1; epoch <= cfg.epochs; ++epoch) {
    const auto batches = make_batches(train_utts, cfg.batch_size, run_rng);
    LossBreakdown epoch_loss;
    int64_t n_seen = 0;
    for (const auto& batch : batches) {
      model.zero_grads();
      double batch_total = 0.0;
      for (int idx : batch.utterances) {
        const Utterance& u = *train_utts[idx];
        ForwardResult res = model.forward(
            u, batch.max_frames, /*with_loss=*/true,
            model.config().dropout > 0.0 ? &run_rng : nullptr);
        if (!std::isfinite(res.losses.l_total))
          throw TrainingDiverged("non-finite training loss at epoch " +
                                 std::to_string(epoch));
        batch_total += res.losses.l_total;
        epoch_loss.l_mix += res.losses.l_mix;
        epoch_loss.l_lang_a += res.losses.l_lang_a;
        epoch_loss.l_lang_b += res.losses.l_lang_b;
        epoch_loss.l_inter_lid += res.losses.l_inter_lid;
        epoch_loss.l_inter_gt += res.losses.l_inter_gt;
        epoch_loss.l_inter += res.losses.l_inter;
        epoch_loss.l_disentangle += res.losses.l_disentangle;
        epoch_loss.l_total += res.losses.l_total;
        ++n_seen;
        scale(res.total, 1.0 / batch.utterances.size()).backward();
      }
      (void)batch_total;
      if (cfg.grad_clip > 0.0) {
        double norm2 = 0.0;
        for (auto& [name, t] : model.params())
          for (double g : t.grad()) norm2 += g * g;
        const double norm = std::sqrt(norm2);
        if (norm > cfg.grad_clip) {
          const double s = cfg.grad_clip / norm;
          for (auto& [name, t] : model.params()) {
            auto node = t.node();
            for (auto& g : node->grad) g *= s;
          }
        }
      }
      const double lr = lr_schedule(opt.step + 1, model.config().model_dim,
                                    cfg.warmup_steps, cfg.lr_scale);
      adam_step(model.params(), opt, cfg, lr);
    }
    const double inv = n_seen ? 1.0 / n_seen : 0.0;
    epoch_loss.l_mix *= inv;
    epoch_loss.l_lang_a *= inv;
    epoch_loss.l_lang_b *= inv;
    epoch_loss.l_inter_lid *= inv;
    epoch_loss.l_inter_gt *= inv;
    epoch_loss.l_inter *= inv;
    epoch_loss.l_disentangle *= inv;
    epoch_loss.l_total *= inv;

    // Validation loss and greedy-decode MER.
    double val_loss = epoch_loss.l_total;
    double val_mer = 0.0;
    if (!val_utts.empty()) {
      double loss_sum = 0.0;
      std::vector<TargetSequence> hyps, refs;
      for (const Utterance* u : val_utts) {
        ForwardResult res = model.forward(*u, u->frames, /*with_loss=*/true);
        loss_sum += res.losses.l_total;
        hyps.push_back(greedy_decode(res.final_post));
        refs.push_back(build_mixed_target(*u));
      }
      val_loss = loss_sum / val_utts.size();
      val_mer = mer(hyps, refs, model.vocab()).mer;
    }

    EpochMetrics em{epoch, epoch_loss, val_loss, val_mer};
    result.metrics.push_back(em);
    {
      std::ofstream log(metrics_path, std::ios::app);
      json line = loss_to_json(epoch_loss);
      line["epoch"] = epoch;
      line["val_loss"] = val_loss;
      line["val_mer"] = val_mer;
      log << line.dump() << "\n";
    }

    // Per-epoch checkpoint (parameters only) plus a resumable last-state.
    Checkpoint ckpt;
    ckpt.config = model.config();
    ckpt.epoch = epoch;
    ckpt.step = opt.step;
    ckpt.val_mer = val_mer;
    ckpt.val_loss = val_loss;
    for (const auto& [name, t] : model.params()) ckpt.params[name] = t.data();
    const std::string file = "ckpt_epoch_" + std::to_string(epoch) + ".json";
    save_checkpoint(ckpt, out_dir + "/" + file);
    manifest.push_back({epoch, file, val_mer, val_loss});

    ckpt.has_opt = true;
    ckpt.opt = opt;
    std::ostringstream rng_out;
    rng_out << run_rng;
    ckpt.rng_state = rng_out.str();
    save_checkpoint(ckpt, out_dir + "/last_state.json");

    // Retention: best keep_checkpoints by validation score, plus the latest.
    if (static_cast<int>(manifest.size()) > cfg.keep_checkpoints) {
      std::vector<ManifestEntry> ranked = manifest;
      std::sort(ranked.begin(), ranked.end(), better);
      std::vector<ManifestEntry> kept(ranked.begin(),
                                      ranked.begin() + cfg.keep_checkpoints);
      if (std::none_of(kept.begin(), kept.end(),
                       [&](const auto& e) { return e.epoch == epoch; }))
        kept.push_back(manifest.back());
      for (const auto& e : manifest) {
        if (std::none_of(kept.begin(), kept.end(),
                         [&](const auto& ke) { return ke.epoch == e.epoch; }))
          fs::remove(out_dir + "/" + e.file);
      }
      std::sort(kept.begin(), kept.end(),
                [](const auto& a, const auto& b) { return a.epoch < b.epoch; });
      manifest = std::move(kept);
    }
    write_manifest(out_dir, manifest);
  }

  // Final model: mean of the top-k checkpoints by validation score.
  const int k = std::min<int>(cfg.average_top_k, static_cast<int>(manifest.size()));
  std::vector<std::string> paths;
  for (const auto& e : manifest) paths.push_back(out_dir + "/" + e.file);
  Model averaged = average_checkpoints(paths, k);
  Checkpoint final_ckpt;
  final_ckpt.config = averaged.config();
  final_ckpt.epoch = cfg.epochs;
  final_ckpt.step = opt.step;
  for (const auto& [name, t] : averaged.params())
    final_ckpt.params[name] = t.data();
  result.final_model_path = out_dir + "/final_model.json";
  save_checkpoint(final_ckpt, result.final_model_path);
  return result;
}

}  // namespace lattice
