// lattice/trainer.h
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

#ifndef LATTICE_TRAINER_H_
#define LATTICE_TRAINER_H_

#include <map>
#include <random>
#include <string>
#include <vector>

#include "lattice/corpus.h"
#include "lattice/model.h"
#include "lattice/trainer_types.h"

namespace lattice {

struct TrainingDiverged : std::runtime_error {
  explicit TrainingDiverged(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Inverse-square-root warmup: scale * dim^-0.5 * min(step^-0.5, step * warmup^-1.5).
double lr_schedule(int64_t step, int model_dim, int warmup_steps, double scale);

struct AdamState {
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;
  int64_t step = 0;
};

// Bias-corrected Adam over all parameters; aborts with the parameter name on
// a non-finite gradient.
void adam_step(std::map<std::string, Tensor>& params, AdamState& state,
               const TrainConfig& cfg, double lr);

struct Batch {
  std::vector<int> utterances;  // indices into the corpus
  int max_frames = 0;
};

std::vector<Batch> make_batches(const std::vector<const Utterance*>& utts,
                                int batch_size, std::mt19937_64& rng);

struct EpochMetrics {
  int epoch = 0;
  LossBreakdown train_loss;
  double val_loss = 0.0;
  double val_mer = 0.0;
};

struct TrainResult {
  std::vector<EpochMetrics> metrics;
  std::string final_model_path;  // averaged top-k model
};

// Runs the full training loop: seeded init, per-epoch validation, per-epoch
// checkpoints under out_dir, metrics log (metrics.jsonl), and top-k
// checkpoint averaging into final_model.json.
TrainResult train(const TrainConfig& cfg, const Corpus& corpus, Model& model,
                  const std::string& out_dir,
                  const std::string& resume_from = "");

// ---- checkpoints ----

struct Checkpoint {
  int version = 1;
  ModelConfig config;
  int epoch = 0;
  int64_t step = 0;
  double val_mer = 0.0;
  double val_loss = 0.0;
  std::map<std::string, std::vector<double>> params;
  bool has_opt = false;
  AdamState opt;
  std::string rng_state;  // serialized run RNG for exact resume
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);
void load_params_into(Model& model,
                      const std::map<std::string, std::vector<double>>& params);

// Selects the k best checkpoints (lowest val MER, ties by lower loss then
// earlier epoch) and arithmetic-means every parameter tensor.
Model average_checkpoints(const std::vector<std::string>& paths, int k);

}  // namespace lattice

#endif  // LATTICE_TRAINER_H_
