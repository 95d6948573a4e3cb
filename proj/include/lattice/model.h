// lattice/model.h
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

#ifndef LATTICE_MODEL_H_
#define LATTICE_MODEL_H_

#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lattice/corpus.h"
#include "lattice/ctc.h"
#include "lattice/tensor.h"

namespace lattice {

// Transformer-encoder model family: baseline CTC, self-conditioned variants,
// and the mixture-of-experts stack with an LID information block,
// disentanglement, gating, and deep language posterior injection.

enum class Variant {
  kBaseline,
  kScctc,
  kScctcLid3,
  kScctcLidAll,
  kDmoe,
  kProposed,
};

enum class DisentangleMode { kSquaredCosine, kPlainCosine };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelConfig {
  Variant variant = Variant::kProposed;
  int feature_dim = 16;
  int model_dim = 256;
  int ff_dim = 2048;
  int heads = 4;
  // Single-encoder family (Baseline / SCCTC variants).
  int num_blocks = 15;
  std::vector<int> taps = {3, 6, 9, 12};  // loss after block k (1-based)
  int lid_tap = 3;                        // which tap carries the LID target
  // Mixture-of-experts family.
  int shared_blocks = 9;
  int expert_blocks = 3;
  int shared_lid_tap = 3;
  int shared_gt_tap = 6;
  double lambda_disentangle = 10.0;
  NpcConfig npc;
  std::optional<double> alpha_mix;    // per-head overrides of npc.alpha
  std::optional<double> alpha_lang;
  std::optional<double> alpha_inter;
  bool posterior_injection = true;
  bool condition_taps = true;
  LidTargetMode lid_target_mode = LidTargetMode::kPerToken;
  DisentangleMode disentangle_mode = DisentangleMode::kSquaredCosine;
  double dropout = 0.0;
  int beam_width = 10;
  int lang_a_vocab = 20;
  int lang_b_vocab = 20;

  bool is_moe() const {
    return variant == Variant::kDmoe || variant == Variant::kProposed;
  }
  bool has_taps() const {
    return variant == Variant::kScctc || variant == Variant::kScctcLid3 ||
           variant == Variant::kScctcLidAll;
  }
  void validate() const;
};

struct LossBreakdown {
  double l_mix = 0.0;
  double l_lang_a = 0.0;
  double l_lang_b = 0.0;
  double l_inter_lid = 0.0;
  double l_inter_gt = 0.0;
  double l_inter = 0.0;  // mean over active intermediate heads
  double l_disentangle = 0.0;
  double l_total = 0.0;
};

struct ForwardResult {
  Tensor total;                 // graph scalar when losses were computed
  LossBreakdown losses;
  Posteriorgram final_post;     // probability space, true frames only
  Posteriorgram lid_post;       // probability space, true frames x 3
  std::vector<Posteriorgram> tap_posts;
  std::vector<double> gate_weights;  // true frames x 2, row-major
  bool has_lid = false;
};

// Mean over rows of cos^2 (or cos) between paired rows of a and b.
// Zero-norm rows contribute zero.
Tensor disentangle_loss_op(const Tensor& a, const Tensor& b,
                           DisentangleMode mode);

class Model {
 public:
  explicit Model(const ModelConfig& config);

  void init_params(uint64_t seed);
  std::map<std::string, Tensor>& params() { return params_; }
  const std::map<std::string, Tensor>& params() const { return params_; }
  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  int64_t num_params() const;

  // Runs the variant's full pipeline on one utterance, padded to pad_frames
  // (>= u.frames; the extra frames are masked). When with_loss is set all
  // loss heads run against targets built from the utterance; otherwise only
  // the posteriorgrams are produced.
  ForwardResult forward(const Utterance& u, int pad_frames, bool with_loss,
                        std::mt19937_64* dropout_rng = nullptr) const;

  void zero_grads();

 private:
  Tensor param(const std::string& name) const;
  Tensor encoder_block(const std::string& prefix, const Tensor& x,
                       const Tensor& mask_row,
                       std::mt19937_64* dropout_rng) const;
  Tensor multi_head_attention(const std::string& prefix, const Tensor& x,
                              const Tensor& mask_row) const;
  // Adds a CTC head at `name`; fills loss/post and returns the conditioned
  // stream (input + softmax-posteriors * conditioning matrix).
  Tensor tap_head(const std::string& name, const Tensor& h, int true_frames,
                  const TargetSequence* target, double alpha, bool condition,
                  Tensor* loss_out, Posteriorgram* post_out) const;

  ModelConfig config_;
  Vocabulary vocab_;
  std::map<std::string, Tensor> params_;
};

}  // namespace lattice

#endif  // LATTICE_MODEL_H_
