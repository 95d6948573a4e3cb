// lattice/ctc.h
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

#ifndef LATTICE_CTC_H_
#define LATTICE_CTC_H_

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lattice/tensor.h"

namespace lattice {

// Exact log-space CTC forward-backward, the non-peaky variant with a
// sequence-wise softmax prior, decoding, and brute-force oracles.

struct InfeasibleAlignment : std::runtime_error {
  explicit InfeasibleAlignment(const std::string& msg)
      : std::runtime_error(msg) {}
};
struct PriorUnderflow : std::runtime_error {
  explicit PriorUnderflow(const std::string& msg) : std::runtime_error(msg) {}
};

enum class LangTag { kLangA, kLangB, kSpecial };

// Token inventory. Index 0 is always <blank>; <other>, <A> and <B> (the
// language indicator labels) follow, then the per-language tokens.
class Vocabulary {
 public:
  static constexpr int kBlank = 0;
  static constexpr int kOther = 1;
  static constexpr int kIndicatorA = 2;
  static constexpr int kIndicatorB = 3;
  static constexpr int kNumSpecials = 4;

  // LID sub-vocabulary {<blank>, <A>, <B>} used by the LID head.
  static constexpr int kLidBlank = 0;
  static constexpr int kLidA = 1;
  static constexpr int kLidB = 2;
  static constexpr int kLidSize = 3;

  Vocabulary() = default;
  static Vocabulary make(int lang_a_tokens, int lang_b_tokens);

  int size() const { return static_cast<int>(names_.size()); }
  int lang_a_count() const { return lang_a_count_; }
  int lang_b_count() const { return lang_b_count_; }
  const std::string& name(int idx) const { return names_[idx]; }
  LangTag tag(int idx) const { return tags_[idx]; }
  int lang_a_token(int i) const { return kNumSpecials + i; }
  int lang_b_token(int i) const { return kNumSpecials + lang_a_count_ + i; }
  std::optional<int> index_of(const std::string& name) const;

 private:
  std::vector<std::string> names_;
  std::vector<LangTag> tags_;
  int lang_a_count_ = 0;
  int lang_b_count_ = 0;
};

using TargetSequence = std::vector<int>;   // token indices, no blanks
using AlignmentPath = std::vector<int>;    // length-L frame labels

// Frame-by-vocabulary matrix; probabilities or log-probabilities per `log_space`.
struct Posteriorgram {
  int frames = 0;
  int vocab = 0;
  bool log_space = false;
  std::vector<double> values;  // row-major frames x vocab

  double at(int t, int v) const { return values[static_cast<size_t>(t) * vocab + v]; }
  Posteriorgram to_probs() const;
  Posteriorgram to_log() const;
  static Posteriorgram from_tensor(const Tensor& t, bool log_space);
};

struct NpcConfig {
  double alpha = 0.0;
  bool backprop_through_prior = false;
};

// Removes repeated adjacent tokens, then removes blanks.
TargetSequence collapse(const AlignmentPath& path);

// -log sum over collapsing alignments of exp(sum of per-frame scores).
// `log_scores` is L x V and need not be normalized (the NPC-adjusted scores
// are not). Throws InfeasibleAlignment when no valid path exists.
double ctc_forward_value(const std::vector<double>& log_scores, int frames,
                         int vocab, const TargetSequence& target);
// Same, with d(loss)/d(score[t][v]).
double ctc_forward_backward(const std::vector<double>& log_scores, int frames,
                            int vocab, const TargetSequence& target,
                            std::vector<double>* grad);

// Differentiable CTC loss over a graph tensor of per-frame log scores.
Tensor ctc_loss_op(const Tensor& log_scores, const TargetSequence& target);

// Plain CTC loss on a posteriorgram (log or probability space).
double ctc_loss(const Posteriorgram& post, const TargetSequence& target);

// Exhaustive |V|^L path enumeration oracle; throws when the instance is too
// large to enumerate. Accepts unnormalized log scores like the DP does.
double brute_force_ctc(const Posteriorgram& post, const TargetSequence& target,
                       int max_frames = 8, int max_vocab = 5);

// Frame-averaged posterior distribution.
std::vector<double> softmax_prior(const Posteriorgram& post);

// row[t][v] = log_post[t][v] - alpha * log(prior[v]). Prior components must
// be positive wherever alpha > 0.
Posteriorgram adjusted_scores(const Posteriorgram& log_post,
                              const std::vector<double>& prior, double alpha);

// Non-peaky CTC on a posteriorgram (value only).
double npc_loss(const Posteriorgram& post, const TargetSequence& target,
                const NpcConfig& cfg);

// Differentiable non-peaky CTC. The prior is computed from the scores and
// clamped to >= prior_floor before the log; it is detached unless
// cfg.backprop_through_prior is set.
Tensor npc_loss_op(const Tensor& log_post, const TargetSequence& target,
                   const NpcConfig& cfg, double prior_floor = 1e-12);

// Frame-wise argmax labels; ties break to the lowest token index.
AlignmentPath best_path_align(const Posteriorgram& post);

TargetSequence greedy_decode(const Posteriorgram& post);

// Standard CTC prefix beam search over blank/non-blank prefix probabilities.
TargetSequence prefix_beam_decode(const Posteriorgram& post, int width = 10);

// CSV export: header `frame,<token names...>`, probabilities with six
// decimal places.
void export_posteriorgram_csv(const Posteriorgram& post,
                              const std::vector<std::string>& token_names,
                              const std::string& path);

double log_add(double a, double b);

}  // namespace lattice

#endif  // LATTICE_CTC_H_
