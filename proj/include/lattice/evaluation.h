// lattice/evaluation.h
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

#ifndef LATTICE_EVALUATION_H_
#define LATTICE_EVALUATION_H_

#include <string>
#include <vector>

#include "lattice/ctc.h"

namespace lattice {

// Mixed error rate over both languages: language-A tokens are scored like
// characters, language-B tokens like words, pooled into one rate.

struct EditOps {
  int distance = 0;
  int sub_a = 0, ins_a = 0, del_a = 0;
  int sub_b = 0, ins_b = 0, del_b = 0;
};

struct MerReport {
  double mer = 0.0;
  double cer_a = 0.0;  // error rate restricted to language-A reference tokens
  double wer_b = 0.0;
  EditOps ops;
  int ref_tokens_a = 0;
  int ref_tokens_b = 0;
  int utterances = 0;
};

struct PeakinessReport {
  double blank_dominance = 0.0;  // fraction of frames with blank posterior > tau
  double mean_max_posterior = 0.0;
  double tau = 0.9;
};

struct BoundaryReport {
  double median_offset = 0.0;  // median symmetric |frames| between gold and
                               // predicted switch points
  double f1 = 0.0;             // switch detection F1 at the given tolerance
  double blank_coverage = 0.0; // fraction of frames with blank posterior > 0.5
  int tolerance = 2;
  int gold_switches = 0;
  int pred_switches = 0;
};

// Minimal sub+ins+del alignment. Substitutions and deletions are attributed
// to the reference token's language, insertions to the hypothesis token's.
EditOps edit_distance(const TargetSequence& hyp, const TargetSequence& ref,
                      const Vocabulary& vocab);

// Corpus-level aggregation: pooled error counts over pooled reference
// tokens, never a mean of per-utterance rates.
MerReport mer(const std::vector<TargetSequence>& hyps,
              const std::vector<TargetSequence>& refs,
              const Vocabulary& vocab);

PeakinessReport peakiness(const Posteriorgram& post, double tau = 0.9);

constexpr int kLangUnknown = -1;

// Per-frame language from an LID posteriorgram: blank is excluded and the
// two language posteriors renormalized; frames where both fall below 1e-6
// are labeled kLangUnknown. Ties go to language A.
std::vector<int> frame_language(const Posteriorgram& lid_post);

BoundaryReport boundary_metrics(const std::vector<int>& pred_frame_langs,
                                const std::vector<int>& gold_frame_langs,
                                int tolerance = 2);

// Blank coverage of an LID posteriorgram, reported next to boundary stats.
double blank_coverage(const Posteriorgram& lid_post);

void export_posteriorgram(const Posteriorgram& post, const Vocabulary& vocab,
                          const std::string& path);

}  // namespace lattice

#endif  // LATTICE_EVALUATION_H_
