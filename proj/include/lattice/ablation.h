// lattice/ablation.h
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

#ifndef LATTICE_ABLATION_H_
#define LATTICE_ABLATION_H_

#include <string>
#include <vector>

#include "lattice/config.h"
#include "lattice/evaluation.h"
#include "lattice/model.h"
#include "lattice/trainer.h"

namespace lattice {

// Decodes every utterance and aggregates MER, peakiness of the final head,
// and (when the model carries an LID head) boundary metrics against the gold
// frame languages. Peakiness and blank coverage are frame-weighted across
// utterances; boundary offsets and F1 are means of per-utterance values.
struct EvalSummary {
  MerReport mer;
  PeakinessReport peak;
  BoundaryReport boundary;
  bool has_lid = false;
};

EvalSummary evaluate_model(const Model& model,
                           const std::vector<const Utterance*>& utts,
                           const EvalConfig& eval);

struct AblationCell {
  std::string variant;
  double alpha = 0.0;
  uint64_t seed = 1;
  EvalSummary eval;
  double best_val_mer = 0.0;
  bool from_cache = false;
};

struct AblationReport {
  std::vector<AblationCell> cells;
};

// Trains and evaluates every (variant, alpha, seed) cell of the config's
// grid. The last tenth of the corpus is held out for evaluation. Each cell
// persists its result as JSON under out_dir; completed cells are reloaded
// instead of retrained, so an interrupted sweep resumes where it stopped.
AblationReport run_ablation(const RunConfig& cfg, const Corpus& corpus,
                            const std::string& out_dir);

// Variant rows by alpha columns, mean MER over seeds, plus per-cell detail
// lines with peakiness and boundary numbers.
std::string ablation_table(const AblationReport& report);

// One row per cell: variant,alpha,seed,mer,cer_a,wer_b,blank_dominance,
// mean_max_posterior,boundary_f1,median_offset,blank_coverage.
void write_ablation_csv(const AblationReport& report, const std::string& path);

}  // namespace lattice

#endif  // LATTICE_ABLATION_H_
