// lattice/corpus.h
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

#ifndef LATTICE_CORPUS_H_
#define LATTICE_CORPUS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "lattice/ctc.h"

namespace lattice {

// Synthetic two-language code-switching corpus with gold frame-level
// language segments. Each token owns a fixed prototype vector; a configurable
// fraction of cross-language token pairs share one prototype (homophones).

struct CorpusSpec {
  int lang_a_vocab = 20;
  int lang_b_vocab = 20;
  int feature_dim = 16;
  int min_token_frames = 2;
  int max_token_frames = 5;
  double noise_std = 0.3;
  double switch_prob = 0.3;
  int min_tokens = 8;
  int max_tokens = 20;
  double homophone_fraction = 0.25;
  uint64_t seed = 1;
};

struct TokenSpan {
  int begin = 0;  // first frame, inclusive
  int end = 0;    // one past last frame

  bool operator==(const TokenSpan&) const = default;
};

enum class Lang { kA, kB };

struct Utterance {
  std::string id;
  int frames = 0;
  int feature_dim = 0;
  std::vector<double> features;       // frames x feature_dim, row-major
  TargetSequence tokens;              // mixed token target (full vocab ids)
  std::vector<Lang> token_langs;      // one tag per token
  std::vector<Lang> frame_langs;      // gold per-frame language labels
  std::vector<TokenSpan> spans;       // gold per-token frame spans

  bool operator==(const Utterance&) const = default;
};

enum class LidTargetMode { kPerToken, kRunCollapsed };

struct Corpus {
  CorpusSpec spec;
  std::vector<Utterance> utterances;
};

Corpus generate_corpus(const CorpusSpec& spec, int n_utts);

TargetSequence build_mixed_target(const Utterance& u);

// Language-only target over the LID sub-vocabulary {<blank>, <A>, <B>}.
TargetSequence build_lid_target(const Utterance& u, LidTargetMode mode);

// Keeps `lang` tokens; each maximal run of other-language tokens becomes a
// single <other>.
TargetSequence build_lat_target(const Utterance& u, Lang lang);

// Gold per-frame LID labels (kLidA / kLidB values), for boundary scoring.
std::vector<int> gold_frame_lid(const Utterance& u);

// JSON Lines, one utterance per line. load(save(c)) == c.
void save_corpus(const Corpus& corpus, const std::string& path);
Corpus load_corpus(const std::string& path);

Vocabulary corpus_vocabulary(const CorpusSpec& spec);

}  // namespace lattice

#endif  // LATTICE_CORPUS_H_
