// lattice/corpus.cc
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

#include "lattice/corpus.h"

#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace lattice {

using nlohmann::json;

namespace {

std::vector<std::vector<double>> make_prototypes(const CorpusSpec& spec,
                                                 std::mt19937_64& rng) {
  // One prototype per full-vocabulary token id; specials get zero vectors
  // (they never emit frames).
  const Vocabulary vocab = corpus_vocabulary(spec);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> protos(
      vocab.size(), std::vector<double>(spec.feature_dim, 0.0));
  for (int i = 0; i < spec.lang_a_vocab; ++i)
    for (auto& v : protos[vocab.lang_a_token(i)]) v = normal(rng);
  for (int i = 0; i < spec.lang_b_vocab; ++i)
    for (auto& v : protos[vocab.lang_b_token(i)]) v = normal(rng);
  const int n_homophones = static_cast<int>(
      spec.homophone_fraction * std::min(spec.lang_a_vocab, spec.lang_b_vocab));
  for (int i = 0; i < n_homophones; ++i)
    protos[vocab.lang_b_token(i)] = protos[vocab.lang_a_token(i)];
  return protos;
}

}  // namespace

Vocabulary corpus_vocabulary(const CorpusSpec& spec) {
  return Vocabulary::make(spec.lang_a_vocab, spec.lang_b_vocab);
}

Corpus generate_corpus(const CorpusSpec& spec, int n_utts) {
  if (n_utts < 1) throw std::invalid_argument("generate_corpus: n_utts < 1");
  if (spec.min_tokens > spec.max_tokens ||
      spec.min_token_frames > spec.max_token_frames)
    throw std::invalid_argument("generate_corpus: empty range in spec");
  if (spec.homophone_fraction < 0.0 || spec.homophone_fraction > 1.0)
    throw std::invalid_argument("generate_corpus: homophone fraction");

  std::mt19937_64 rng(spec.seed);
  const Vocabulary vocab = corpus_vocabulary(spec);
  const auto protos = make_prototypes(spec, rng);

  std::uniform_int_distribution<int> n_tokens_dist(spec.min_tokens,
                                                   spec.max_tokens);
  std::uniform_int_distribution<int> dur_dist(spec.min_token_frames,
                                              spec.max_token_frames);
  std::uniform_int_distribution<int> tok_a(0, spec.lang_a_vocab - 1);
  std::uniform_int_distribution<int> tok_b(0, spec.lang_b_vocab - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, spec.noise_std);

  Corpus corpus;
  corpus.spec = spec;
  corpus.utterances.reserve(n_utts);
  for (int ui = 0; ui < n_utts; ++ui) {
    Utterance u;
    u.id = "utt" + std::to_string(ui);
    u.feature_dim = spec.feature_dim;
    const int n_tokens = n_tokens_dist(rng);
    Lang lang = unit(rng) < 0.5 ? Lang::kA : Lang::kB;
    for (int s = 0; s < n_tokens; ++s) {
      if (s > 0 && unit(rng) < spec.switch_prob)
        lang = lang == Lang::kA ? Lang::kB : Lang::kA;
      const int tok = lang == Lang::kA ? vocab.lang_a_token(tok_a(rng))
                                       : vocab.lang_b_token(tok_b(rng));
      const int dur = dur_dist(rng);
      TokenSpan span{u.frames, u.frames + dur};
      u.tokens.push_back(tok);
      u.token_langs.push_back(lang);
      u.spans.push_back(span);
      for (int f = 0; f < dur; ++f) {
        for (int d = 0; d < spec.feature_dim; ++d)
          u.features.push_back(protos[tok][d] + noise(rng));
        u.frame_langs.push_back(lang);
      }
      u.frames += dur;
    }
    corpus.utterances.push_back(std::move(u));
  }
  return corpus;
}

TargetSequence build_mixed_target(const Utterance& u) { return u.tokens; }

TargetSequence build_lid_target(const Utterance& u, LidTargetMode mode) {
  TargetSequence out;
  for (size_t s = 0; s < u.tokens.size(); ++s) {
    const int ind = u.token_langs[s] == Lang::kA ? Vocabulary::kLidA
                                                 : Vocabulary::kLidB;
    if (mode == LidTargetMode::kRunCollapsed && !out.empty() &&
        out.back() == ind)
      continue;
    out.push_back(ind);
  }
  return out;
}

TargetSequence build_lat_target(const Utterance& u, Lang lang) {
  TargetSequence out;
  bool in_foreign_run = false;
  for (size_t s = 0; s < u.tokens.size(); ++s) {
    if (u.token_langs[s] == lang) {
      out.push_back(u.tokens[s]);
      in_foreign_run = false;
    } else if (!in_foreign_run) {
      out.push_back(Vocabulary::kOther);
      in_foreign_run = true;
    }
  }
  return out;
}

std::vector<int> gold_frame_lid(const Utterance& u) {
  std::vector<int> out(u.frames);
  for (int t = 0; t < u.frames; ++t)
    out[t] = u.frame_langs[t] == Lang::kA ? Vocabulary::kLidA
                                          : Vocabulary::kLidB;
  return out;
}

namespace {

json spec_to_json(const CorpusSpec& s) {
  return json{{"lang_a_vocab", s.lang_a_vocab},
              {"lang_b_vocab", s.lang_b_vocab},
              {"feature_dim", s.feature_dim},
              {"min_token_frames", s.min_token_frames},
              {"max_token_frames", s.max_token_frames},
              {"noise_std", s.noise_std},
              {"switch_prob", s.switch_prob},
              {"min_tokens", s.min_tokens},
              {"max_tokens", s.max_tokens},
              {"homophone_fraction", s.homophone_fraction},
              {"seed", s.seed}};
}

CorpusSpec spec_from_json(const json& j) {
  CorpusSpec s;
  s.lang_a_vocab = j.at("lang_a_vocab");
  s.lang_b_vocab = j.at("lang_b_vocab");
  s.feature_dim = j.at("feature_dim");
  s.min_token_frames = j.at("min_token_frames");
  s.max_token_frames = j.at("max_token_frames");
  s.noise_std = j.at("noise_std");
  s.switch_prob = j.at("switch_prob");
  s.min_tokens = j.at("min_tokens");
  s.max_tokens = j.at("max_tokens");
  s.homophone_fraction = j.at("homophone_fraction");
  s.seed = j.at("seed");
  return s;
}

std::string lang_str(Lang l) { return l == Lang::kA ? "A" : "B"; }
Lang lang_from_str(const std::string& s) {
  if (s == "A") return Lang::kA;
  if (s == "B") return Lang::kB;
  throw std::runtime_error("bad language tag '" + s + "'");
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  json header{{"format", "lattice-corpus-v1"},
              {"spec", spec_to_json(corpus.spec)},
              {"n_utterances", corpus.utterances.size()}};
  out << header.dump() << "\n";
  for (const auto& u : corpus.utterances) {
    json features = json::array();
    for (int t = 0; t < u.frames; ++t) {
      json row = json::array();
      for (int d = 0; d < u.feature_dim; ++d)
        row.push_back(u.features[static_cast<size_t>(t) * u.feature_dim + d]);
      features.push_back(std::move(row));
    }
    json langs = json::array();
    for (Lang l : u.token_langs) langs.push_back(lang_str(l));
    json frame_langs = json::array();
    for (Lang l : u.frame_langs) frame_langs.push_back(lang_str(l));
    json spans = json::array();
    for (const auto& sp : u.spans) spans.push_back(json::array({sp.begin, sp.end}));
    json line{{"id", u.id},         {"features", std::move(features)},
              {"tokens", u.tokens}, {"langs", std::move(langs)},
              {"frame_langs", std::move(frame_langs)},
              {"spans", std::move(spans)}};
    out << line.dump() << "\n";
  }
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) -> std::runtime_error {
    return std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
  };
  if (!std::getline(in, line)) throw fail("missing header line");
  ++line_no;
  Corpus corpus;
  size_t expected = 0;
  try {
    json header = json::parse(line);
    if (header.at("format") != "lattice-corpus-v1")
      throw std::runtime_error("unknown corpus format");
    corpus.spec = spec_from_json(header.at("spec"));
    expected = header.at("n_utterances");
  } catch (const json::exception& e) {
    throw fail(std::string("malformed header: ") + e.what());
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Utterance u;
    try {
      json j = json::parse(line);
      u.id = j.at("id");
      u.feature_dim = corpus.spec.feature_dim;
      for (const auto& row : j.at("features")) {
        if (static_cast<int>(row.size()) != u.feature_dim)
          throw std::runtime_error("feature dimension mismatch vs header");
        for (const auto& v : row) u.features.push_back(v.get<double>());
        ++u.frames;
      }
      u.tokens = j.at("tokens").get<TargetSequence>();
      for (const auto& l : j.at("langs"))
        u.token_langs.push_back(lang_from_str(l));
      for (const auto& l : j.at("frame_langs"))
        u.frame_langs.push_back(lang_from_str(l));
      for (const auto& sp : j.at("spans"))
        u.spans.push_back(TokenSpan{sp.at(0), sp.at(1)});
    } catch (const json::exception& e) {
      throw fail(std::string("malformed utterance line: ") + e.what());
    }
    if (u.tokens.size() != u.token_langs.size() ||
        u.tokens.size() != u.spans.size() ||
        static_cast<int>(u.frame_langs.size()) != u.frames)
      throw fail("inconsistent utterance record");
    corpus.utterances.push_back(std::move(u));
  }
  ++line_no;
  if (corpus.utterances.size() != expected)
    throw fail("truncated corpus: expected " + std::to_string(expected) +
               " utterances, got " + std::to_string(corpus.utterances.size()));
  return corpus;
}

}  // namespace lattice
