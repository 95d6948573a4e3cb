// lattice/evaluation.cc
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

#include "lattice/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace lattice {

EditOps edit_distance(const TargetSequence& hyp, const TargetSequence& ref,
                      const Vocabulary& vocab) {
  const int n = static_cast<int>(hyp.size());
  const int m = static_cast<int>(ref.size());
  // dp[i][j]: distance between hyp[0:i] and ref[0:j].
  std::vector<int> dp(static_cast<size_t>(n + 1) * (m + 1));
  auto at = [&](int i, int j) -> int& { return dp[static_cast<size_t>(i) * (m + 1) + j]; };
  for (int i = 0; i <= n; ++i) at(i, 0) = i;
  for (int j = 0; j <= m; ++j) at(0, j) = j;
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= m; ++j) {
      const int sub = at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      const int ins = at(i - 1, j) + 1;  // hyp token without ref counterpart
      const int del = at(i, j - 1) + 1;  // ref token missing from hyp
      at(i, j) = std::min({sub, ins, del});
    }
  }
  EditOps ops;
  ops.distance = at(n, m);
  // Backtrace for per-language attribution.
  int i = n, j = m;
  auto count_ref = [&](int token, int sub_not_del) {
    const LangTag tag = vocab.tag(token);
    if (tag == LangTag::kLangA) (sub_not_del ? ops.sub_a : ops.del_a)++;
    else if (tag == LangTag::kLangB) (sub_not_del ? ops.sub_b : ops.del_b)++;
  };
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        at(i, j) == at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1)) {
      if (hyp[i - 1] != ref[j - 1]) count_ref(ref[j - 1], /*sub=*/1);
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      const LangTag tag = vocab.tag(hyp[i - 1]);
      if (tag == LangTag::kLangA) ops.ins_a++;
      else if (tag == LangTag::kLangB) ops.ins_b++;
      // Special-tag insertions count in the distance but in neither bucket.
      --i;
    } else {
      count_ref(ref[j - 1], /*sub=*/0);
      --j;
    }
  }
  return ops;
}

MerReport mer(const std::vector<TargetSequence>& hyps,
              const std::vector<TargetSequence>& refs,
              const Vocabulary& vocab) {
  if (hyps.size() != refs.size())
    throw std::invalid_argument("mer: hypothesis/reference count mismatch");
  MerReport rep;
  rep.utterances = static_cast<int>(hyps.size());
  for (size_t u = 0; u < hyps.size(); ++u) {
    const EditOps ops = edit_distance(hyps[u], refs[u], vocab);
    rep.ops.distance += ops.distance;
    rep.ops.sub_a += ops.sub_a;
    rep.ops.ins_a += ops.ins_a;
    rep.ops.del_a += ops.del_a;
    rep.ops.sub_b += ops.sub_b;
    rep.ops.ins_b += ops.ins_b;
    rep.ops.del_b += ops.del_b;
    for (int tok : refs[u]) {
      const LangTag tag = vocab.tag(tok);
      if (tag == LangTag::kLangA) rep.ref_tokens_a++;
      else if (tag == LangTag::kLangB) rep.ref_tokens_b++;
    }
  }
  const int total_ref = rep.ref_tokens_a + rep.ref_tokens_b;
  rep.mer = total_ref > 0 ? static_cast<double>(rep.ops.distance) / total_ref
                          : 0.0;
  rep.cer_a = rep.ref_tokens_a > 0
                  ? static_cast<double>(rep.ops.sub_a + rep.ops.ins_a +
                                        rep.ops.del_a) / rep.ref_tokens_a
                  : 0.0;
  rep.wer_b = rep.ref_tokens_b > 0
                  ? static_cast<double>(rep.ops.sub_b + rep.ops.ins_b +
                                        rep.ops.del_b) / rep.ref_tokens_b
                  : 0.0;
  return rep;
}

PeakinessReport peakiness(const Posteriorgram& post, double tau) {
  const Posteriorgram p = post.to_probs();
  PeakinessReport rep;
  rep.tau = tau;
  if (p.frames == 0) return rep;
  int dominated = 0;
  double max_sum = 0.0;
  for (int t = 0; t < p.frames; ++t) {
    if (p.at(t, Vocabulary::kBlank) > tau) ++dominated;
    double mx = 0.0;
    for (int v = 0; v < p.vocab; ++v) mx = std::max(mx, p.at(t, v));
    max_sum += mx;
  }
  rep.blank_dominance = static_cast<double>(dominated) / p.frames;
  rep.mean_max_posterior = max_sum / p.frames;
  return rep;
}

std::vector<int> frame_language(const Posteriorgram& lid_post) {
  const Posteriorgram p = lid_post.to_probs();
  std::vector<int> out(p.frames, kLangUnknown);
  for (int t = 0; t < p.frames; ++t) {
    const double pa = p.at(t, Vocabulary::kLidA);
    const double pb = p.at(t, Vocabulary::kLidB);
    if (pa < 1e-6 && pb < 1e-6) continue;
    out[t] = pb > pa ? Vocabulary::kLidB : Vocabulary::kLidA;
  }
  return out;
}

double blank_coverage(const Posteriorgram& lid_post) {
  const Posteriorgram p = lid_post.to_probs();
  if (p.frames == 0) return 0.0;
  int n = 0;
  for (int t = 0; t < p.frames; ++t)
    if (p.at(t, Vocabulary::kBlank) > 0.5) ++n;
  return static_cast<double>(n) / p.frames;
}

namespace {

std::vector<int> switch_points(const std::vector<int>& labels) {
  std::vector<int> out;
  for (size_t i = 1; i < labels.size(); ++i)
    if (labels[i] != labels[i - 1]) out.push_back(static_cast<int>(i));
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

BoundaryReport boundary_metrics(const std::vector<int>& pred_frame_langs,
                                const std::vector<int>& gold_frame_langs,
                                int tolerance) {
  if (pred_frame_langs.size() != gold_frame_langs.size())
    throw std::invalid_argument("boundary_metrics: length mismatch");
  const std::vector<int> pred = switch_points(pred_frame_langs);
  const std::vector<int> gold = switch_points(gold_frame_langs);
  BoundaryReport rep;
  rep.tolerance = tolerance;
  rep.gold_switches = static_cast<int>(gold.size());
  rep.pred_switches = static_cast<int>(pred.size());

  // Symmetric offsets: gold to nearest predicted switch and predicted to
  // nearest gold switch, both capped at the sequence length. A one-sided
  // version rewards over-segmentation (spray enough predicted switches and
  // every gold switch has a near neighbor); the pred-to-gold direction
  // charges for the spurious ones.
  std::vector<double> offsets;
  const double cap = static_cast<double>(gold_frame_langs.size());
  for (int g : gold) {
    double best = cap;
    for (int p : pred) best = std::min(best, std::fabs(static_cast<double>(p - g)));
    offsets.push_back(best);
  }
  for (int p : pred) {
    double best = cap;
    for (int g : gold) best = std::min(best, std::fabs(static_cast<double>(g - p)));
    offsets.push_back(best);
  }
  rep.median_offset = median(std::move(offsets));

  // Greedy nearest-first one-to-one matching within tolerance.
  struct Pair { double dist; int gi; int pi; };
  std::vector<Pair> pairs;
  for (size_t gi = 0; gi < gold.size(); ++gi)
    for (size_t pi = 0; pi < pred.size(); ++pi) {
      const double d = std::fabs(static_cast<double>(pred[pi] - gold[gi]));
      if (d <= tolerance) pairs.push_back({d, static_cast<int>(gi), static_cast<int>(pi)});
    }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return a.dist < b.dist || (a.dist == b.dist && (a.gi < b.gi || (a.gi == b.gi && a.pi < b.pi)));
  });
  std::vector<bool> gold_used(gold.size(), false), pred_used(pred.size(), false);
  int tp = 0;
  for (const auto& pr : pairs) {
    if (gold_used[pr.gi] || pred_used[pr.pi]) continue;
    gold_used[pr.gi] = pred_used[pr.pi] = true;
    ++tp;
  }
  if (gold.empty() && pred.empty()) {
    rep.f1 = 1.0;
  } else if (tp == 0) {
    rep.f1 = 0.0;
  } else {
    const double prec = static_cast<double>(tp) / pred.size();
    const double rec = static_cast<double>(tp) / gold.size();
    rep.f1 = 2.0 * prec * rec / (prec + rec);
  }
  return rep;
}

void export_posteriorgram(const Posteriorgram& post, const Vocabulary& vocab,
                          const std::string& path) {
  std::vector<std::string> names;
  names.reserve(post.vocab);
  if (post.vocab == Vocabulary::kLidSize) {
    names = {"<blank>", "<A>", "<B>"};
  } else {
    for (int v = 0; v < post.vocab; ++v) names.push_back(vocab.name(v));
  }
  export_posteriorgram_csv(post, names, path);
}

}  // namespace lattice
