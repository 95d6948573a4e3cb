// lattice/ctc.cc
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

#include "lattice/ctc.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

namespace lattice {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

Vocabulary Vocabulary::make(int lang_a_tokens, int lang_b_tokens) {
  Vocabulary v;
  v.lang_a_count_ = lang_a_tokens;
  v.lang_b_count_ = lang_b_tokens;
  v.names_ = {"<blank>", "<other>", "<A>", "<B>"};
  v.tags_ = {LangTag::kSpecial, LangTag::kSpecial, LangTag::kSpecial,
             LangTag::kSpecial};
  char buf[16];
  for (int i = 0; i < lang_a_tokens; ++i) {
    std::snprintf(buf, sizeof(buf), "a%02d", i);
    v.names_.emplace_back(buf);
    v.tags_.push_back(LangTag::kLangA);
  }
  for (int i = 0; i < lang_b_tokens; ++i) {
    std::snprintf(buf, sizeof(buf), "b%02d", i);
    v.names_.emplace_back(buf);
    v.tags_.push_back(LangTag::kLangB);
  }
  return v;
}

std::optional<int> Vocabulary::index_of(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (names_[i] == name) return i;
  return std::nullopt;
}

Posteriorgram Posteriorgram::to_probs() const {
  if (!log_space) return *this;
  Posteriorgram out = *this;
  out.log_space = false;
  for (auto& v : out.values) v = std::exp(v);
  return out;
}

Posteriorgram Posteriorgram::to_log() const {
  if (log_space) return *this;
  Posteriorgram out = *this;
  out.log_space = true;
  for (auto& v : out.values) v = std::log(v);
  return out;
}

Posteriorgram Posteriorgram::from_tensor(const Tensor& t, bool log_space) {
  Posteriorgram p;
  p.frames = t.shape()[0];
  p.vocab = t.shape()[1];
  p.log_space = log_space;
  p.values = t.data();
  return p;
}

TargetSequence collapse(const AlignmentPath& path) {
  TargetSequence out;
  int prev = -1;
  for (int tok : path) {
    if (tok != prev && tok != Vocabulary::kBlank) out.push_back(tok);
    prev = tok;
  }
  return out;
}

namespace {

// Extended label sequence [blank, y1, blank, ..., yS, blank].
std::vector<int> extend_labels(const TargetSequence& y) {
  std::vector<int> z(2 * y.size() + 1, Vocabulary::kBlank);
  for (size_t s = 0; s < y.size(); ++s) z[2 * s + 1] = y[s];
  return z;
}

int min_frames_needed(const TargetSequence& y) {
  int n = static_cast<int>(y.size());
  for (size_t s = 1; s < y.size(); ++s)
    if (y[s] == y[s - 1]) ++n;
  return n;
}

void check_feasible(int frames, const TargetSequence& y) {
  if (frames < min_frames_needed(y))
    throw InfeasibleAlignment("ctc: target of length " +
                              std::to_string(y.size()) + " needs at least " +
                              std::to_string(min_frames_needed(y)) +
                              " frames, got " + std::to_string(frames));
}

}  // namespace

double ctc_forward_backward(const std::vector<double>& log_scores, int frames,
                            int vocab, const TargetSequence& target,
                            std::vector<double>* grad) {
  if (frames == 0 && target.empty()) {
    if (grad) grad->assign(0, 0.0);
    return 0.0;
  }
  check_feasible(frames, target);
  const std::vector<int> z = extend_labels(target);
  const int n = static_cast<int>(z.size());
  const int S = static_cast<int>(target.size());
  auto score = [&](int t, int v) {
    return log_scores[static_cast<size_t>(t) * vocab + v];
  };

  std::vector<double> alpha(static_cast<size_t>(frames) * n, kNegInf);
  alpha[0] = score(0, z[0]);
  if (n > 1) alpha[1] = score(0, z[1]);
  for (int t = 1; t < frames; ++t) {
    const double* ap = alpha.data() + static_cast<size_t>(t - 1) * n;
    double* ac = alpha.data() + static_cast<size_t>(t) * n;
    for (int s = 0; s < n; ++s) {
      double v = ap[s];
      if (s >= 1) v = log_add(v, ap[s - 1]);
      if (s >= 2 && z[s] != Vocabulary::kBlank && z[s] != z[s - 2])
        v = log_add(v, ap[s - 2]);
      ac[s] = v == kNegInf ? kNegInf : v + score(t, z[s]);
    }
  }
  const double* last = alpha.data() + static_cast<size_t>(frames - 1) * n;
  double log_z = last[n - 1];
  if (S > 0) log_z = log_add(log_z, last[n - 2]);
  if (log_z == kNegInf)
    throw InfeasibleAlignment("ctc: zero total path mass");

  if (grad) {
    std::vector<double> beta(static_cast<size_t>(frames) * n, kNegInf);
    double* bl = beta.data() + static_cast<size_t>(frames - 1) * n;
    bl[n - 1] = 0.0;
    if (S > 0) bl[n - 2] = 0.0;
    for (int t = frames - 2; t >= 0; --t) {
      const double* bn = beta.data() + static_cast<size_t>(t + 1) * n;
      double* bc = beta.data() + static_cast<size_t>(t) * n;
      for (int s = 0; s < n; ++s) {
        double v = bn[s] == kNegInf ? kNegInf : bn[s] + score(t + 1, z[s]);
        if (s + 1 < n && bn[s + 1] != kNegInf)
          v = log_add(v, bn[s + 1] + score(t + 1, z[s + 1]));
        if (s + 2 < n && z[s + 2] != Vocabulary::kBlank && z[s + 2] != z[s] &&
            bn[s + 2] != kNegInf)
          v = log_add(v, bn[s + 2] + score(t + 1, z[s + 2]));
        bc[s] = v;
      }
    }
    grad->assign(static_cast<size_t>(frames) * vocab, 0.0);
    // Per (t, v): -exp(logadd_{s: z[s]=v} alpha[t][s] + beta[t][s] - logZ).
    std::vector<double> occ(vocab);
    for (int t = 0; t < frames; ++t) {
      std::fill(occ.begin(), occ.end(), kNegInf);
      const double* at = alpha.data() + static_cast<size_t>(t) * n;
      const double* bt = beta.data() + static_cast<size_t>(t) * n;
      for (int s = 0; s < n; ++s) {
        if (at[s] == kNegInf || bt[s] == kNegInf) continue;
        occ[z[s]] = log_add(occ[z[s]], at[s] + bt[s]);
      }
      double* gt = grad->data() + static_cast<size_t>(t) * vocab;
      for (int v = 0; v < vocab; ++v)
        if (occ[v] != kNegInf) gt[v] = -std::exp(occ[v] - log_z);
    }
  }
  return -log_z;
}

double ctc_forward_value(const std::vector<double>& log_scores, int frames,
                         int vocab, const TargetSequence& target) {
  return ctc_forward_backward(log_scores, frames, vocab, target, nullptr);
}

Tensor ctc_loss_op(const Tensor& log_scores, const TargetSequence& target) {
  const int frames = log_scores.shape()[0];
  const int vocab = log_scores.shape()[1];
  std::vector<double> grad;
  const double loss = ctc_forward_backward(log_scores.data(), frames, vocab,
                                           target, &grad);
  return make_op({1}, {loss}, {log_scores},
                 [grad = std::move(grad)](detail::Node& n) {
                   auto& p = *n.parents[0];
                   if (!p.requires_grad) return;
                   p.ensure_grad();
                   const double g0 = n.grad[0];
                   for (size_t i = 0; i < grad.size(); ++i)
                     p.grad[i] += g0 * grad[i];
                 });
}

double ctc_loss(const Posteriorgram& post, const TargetSequence& target) {
  const Posteriorgram lp = post.to_log();
  return ctc_forward_value(lp.values, lp.frames, lp.vocab, target);
}

double brute_force_ctc(const Posteriorgram& post, const TargetSequence& target,
                       int max_frames, int max_vocab) {
  const Posteriorgram lp = post.to_log();
  const int L = lp.frames, V = lp.vocab;
  if (L > max_frames || V > max_vocab)
    throw std::invalid_argument("brute_force_ctc: instance too large");
  if (L == 0) {
    if (target.empty()) return 0.0;
    throw InfeasibleAlignment("brute_force_ctc: no frames");
  }
  double log_z = kNegInf;
  AlignmentPath path(L, 0);
  while (true) {
    if (collapse(path) == target) {
      double s = 0.0;
      for (int t = 0; t < L; ++t) s += lp.at(t, path[t]);
      log_z = log_add(log_z, s);
    }
    int pos = L - 1;
    while (pos >= 0 && ++path[pos] == V) path[pos--] = 0;
    if (pos < 0) break;
  }
  if (log_z == kNegInf)
    throw InfeasibleAlignment("brute_force_ctc: no path collapses to target");
  return -log_z;
}

std::vector<double> softmax_prior(const Posteriorgram& post) {
  if (post.frames < 1)
    throw std::invalid_argument("softmax_prior: empty posteriorgram");
  const Posteriorgram p = post.to_probs();
  std::vector<double> prior(p.vocab, 0.0);
  for (int t = 0; t < p.frames; ++t)
    for (int v = 0; v < p.vocab; ++v) prior[v] += p.at(t, v);
  for (auto& x : prior) x /= p.frames;
  return prior;
}

Posteriorgram adjusted_scores(const Posteriorgram& log_post,
                              const std::vector<double>& prior, double alpha) {
  Posteriorgram out = log_post.to_log();
  if (alpha == 0.0) return out;
  std::vector<double> log_prior(prior.size());
  for (size_t v = 0; v < prior.size(); ++v) {
    if (prior[v] <= 0.0)
      throw PriorUnderflow("adjusted_scores: zero prior component " +
                           std::to_string(v));
    log_prior[v] = std::log(prior[v]);
  }
  for (int t = 0; t < out.frames; ++t)
    for (int v = 0; v < out.vocab; ++v)
      out.values[static_cast<size_t>(t) * out.vocab + v] -=
          alpha * log_prior[v];
  return out;
}

double npc_loss(const Posteriorgram& post, const TargetSequence& target,
                const NpcConfig& cfg) {
  const Posteriorgram lp = post.to_log();
  if (cfg.alpha == 0.0)
    return ctc_forward_value(lp.values, lp.frames, lp.vocab, target);
  std::vector<double> prior = softmax_prior(post);
  for (auto& p : prior) p = std::max(p, 1e-12);
  const Posteriorgram adj = adjusted_scores(lp, prior, cfg.alpha);
  return ctc_forward_value(adj.values, adj.frames, adj.vocab, target);
}

Tensor npc_loss_op(const Tensor& log_post, const TargetSequence& target,
                   const NpcConfig& cfg, double prior_floor) {
  if (cfg.alpha == 0.0) return ctc_loss_op(log_post, target);
  Tensor prior = col_mean(exp_op(log_post));
  if (!cfg.backprop_through_prior) prior = detach(prior);
  Tensor log_prior = log_op(clamp_min(prior, prior_floor));
  Tensor adj = sub_rowvec(log_post, scale(log_prior, cfg.alpha));
  return ctc_loss_op(adj, target);
}

AlignmentPath best_path_align(const Posteriorgram& post) {
  if (post.frames < 1)
    throw std::invalid_argument("best_path_align: empty posteriorgram");
  AlignmentPath path(post.frames);
  for (int t = 0; t < post.frames; ++t) {
    int best = 0;
    for (int v = 1; v < post.vocab; ++v)
      if (post.at(t, v) > post.at(t, best)) best = v;
    path[t] = best;
  }
  return path;
}

TargetSequence greedy_decode(const Posteriorgram& post) {
  return collapse(best_path_align(post));
}

TargetSequence prefix_beam_decode(const Posteriorgram& post, int width) {
  if (width < 1) throw std::invalid_argument("prefix_beam_decode: width < 1");
  const Posteriorgram lp = post.to_log();
  struct Prob {
    double blank = kNegInf;     // prefix ending in blank
    double nonblank = kNegInf;  // prefix ending in its last token
    double total() const { return log_add(blank, nonblank); }
  };
  std::map<TargetSequence, Prob> beams;
  beams[{}].blank = 0.0;
  for (int t = 0; t < lp.frames; ++t) {
    std::map<TargetSequence, Prob> next;
    for (const auto& [prefix, pr] : beams) {
      for (int v = 0; v < lp.vocab; ++v) {
        const double p = lp.at(t, v);
        if (v == Vocabulary::kBlank) {
          auto& e = next[prefix];
          e.blank = log_add(e.blank, pr.total() + p);
        } else if (!prefix.empty() && prefix.back() == v) {
          // Same token extends the emission (no new symbol)...
          auto& same = next[prefix];
          same.nonblank = log_add(same.nonblank, pr.nonblank + p);
          // ...or starts a repeat after a blank.
          TargetSequence ext = prefix;
          ext.push_back(v);
          auto& e = next[ext];
          e.nonblank = log_add(e.nonblank, pr.blank + p);
        } else {
          TargetSequence ext = prefix;
          ext.push_back(v);
          auto& e = next[ext];
          e.nonblank = log_add(e.nonblank, pr.total() + p);
        }
      }
    }
    if (static_cast<int>(next.size()) > width) {
      std::vector<std::pair<double, const TargetSequence*>> ranked;
      ranked.reserve(next.size());
      for (const auto& [prefix, pr] : next)
        ranked.emplace_back(pr.total(), &prefix);
      std::nth_element(ranked.begin(), ranked.begin() + width - 1,
                       ranked.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      std::map<TargetSequence, Prob> pruned;
      for (int i = 0; i < width; ++i) pruned[*ranked[i].second] = next[*ranked[i].second];
      next = std::move(pruned);
    }
    beams = std::move(next);
  }
  const TargetSequence* best = nullptr;
  double best_p = kNegInf;
  for (const auto& [prefix, pr] : beams) {
    if (pr.total() > best_p) {
      best_p = pr.total();
      best = &prefix;
    }
  }
  return best ? *best : TargetSequence{};
}

void export_posteriorgram_csv(const Posteriorgram& post,
                              const std::vector<std::string>& token_names,
                              const std::string& path) {
  if (static_cast<int>(token_names.size()) != post.vocab)
    throw std::invalid_argument("export_posteriorgram_csv: name count");
  const Posteriorgram p = post.to_probs();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "frame";
  for (const auto& name : token_names) out << "," << name;
  out << "\n";
  char buf[32];
  for (int t = 0; t < p.frames; ++t) {
    out << t;
    for (int v = 0; v < p.vocab; ++v) {
      std::snprintf(buf, sizeof(buf), ",%.6f", p.at(t, v));
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace lattice
