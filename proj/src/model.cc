// lattice/model.cc
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

#include "lattice/model.h"

#include <algorithm>
#include <cmath>

namespace lattice {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kBaseline: return "baseline";
    case Variant::kScctc: return "scctc";
    case Variant::kScctcLid3: return "scctc_lid3";
    case Variant::kScctcLidAll: return "scctc_lidall";
    case Variant::kDmoe: return "dmoe";
    case Variant::kProposed: return "proposed";
  }
  throw std::logic_error("unreachable");
}

Variant variant_from_name(const std::string& name) {
  if (name == "baseline") return Variant::kBaseline;
  if (name == "scctc") return Variant::kScctc;
  if (name == "scctc_lid3") return Variant::kScctcLid3;
  if (name == "scctc_lidall") return Variant::kScctcLidAll;
  if (name == "dmoe") return Variant::kDmoe;
  if (name == "proposed") return Variant::kProposed;
  throw std::invalid_argument("unknown variant '" + name + "'");
}

void ModelConfig::validate() const {
  if (model_dim % heads != 0)
    throw std::invalid_argument("model dim must be divisible by heads");
  if (has_taps()) {
    for (int t : taps)
      if (t < 1 || t >= num_blocks)
        throw std::invalid_argument("tap layer outside encoder depth");
    if (variant == Variant::kScctcLid3 &&
        std::find(taps.begin(), taps.end(), lid_tap) == taps.end())
      throw std::invalid_argument("lid_tap must be one of the tap layers");
  }
  if (is_moe()) {
    if (variant == Variant::kProposed) {
      if (shared_lid_tap < 1 || shared_lid_tap >= shared_blocks ||
          shared_gt_tap < 1 || shared_gt_tap >= shared_blocks)
        throw std::invalid_argument("shared tap outside shared encoder depth");
    }
    if (expert_blocks < 1)
      throw std::invalid_argument("expert encoders need at least one block");
  }
  if (npc.alpha < 0.0 || !std::isfinite(npc.alpha))
    throw std::invalid_argument("npc alpha must be finite and >= 0");
  if (dropout < 0.0 || dropout >= 1.0)
    throw std::invalid_argument("dropout out of range");
}

Tensor disentangle_loss_op(const Tensor& a, const Tensor& b,
                           DisentangleMode mode) {
  if (a.shape() != b.shape())
    throw std::invalid_argument("disentangle: shape mismatch");
  const int r = a.shape()[0], c = a.shape()[1];
  if (r < 1) throw std::invalid_argument("disentangle: no frames");
  const auto& ad = a.data();
  const auto& bd = b.data();
  double total = 0.0;
  std::vector<double> dots(r), nas(r), nbs(r), cs(r);
  for (int i = 0; i < r; ++i) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int j = 0; j < c; ++j) {
      const double x = ad[static_cast<size_t>(i) * c + j];
      const double y = bd[static_cast<size_t>(i) * c + j];
      dot += x * y;
      na += x * x;
      nb += y * y;
    }
    dots[i] = dot;
    nas[i] = na;
    nbs[i] = nb;
    double ci = 0.0;
    if (na > 0.0 && nb > 0.0)
      ci = mode == DisentangleMode::kSquaredCosine
               ? (dot * dot) / (na * nb)
               : dot / std::sqrt(na * nb);
    cs[i] = ci;
    total += ci;
  }
  return make_op(
      {1}, {total / r}, {a, b},
      [r, c, mode, dots = std::move(dots), nas = std::move(nas),
       nbs = std::move(nbs), cs = std::move(cs)](detail::Node& n) {
        const double g0 = n.grad[0] / r;
        const auto& ad2 = n.parents[0]->data;
        const auto& bd2 = n.parents[1]->data;
        for (int pi = 0; pi < 2; ++pi) {
          auto& p = *n.parents[pi];
          if (!p.requires_grad) continue;
          p.ensure_grad();
          const auto& self = pi == 0 ? ad2 : bd2;
          const auto& other = pi == 0 ? bd2 : ad2;
          const auto& nself = pi == 0 ? nas : nbs;
          for (int i = 0; i < r; ++i) {
            if (nas[i] <= 0.0 || nbs[i] <= 0.0) continue;
            double k_other, k_self;
            if (mode == DisentangleMode::kSquaredCosine) {
              k_other = 2.0 * dots[i] / (nas[i] * nbs[i]);
              k_self = -2.0 * cs[i] / nself[i];
            } else {
              k_other = 1.0 / std::sqrt(nas[i] * nbs[i]);
              k_self = -cs[i] / nself[i];
            }
            for (int j = 0; j < c; ++j) {
              const size_t idx = static_cast<size_t>(i) * c + j;
              p.grad[idx] += g0 * (k_other * other[idx] + k_self * self[idx]);
            }
          }
        }
      });
}

Model::Model(const ModelConfig& config) : config_(config) {
  config_.validate();
  vocab_ = Vocabulary::make(config_.lang_a_vocab, config_.lang_b_vocab);
  const int dim = config_.model_dim;
  const int V = vocab_.size();

  auto weight = [&](const std::string& name, int in, int out) {
    params_[name] = Tensor::zeros({in, out}, true);
  };
  auto vec = [&](const std::string& name, int len) {
    params_[name] = Tensor::zeros({len}, true);
  };
  auto block = [&](const std::string& prefix) {
    vec(prefix + ".ln1.g", dim);
    vec(prefix + ".ln1.b", dim);
    weight(prefix + ".attn.Wq", dim, dim);
    vec(prefix + ".attn.bq", dim);
    weight(prefix + ".attn.Wk", dim, dim);
    vec(prefix + ".attn.bk", dim);
    weight(prefix + ".attn.Wv", dim, dim);
    vec(prefix + ".attn.bv", dim);
    weight(prefix + ".attn.Wo", dim, dim);
    vec(prefix + ".attn.bo", dim);
    vec(prefix + ".ln2.g", dim);
    vec(prefix + ".ln2.b", dim);
    weight(prefix + ".ff.W1", dim, config_.ff_dim);
    vec(prefix + ".ff.b1", config_.ff_dim);
    weight(prefix + ".ff.W2", config_.ff_dim, dim);
    vec(prefix + ".ff.b2", dim);
  };
  auto head = [&](const std::string& name, int out, bool condition) {
    vec("ln." + name + ".g", dim);
    vec("ln." + name + ".b", dim);
    weight("head." + name + ".W", dim, out);
    vec("head." + name + ".b", out);
    if (condition) weight("cond." + name + ".W", out, dim);
  };

  weight("input.W", config_.feature_dim, dim);
  vec("input.b", dim);

  if (config_.is_moe()) {
    for (int i = 1; i <= config_.shared_blocks; ++i)
      block("shared" + std::to_string(i));
    for (int i = 1; i <= config_.expert_blocks; ++i) {
      block("expA" + std::to_string(i));
      block("expB" + std::to_string(i));
    }
    if (config_.variant == Variant::kProposed) {
      head("lid", Vocabulary::kLidSize, true);
      head("gt", V, true);
      if (config_.posterior_injection) {
        weight("inject.A.W", Vocabulary::kLidSize, dim);
        weight("inject.B.W", Vocabulary::kLidSize, dim);
      }
    }
    head("expA", V, false);
    head("expB", V, false);
    weight("gate.W", 2 * dim, 2);
    vec("gate.b", 2);
  } else {
    for (int i = 1; i <= config_.num_blocks; ++i)
      block("enc" + std::to_string(i));
    if (config_.has_taps()) {
      for (int t : config_.taps) {
        const bool lid = config_.variant == Variant::kScctcLidAll ||
                         (config_.variant == Variant::kScctcLid3 &&
                          t == config_.lid_tap);
        head("tap" + std::to_string(t), lid ? Vocabulary::kLidSize : V, true);
      }
    }
  }
  head("final", V, false);
}

void Model::init_params(uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& [name, tensor] : params_) {
    const auto last_dot = name.rfind('.');
    const char kind = name[last_dot + 1];
    auto& data = tensor.mutable_data();
    if (kind == 'g') {
      std::fill(data.begin(), data.end(), 1.0);
    } else if (kind == 'b') {
      std::fill(data.begin(), data.end(), 0.0);
    } else {  // weight
      if (name.rfind("cond.", 0) == 0 || name.rfind("inject.", 0) == 0) {
        std::fill(data.begin(), data.end(), 0.0);  // conditioning starts as no-op
      } else {
        const double bound = 1.0 / std::sqrt(static_cast<double>(tensor.shape()[0]));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (auto& v : data) v = dist(rng);
      }
    }
  }
}

int64_t Model::num_params() const {
  int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

void Model::zero_grads() {
  for (auto& [name, t] : params_) t.zero_grad();
}

Tensor Model::param(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end())
    throw std::logic_error("missing parameter " + name);
  return it->second;
}

Tensor Model::multi_head_attention(const std::string& prefix, const Tensor& x,
                                   const Tensor& mask_row) const {
  const int dim = config_.model_dim;
  const int dk = dim / config_.heads;
  Tensor q = add_rowvec(matmul(x, param(prefix + ".Wq")), param(prefix + ".bq"));
  Tensor k = add_rowvec(matmul(x, param(prefix + ".Wk")), param(prefix + ".bk"));
  Tensor v = add_rowvec(matmul(x, param(prefix + ".Wv")), param(prefix + ".bv"));
  std::vector<Tensor> heads;
  heads.reserve(config_.heads);
  for (int h = 0; h < config_.heads; ++h) {
    heads.push_back(scaled_dot_attention(
        slice_cols(q, h * dk, dk), slice_cols(k, h * dk, dk),
        slice_cols(v, h * dk, dk), mask_row));
  }
  Tensor merged = config_.heads == 1 ? heads[0] : concat_cols(heads);
  return add_rowvec(matmul(merged, param(prefix + ".Wo")), param(prefix + ".bo"));
}

namespace {

Tensor dropout_op(const Tensor& x, double p, std::mt19937_64* rng) {
  if (p <= 0.0 || rng == nullptr) return x;
  std::bernoulli_distribution keep(1.0 - p);
  std::vector<double> mask(x.size());
  const double inv = 1.0 / (1.0 - p);
  for (auto& m : mask) m = keep(*rng) ? inv : 0.0;
  return mul(x, Tensor::from_data(x.shape(), std::move(mask)));
}

Tensor positional_encoding(int frames, int dim) {
  std::vector<double> pe(static_cast<size_t>(frames) * dim);
  for (int t = 0; t < frames; ++t) {
    for (int i = 0; i < dim; i += 2) {
      const double angle = t * std::exp(-std::log(10000.0) * i / dim);
      pe[static_cast<size_t>(t) * dim + i] = std::sin(angle);
      if (i + 1 < dim) pe[static_cast<size_t>(t) * dim + i + 1] = std::cos(angle);
    }
  }
  return Tensor::from_data({frames, dim}, std::move(pe));
}

}  // namespace

Tensor Model::encoder_block(const std::string& prefix, const Tensor& x,
                            const Tensor& mask_row,
                            std::mt19937_64* dropout_rng) const {
  Tensor a = layernorm(x, param(prefix + ".ln1.g"), param(prefix + ".ln1.b"));
  Tensor attn = multi_head_attention(prefix + ".attn", a, mask_row);
  Tensor h = add(x, dropout_op(attn, config_.dropout, dropout_rng));
  Tensor f = layernorm(h, param(prefix + ".ln2.g"), param(prefix + ".ln2.b"));
  Tensor ff = add_rowvec(
      matmul(relu(add_rowvec(matmul(f, param(prefix + ".ff.W1")),
                             param(prefix + ".ff.b1"))),
             param(prefix + ".ff.W2")),
      param(prefix + ".ff.b2"));
  return add(h, dropout_op(ff, config_.dropout, dropout_rng));
}

Tensor Model::tap_head(const std::string& name, const Tensor& h,
                       int true_frames, const TargetSequence* target,
                       double alpha, bool condition, Tensor* loss_out,
                       Posteriorgram* post_out) const {
  Tensor ln = layernorm(h, param("ln." + name + ".g"), param("ln." + name + ".b"));
  Tensor logits = add_rowvec(matmul(ln, param("head." + name + ".W")),
                             param("head." + name + ".b"));
  if (target != nullptr) {
    Tensor logp = log_softmax_rows(take_rows(logits, true_frames));
    NpcConfig cfg = config_.npc;
    cfg.alpha = alpha;
    *loss_out = npc_loss_op(logp, *target, cfg);
  }
  Tensor post_full;
  if (condition || post_out != nullptr) post_full = softmax_rows(logits);
  if (post_out != nullptr)
    *post_out = Posteriorgram::from_tensor(take_rows(post_full, true_frames),
                                           /*log_space=*/false);
  if (!condition) return h;
  return add(h, matmul(post_full, param("cond." + name + ".W")));
}

ForwardResult Model::forward(const Utterance& u, int pad_frames,
                             bool with_loss,
                             std::mt19937_64* dropout_rng) const {
  const int L = u.frames;
  if (L < 1) throw std::invalid_argument("forward: empty utterance");
  const int Lpad = std::max(L, pad_frames);
  const int dim = config_.model_dim;

  std::vector<double> feat(static_cast<size_t>(Lpad) * config_.feature_dim, 0.0);
  std::copy(u.features.begin(), u.features.end(), feat.begin());
  Tensor x = Tensor::from_data({Lpad, config_.feature_dim}, std::move(feat));
  std::vector<double> mask(Lpad, 0.0);
  for (int t = L; t < Lpad; ++t) mask[t] = -1e30;
  Tensor mask_row = Tensor::from_data({1, Lpad}, std::move(mask));

  Tensor h = add(add_rowvec(matmul(x, param("input.W")), param("input.b")),
                 positional_encoding(Lpad, dim));

  // Targets are only materialized when losses are requested.
  TargetSequence mixed, lid_target, lat_a, lat_b;
  if (with_loss) {
    mixed = build_mixed_target(u);
    lid_target = build_lid_target(u, config_.lid_target_mode);
    lat_a = build_lat_target(u, Lang::kA);
    lat_b = build_lat_target(u, Lang::kB);
  }

  const double a_mix = config_.alpha_mix.value_or(config_.npc.alpha);
  const double a_lang = config_.alpha_lang.value_or(config_.npc.alpha);
  const double a_inter = config_.alpha_inter.value_or(config_.npc.alpha);

  ForwardResult res;
  Tensor l_mix, l_lang_a, l_lang_b, l_dis;
  std::vector<Tensor> inter_losses;
  Tensor l_lid, l_gt;

  if (config_.is_moe()) {
    Tensor lid_post_full;
    for (int i = 1; i <= config_.shared_blocks; ++i) {
      h = encoder_block("shared" + std::to_string(i), h, mask_row, dropout_rng);
      if (config_.variant == Variant::kProposed) {
        if (i == config_.shared_lid_tap) {
          // LID information block: language-only target, posteriors feed
          // both the conditioning stream and the expert injection.
          Tensor ln = layernorm(h, param("ln.lid.g"), param("ln.lid.b"));
          Tensor logits = add_rowvec(matmul(ln, param("head.lid.W")),
                                     param("head.lid.b"));
          if (with_loss) {
            Tensor logp = log_softmax_rows(take_rows(logits, L));
            NpcConfig cfg = config_.npc;
            cfg.alpha = a_inter;
            l_lid = npc_loss_op(logp, lid_target, cfg);
          }
          lid_post_full = softmax_rows(logits);
          res.lid_post = Posteriorgram::from_tensor(
              take_rows(lid_post_full, L), false);
          res.has_lid = true;
          h = add(h, matmul(lid_post_full, param("cond.lid.W")));
        } else if (i == config_.shared_gt_tap) {
          h = tap_head("gt", h, L, with_loss ? &mixed : nullptr, a_inter,
                       /*condition=*/true, &l_gt, nullptr);
        }
      }
    }
    Tensor in_a = h, in_b = h;
    if (config_.variant == Variant::kProposed && config_.posterior_injection &&
        lid_post_full.defined()) {
      in_a = add(h, matmul(lid_post_full, param("inject.A.W")));
      in_b = add(h, matmul(lid_post_full, param("inject.B.W")));
    }
    Tensor ha = in_a, hb = in_b;
    for (int i = 1; i <= config_.expert_blocks; ++i) {
      ha = encoder_block("expA" + std::to_string(i), ha, mask_row, dropout_rng);
      hb = encoder_block("expB" + std::to_string(i), hb, mask_row, dropout_rng);
    }
    if (with_loss) {
      tap_head("expA", ha, L, &lat_a, a_lang, false, &l_lang_a, nullptr);
      tap_head("expB", hb, L, &lat_b, a_lang, false, &l_lang_b, nullptr);
      l_dis = disentangle_loss_op(take_rows(ha, L), take_rows(hb, L),
                                  config_.disentangle_mode);
    }
    Tensor gate_logits = add_rowvec(
        matmul(concat_cols({ha, hb}), param("gate.W")), param("gate.b"));
    Tensor gate = softmax_rows(gate_logits);
    Tensor combined = add(mul_colvec(ha, slice_cols(gate, 0, 1)),
                          mul_colvec(hb, slice_cols(gate, 1, 1)));
    res.gate_weights = take_rows(gate, L).data();
    tap_head("final", combined, L, with_loss ? &mixed : nullptr, a_mix, false,
             &l_mix, &res.final_post);
  } else {
    for (int i = 1; i <= config_.num_blocks; ++i) {
      h = encoder_block("enc" + std::to_string(i), h, mask_row, dropout_rng);
      if (config_.has_taps() &&
          std::find(config_.taps.begin(), config_.taps.end(), i) !=
              config_.taps.end()) {
        const bool is_lid =
            config_.variant == Variant::kScctcLidAll ||
            (config_.variant == Variant::kScctcLid3 && i == config_.lid_tap);
        Tensor tap_loss;
        Posteriorgram tap_post;
        h = tap_head("tap" + std::to_string(i), h, L,
                     with_loss ? (is_lid ? &lid_target : &mixed) : nullptr,
                     a_inter, config_.condition_taps, &tap_loss, &tap_post);
        if (with_loss) inter_losses.push_back(tap_loss);
        if (is_lid && i == config_.lid_tap) {
          res.lid_post = tap_post;
          res.has_lid = true;
        }
        res.tap_posts.push_back(std::move(tap_post));
      }
    }
    tap_head("final", h, L, with_loss ? &mixed : nullptr, a_mix, false, &l_mix,
             &res.final_post);
  }

  if (!with_loss) return res;

  // Assemble the variant's total objective as a graph scalar.
  Tensor total;
  switch (config_.variant) {
    case Variant::kBaseline:
      total = l_mix;
      break;
    case Variant::kScctc:
    case Variant::kScctcLid3:
    case Variant::kScctcLidAll: {
      Tensor inter = inter_losses[0];
      for (size_t i = 1; i < inter_losses.size(); ++i)
        inter = add(inter, inter_losses[i]);
      inter = scale(inter, 1.0 / inter_losses.size());
      res.losses.l_inter = inter.item();
      total = scale(add(l_mix, inter), 0.5);
      break;
    }
    case Variant::kDmoe: {
      Tensor lang = scale(add(l_lang_a, l_lang_b), 0.5);
      total = add(scale(add(l_mix, lang), 0.5),
                  scale(l_dis, config_.lambda_disentangle));
      break;
    }
    case Variant::kProposed: {
      Tensor lang = scale(add(l_lang_a, l_lang_b), 0.5);
      Tensor inter = scale(add(l_lid, l_gt), 0.5);
      res.losses.l_inter = inter.item();
      total = add(scale(add(l_mix, scale(add(lang, inter), 0.5)), 0.5),
                  scale(l_dis, config_.lambda_disentangle));
      break;
    }
  }
  res.total = total;
  res.losses.l_mix = l_mix.item();
  if (l_lang_a.defined()) res.losses.l_lang_a = l_lang_a.item();
  if (l_lang_b.defined()) res.losses.l_lang_b = l_lang_b.item();
  if (l_lid.defined()) res.losses.l_inter_lid = l_lid.item();
  if (l_gt.defined()) res.losses.l_inter_gt = l_gt.item();
  if (l_dis.defined()) res.losses.l_disentangle = l_dis.item();
  res.losses.l_total = total.item();
  return res;
}

}  // namespace lattice
