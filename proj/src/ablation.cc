// lattice/ablation.cc
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

#include "lattice/ablation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace lattice {

namespace fs = std::filesystem;
using nlohmann::json;

EvalSummary evaluate_model(const Model& model,
                           const std::vector<const Utterance*>& utts,
                           const EvalConfig& eval) {
  EvalSummary out;
  std::vector<TargetSequence> hyps, refs;
  int64_t frames_total = 0;
  double dom_frames = 0.0, maxp_sum = 0.0, cover_frames = 0.0;
  double f1_sum = 0.0, offset_sum = 0.0;
  int boundary_utts = 0;
  for (const Utterance* u : utts) {
    ForwardResult res = model.forward(*u, u->frames, /*with_loss=*/false);
    if (eval.decoder == "beam")
      hyps.push_back(prefix_beam_decode(res.final_post, model.config().beam_width));
    else
      hyps.push_back(greedy_decode(res.final_post));
    refs.push_back(build_mixed_target(*u));

    PeakinessReport pk = peakiness(res.final_post, eval.peakiness_tau);
    frames_total += u->frames;
    dom_frames += pk.blank_dominance * u->frames;
    maxp_sum += pk.mean_max_posterior * u->frames;

    if (res.has_lid) {
      out.has_lid = true;
      BoundaryReport br = boundary_metrics(frame_language(res.lid_post),
                                           gold_frame_lid(*u),
                                           eval.boundary_tolerance);
      f1_sum += br.f1;
      offset_sum += br.median_offset;
      out.boundary.gold_switches += br.gold_switches;
      out.boundary.pred_switches += br.pred_switches;
      cover_frames += blank_coverage(res.lid_post) * u->frames;
      ++boundary_utts;
    }
  }
  out.mer = mer(hyps, refs, model.vocab());
  out.peak.tau = eval.peakiness_tau;
  if (frames_total > 0) {
    out.peak.blank_dominance = dom_frames / frames_total;
    out.peak.mean_max_posterior = maxp_sum / frames_total;
  }
  out.boundary.tolerance = eval.boundary_tolerance;
  if (boundary_utts > 0) {
    out.boundary.f1 = f1_sum / boundary_utts;
    out.boundary.median_offset = offset_sum / boundary_utts;
    out.boundary.blank_coverage = cover_frames / frames_total;
  }
  return out;
}

namespace {

json summary_to_json(const EvalSummary& s) {
  return json{
      {"mer", s.mer.mer},
      {"cer_a", s.mer.cer_a},
      {"wer_b", s.mer.wer_b},
      {"ref_tokens_a", s.mer.ref_tokens_a},
      {"ref_tokens_b", s.mer.ref_tokens_b},
      {"utterances", s.mer.utterances},
      {"blank_dominance", s.peak.blank_dominance},
      {"mean_max_posterior", s.peak.mean_max_posterior},
      {"tau", s.peak.tau},
      {"has_lid", s.has_lid},
      {"boundary_f1", s.boundary.f1},
      {"median_offset", s.boundary.median_offset},
      {"blank_coverage", s.boundary.blank_coverage},
      {"gold_switches", s.boundary.gold_switches},
      {"pred_switches", s.boundary.pred_switches},
      {"tolerance", s.boundary.tolerance}};
}

EvalSummary summary_from_json(const json& j) {
  EvalSummary s;
  s.mer.mer = j.at("mer");
  s.mer.cer_a = j.at("cer_a");
  s.mer.wer_b = j.at("wer_b");
  s.mer.ref_tokens_a = j.at("ref_tokens_a");
  s.mer.ref_tokens_b = j.at("ref_tokens_b");
  s.mer.utterances = j.at("utterances");
  s.peak.blank_dominance = j.at("blank_dominance");
  s.peak.mean_max_posterior = j.at("mean_max_posterior");
  s.peak.tau = j.at("tau");
  s.has_lid = j.at("has_lid");
  s.boundary.f1 = j.at("boundary_f1");
  s.boundary.median_offset = j.at("median_offset");
  s.boundary.blank_coverage = j.at("blank_coverage");
  s.boundary.gold_switches = j.at("gold_switches");
  s.boundary.pred_switches = j.at("pred_switches");
  s.boundary.tolerance = j.at("tolerance");
  return s;
}

std::string alpha_label(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", alpha);
  return buf;
}

std::string cell_dir_name(const std::string& variant, double alpha,
                          uint64_t seed) {
  return variant + "_alpha" + alpha_label(alpha) + "_seed" +
         std::to_string(seed);
}

}  // namespace

AblationReport run_ablation(const RunConfig& cfg, const Corpus& corpus,
                            const std::string& out_dir) {
  fs::create_directories(out_dir);
  const int n = static_cast<int>(corpus.utterances.size());
  const int n_test = std::max(1, n / 10);
  if (n_test >= n)
    throw std::invalid_argument("run_ablation: corpus too small to split");

  Corpus train_corpus;
  train_corpus.spec = corpus.spec;
  train_corpus.utterances.assign(corpus.utterances.begin(),
                                 corpus.utterances.end() - n_test);
  std::vector<const Utterance*> test_utts;
  for (int i = n - n_test; i < n; ++i)
    test_utts.push_back(&corpus.utterances[i]);

  AblationReport report;
  for (const auto& variant : cfg.ablate_variants) {
    for (double alpha : cfg.ablate_alphas) {
      for (uint64_t seed : cfg.ablate_seeds) {
        AblationCell cell;
        cell.variant = variant;
        cell.alpha = alpha;
        cell.seed = seed;
        const std::string dir =
            out_dir + "/" + cell_dir_name(variant, alpha, seed);
        const std::string result_path = dir + "/result.json";
        if (fs::exists(result_path)) {
          std::ifstream in(result_path);
          json j;
          in >> j;
          cell.eval = summary_from_json(j.at("eval"));
          cell.best_val_mer = j.at("best_val_mer");
          cell.from_cache = true;
          report.cells.push_back(std::move(cell));
          continue;
        }
        fs::create_directories(dir);

        ModelConfig mc = cfg.model;
        mc.variant = variant_from_name(variant);
        mc.npc.alpha = alpha;
        mc.alpha_mix.reset();
        mc.alpha_lang.reset();
        mc.alpha_inter.reset();
        TrainConfig tc = cfg.train;
        tc.seed = seed;

        Model model(mc);
        TrainResult tr = train(tc, train_corpus, model, dir);
        Model averaged(mc);
        load_params_into(averaged,
                         load_checkpoint(tr.final_model_path).params);
        cell.eval = evaluate_model(averaged, test_utts, cfg.eval);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& em : tr.metrics) best = std::min(best, em.val_mer);
        cell.best_val_mer = best;

        json j{{"variant", variant},
               {"alpha", alpha},
               {"seed", seed},
               {"best_val_mer", cell.best_val_mer},
               {"eval", summary_to_json(cell.eval)}};
        std::ofstream(result_path) << j.dump(2) << "\n";
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

std::string ablation_table(const AblationReport& report) {
  std::vector<std::string> variants;
  std::vector<double> alphas;
  for (const auto& c : report.cells) {
    if (std::find(variants.begin(), variants.end(), c.variant) ==
        variants.end())
      variants.push_back(c.variant);
    if (std::find(alphas.begin(), alphas.end(), c.alpha) == alphas.end())
      alphas.push_back(c.alpha);
  }
  std::sort(alphas.begin(), alphas.end());

  std::ostringstream out;
  out << "MER (mean over seeds)\n";
  out << "variant";
  for (double a : alphas) out << "\talpha=" << alpha_label(a);
  out << "\n";
  for (const auto& v : variants) {
    out << v;
    for (double a : alphas) {
      double sum = 0.0;
      int count = 0;
      for (const auto& c : report.cells)
        if (c.variant == v && c.alpha == a) {
          sum += c.eval.mer.mer;
          ++count;
        }
      char buf[32];
      if (count > 0)
        std::snprintf(buf, sizeof(buf), "%.4f", sum / count);
      else
        std::snprintf(buf, sizeof(buf), "-");
      out << "\t" << buf;
    }
    out << "\n";
  }
  out << "\nper-cell detail\n";
  out << "variant\talpha\tseed\tmer\tblank_dom\tmax_post\tf1\toffset\tcoverage\n";
  for (const auto& c : report.cells) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%s\t%s\t%llu\t%.4f\t%.4f\t%.4f\t%.4f\t%.2f\t%.4f",
                  c.variant.c_str(), alpha_label(c.alpha).c_str(),
                  static_cast<unsigned long long>(c.seed), c.eval.mer.mer,
                  c.eval.peak.blank_dominance, c.eval.peak.mean_max_posterior,
                  c.eval.boundary.f1, c.eval.boundary.median_offset,
                  c.eval.boundary.blank_coverage);
    out << buf << "\n";
  }
  return out.str();
}

void write_ablation_csv(const AblationReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "variant,alpha,seed,mer,cer_a,wer_b,blank_dominance,"
         "mean_max_posterior,boundary_f1,median_offset,blank_coverage\n";
  for (const auto& c : report.cells) {
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "%s,%s,%llu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f",
                  c.variant.c_str(), alpha_label(c.alpha).c_str(),
                  static_cast<unsigned long long>(c.seed), c.eval.mer.mer,
                  c.eval.mer.cer_a, c.eval.mer.wer_b,
                  c.eval.peak.blank_dominance, c.eval.peak.mean_max_posterior,
                  c.eval.boundary.f1, c.eval.boundary.median_offset,
                  c.eval.boundary.blank_coverage);
    out << buf << "\n";
  }
}

}  // namespace lattice
