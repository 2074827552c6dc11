// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "dtts/trainer.hpp"

namespace dtts {

struct DurationReport {
  double median_rel_error = 0.0;
  double correlation = 0.0;  // predicted vs true total length
  int distinct_totals = 0;   // across the latent draws on the fixed text
  int num_utterances = 0;
  std::vector<double> z_totals;
};

/// Held-out duration evaluation: per-token relative duration error against the
/// task's canonical durations, predicted-vs-true total-length correlation, and
/// a total-length histogram across `z_draws` latents on one fixed text.
inline DurationReport eval_durations(const GeneratorParams& params, const ToyTask& task, int num_utterances,
                                     std::uint64_t seed, const std::string& out_dir = "", int z_draws = 128) {
  using namespace trainer_detail;
  namespace fs = std::filesystem;
  Rng base(seed);
  DurationReport report;
  report.num_utterances = num_utterances;
  std::ofstream detail_csv;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    detail_csv.open(out_dir + "/durations.csv");
    detail_csv << "utterance,position,token_id,true_steps,predicted_steps,rel_error\n";
  }
  std::vector<double> rel_errors, pred_totals, true_totals;
  TrainConfig seq_cfg;  // only the token-count bounds are used here
  for (int u = 0; u < num_utterances; ++u) {
    Rng data_rng = base.substream(stream_key(kEval, u, 0));
    TokenSequence seq = draw_sequence(task, seq_cfg, data_rng);
    Rng z_rng = base.substream(stream_key(kEval, u, 1));
    Conditioning cond = make_conditioning(params, 0, z_rng.normal_vec(params.aligner.cfg.latent_dim));
    auto cvec = concat_conditioning(cond, params.aligner.cfg);
    Mat features = encode_tokens(seq, cvec, params.aligner);
    auto lengths = predict_lengths(features, seq.true_length, cvec, params.aligner);
    double pred_total = 0.0, true_total = 0.0;
    for (int n = 0; n < seq.true_length; ++n) {
      double true_steps = double(task.duration_steps(seq.ids[n]));
      double rel = std::fabs(lengths[n] - true_steps) / true_steps;
      rel_errors.push_back(rel);
      pred_total += lengths[n];
      true_total += true_steps;
      if (detail_csv.is_open())
        detail_csv << u << "," << n << "," << seq.ids[n] << "," << true_steps << "," << lengths[n] << "," << rel
                   << "\n";
    }
    pred_totals.push_back(pred_total);
    true_totals.push_back(true_total);
  }
  report.median_rel_error = median(rel_errors);
  report.correlation = pearson_correlation(pred_totals, true_totals);

  // Fixed text, many latents: does the latent actually move the length?
  TokenSequence fixed;
  fixed.vocab_size = task.vocab_size();
  fixed.ids.assign(size_t(task.max_tokens), task.silence_id());
  const int fixed_tones[5] = {0, 3, 5, 1, 6};
  fixed.ids[0] = task.silence_id();
  for (int i = 0; i < 5; ++i) fixed.ids[size_t(i + 1)] = 1 + fixed_tones[i];
  fixed.ids[6] = task.silence_id();
  fixed.true_length = 7;
  std::ofstream z_csv;
  if (!out_dir.empty()) {
    z_csv.open(out_dir + "/z_lengths.csv");
    z_csv << "draw,total_length\n";
  }
  std::set<double> distinct;
  for (int d = 0; d < z_draws; ++d) {
    Rng z_rng = base.substream(stream_key(kEval, d, 2));
    Conditioning cond = make_conditioning(params, 0, z_rng.normal_vec(params.aligner.cfg.latent_dim));
    auto cvec = concat_conditioning(cond, params.aligner.cfg);
    Mat features = encode_tokens(fixed, cvec, params.aligner);
    auto lengths = predict_lengths(features, fixed.true_length, cvec, params.aligner);
    double total = 0.0;
    for (int n = 0; n < fixed.true_length; ++n) total += lengths[n];
    report.z_totals.push_back(total);
    distinct.insert(total);
    if (z_csv.is_open()) z_csv << d << "," << total << "\n";
  }
  report.distinct_totals = int(distinct.size());
  if (!out_dir.empty()) {
    std::ofstream summary(out_dir + "/summary.csv");
    summary << "median_rel_error,correlation,distinct_totals,num_utterances\n";
    summary << report.median_rel_error << "," << report.correlation << "," << report.distinct_totals << ","
            << report.num_utterances << "\n";
  }
  return report;
}

struct BenchReport {
  std::string hardware = "cpu";
  int utt_per_batch = 0;
  int batches_per_run = 0;  // forward passes per run
  int utt_per_run = 0;
  double len_per_utt_s = 0.0;
  double len_per_run_s = 0.0;
  double median_run_time_s = 0.0;
  double realtime_factor = 0.0;
};

/// Batched-inference benchmark: one run = `passes_per_run` consecutive batched
/// forward passes; the median over `runs` runs is reported together with the
/// realtime factor (generated seconds / median run seconds).
inline BenchReport bench(const GeneratorParams& params, const ToyTask& task, double utterance_seconds, int batch,
                         int runs, int passes_per_run = 10, std::uint64_t seed = 0) {
  Rng base(seed);
  TokenSequence seq;
  seq.vocab_size = task.vocab_size();
  seq.ids.assign(size_t(task.max_tokens), task.silence_id());
  for (int i = 1; i + 1 < task.max_tokens; ++i) seq.ids[size_t(i)] = 1 + (i - 1) % task.num_tones;
  seq.true_length = task.max_tokens;
  const int out_steps = std::max(1, int(std::lround(utterance_seconds * task.aligner_rate)));
  std::vector<Conditioning> conds;
  for (int b = 0; b < batch; ++b)
    conds.push_back(make_conditioning(params, 0, base.normal_vec(params.aligner.cfg.latent_dim)));

  auto one_pass = [&]() {
    for (int b = 0; b < batch; ++b) {
      AlignerOutput out = align(seq, conds[size_t(b)], params.aligner, 0, out_steps);
      auto wave = decoder_fwd(out.features, params.decoder);
      volatile double sink = wave.empty() ? 0.0 : wave[0];
      (void)sink;
    }
  };
  one_pass();  // warm-up

  std::vector<double> run_times;
  run_times.reserve(runs);
  for (int r = 0; r < runs; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    for (int p = 0; p < passes_per_run; ++p) one_pass();
    run_times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  BenchReport rep;
  rep.utt_per_batch = batch;
  rep.batches_per_run = passes_per_run;
  rep.utt_per_run = batch * passes_per_run;
  rep.len_per_utt_s = double(out_steps) / task.aligner_rate;
  rep.len_per_run_s = rep.len_per_utt_s * rep.utt_per_run;
  rep.median_run_time_s = median(run_times);
  rep.realtime_factor = rep.len_per_run_s / rep.median_run_time_s;
  return rep;
}

}  // namespace dtts
