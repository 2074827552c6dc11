// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Command-line surface: train-toy, eval-durations, dtw-eval, spectrogram,
// align-demo, gradcheck, bench. All outputs are CSV or the raw-f32 dump
// format. Exit codes: 0 success, 1 validation failure, 2 usage error.

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "dtts/dtts.hpp"

namespace {

int run_train_toy(const std::string& out_dir, int steps, int batch, std::uint64_t seed, const std::string& loss,
                  bool adversarial, bool stochastic, bool ema, int threads) {
  dtts::ToyTask task;
  dtts::TrainConfig cfg;
  cfg.steps = steps;
  cfg.batch = batch;
  cfg.seed = seed;
  cfg.adversarial = adversarial;
  cfg.stochastic_durations = stochastic;
  cfg.use_ema = ema;
  cfg.threads = threads;
  if (loss == "l1")
    cfg.loss = dtts::LossMode::L1;
  else if (loss == "dtw")
    cfg.loss = dtts::LossMode::SoftDtw;
  else
    throw std::invalid_argument("unknown loss mode: " + loss + " (expected l1 or dtw)");
  auto result = dtts::train_toy(task, cfg, out_dir);
  const auto& last = result.metrics.back();
  std::printf("trained %d steps in %.1f s\n", steps, result.wall_seconds);
  std::printf("final: step=%d adv=%.6f pred=%.6f length=%.6f total=%.6f\n", last.step, last.adv, last.pred,
              last.length, last.total);
  std::printf("checkpoint: %s\nmetrics: %s\n", result.checkpoint_dir.c_str(), result.metrics_path.c_str());
  return 0;
}

int run_eval_durations(const std::string& checkpoint, int utterances, std::uint64_t seed,
                       const std::string& out_dir) {
  dtts::ToyTask task;
  auto params = dtts::load_generator(checkpoint, &task);
  auto report = dtts::eval_durations(params, task, utterances, seed, out_dir);
  std::printf("median_rel_error,correlation,distinct_totals,num_utterances\n");
  std::printf("%.6f,%.6f,%d,%d\n", report.median_rel_error, report.correlation, report.distinct_totals,
              report.num_utterances);
  return 0;
}

int run_dtw_eval(const std::string& file_a, const std::string& file_b, double tau, double warp, int band,
                 bool print_path) {
  dtts::Mat a = dtts::read_spectrogram_dump(file_a);
  dtts::Mat b = dtts::read_spectrogram_dump(file_b);
  dtts::DtwConfig cfg;
  cfg.temperature = tau;
  cfg.warp_penalty = warp;
  cfg.band = band;
  auto soft = dtts::soft_dtw(a, b, cfg);
  auto hard = dtts::hard_dtw(a, b, cfg);
  std::printf("soft_value,hard_value,path_length\n");
  std::printf("%.9f,%.9f,%d\n", soft.value, hard.value, hard.path_length());
  if (print_path) {
    std::printf("k,gen_idx,gt_idx\n");
    for (size_t k = 0; k < hard.argmin_path.size(); ++k)
      std::printf("%zu,%d,%d\n", k + 1, hard.argmin_path[k].first, hard.argmin_path[k].second);
  }
  return 0;
}

int run_spectrogram(const std::string& wav_path, const std::string& out_path, const std::string& preset,
                    bool no_mu_law) {
  dtts::MelParams mp = preset == "toy" ? dtts::MelParams::toy() : dtts::MelParams{};
  auto wav = dtts::read_wav(wav_path, int(mp.sample_rate));
  auto spec = dtts::mel_spectrogram(wav.samples, mp, !no_mu_law, false);
  dtts::write_spectrogram_dump(out_path, spec.values, int(mp.sample_rate), mp.frame_step);
  std::printf("wrote %dx%d spectrogram to %s\n", spec.values.rows, spec.values.cols, out_path.c_str());
  return 0;
}

int run_align_demo(const std::string& text, int z_draws, const std::string& checkpoint, std::uint64_t seed) {
  dtts::ToyTask task;
  dtts::GeneratorParams params;
  if (!checkpoint.empty()) {
    params = dtts::load_generator(checkpoint, &task);
  } else {
    dtts::Rng rng(seed);
    dtts::TrainConfig defaults;
    params = dtts::make_generator_params(task, defaults.aligner, defaults.decoder, 1, rng);
  }
  auto seq = dtts::preprocess_tokens(text, task.vocabulary(), dtts::SubstitutionTable::standard(),
                                     task.max_tokens);
  dtts::Rng rng(seed ^ 0xA11);
  std::printf("draw,total_length,lengths\n");
  for (int d = 0; d < z_draws; ++d) {
    auto cond = dtts::make_conditioning(params, 0, rng.normal_vec(params.aligner.cfg.latent_dim));
    auto out = dtts::align(seq, cond, params.aligner, 0, -1);
    std::printf("%d,%.6f,\"", d, out.predicted_total_length);
    for (int n = 0; n < seq.true_length; ++n)
      std::printf("%s%.3f", n ? " " : "", out.token_lengths[size_t(n)]);
    std::printf("\"\n");
  }
  return 0;
}

int run_gradcheck(double tolerance) {
  auto registry = dtts::default_gradcheck_registry();
  auto reports = dtts::check_all(registry, {1, 2, 3}, tolerance);
  std::printf("name,seed,max_rel_err,excluded_pct,pass\n");
  bool ok = true;
  for (const auto& r : reports) {
    std::printf("%s,%llu,%.3e,%.2f,%s\n", r.name.c_str(), (unsigned long long)r.seed, r.max_rel_error,
                r.excluded_pct(), r.passed ? "pass" : "FAIL");
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

int run_bench(const std::string& checkpoint, double seconds, int batch, int runs, std::uint64_t seed) {
  dtts::ToyTask task;
  dtts::GeneratorParams params;
  if (!checkpoint.empty()) {
    params = dtts::load_generator(checkpoint, &task);
  } else {
    dtts::Rng rng(seed);
    dtts::TrainConfig defaults;
    params = dtts::make_generator_params(task, defaults.aligner, defaults.decoder, 1, rng);
  }
  auto rep = dtts::bench(params, task, seconds, batch, runs);
  std::printf("hardware,utt_per_batch,batches_per_run,utt_per_run,len_per_utt_s,len_per_run_s,median_run_time_s,realtime_factor\n");
  std::printf("%s,%d,%d,%d,%.2f,%.2f,%.4f,%.2f\n", rep.hardware.c_str(), rep.utt_per_batch, rep.batches_per_run,
              rep.utt_per_run, rep.len_per_utt_s, rep.len_per_run_s, rep.median_run_time_s, rep.realtime_factor);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentiable alignment and spectrogram-loss toolkit"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train-toy", "train the toy aligner+decoder on synthetic tones");
  std::string out_dir = "runs/toy";
  int steps = 2000, batch = 16, threads = 0;
  std::uint64_t seed = 0;
  std::string loss = "l1";
  bool adversarial = false, stochastic = false, ema = false;
  train->add_option("--out", out_dir, "output directory");
  train->add_option("--steps", steps, "optimization steps");
  train->add_option("--batch", batch, "batch size");
  train->add_option("--seed", seed, "random seed");
  train->add_option("--loss", loss, "prediction loss: l1 or dtw");
  train->add_flag("--adversarial", adversarial, "enable the toy adversarial scorers");
  train->add_flag("--stochastic-durations", stochastic, "jitter ground-truth durations by +-10%");
  train->add_flag("--ema", ema, "track an exponential moving average of the weights");
  train->add_option("--threads", threads, "worker threads (0 = auto)");

  auto* evald = app.add_subcommand("eval-durations", "duration accuracy of a trained checkpoint");
  std::string checkpoint;
  int utterances = 64;
  std::string eval_out;
  std::uint64_t eval_seed = 1234;
  evald->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  evald->add_option("--utterances", utterances, "held-out utterances");
  evald->add_option("--seed", eval_seed, "evaluation seed");
  evald->add_option("--out", eval_out, "directory for the CSV reports");

  auto* dtw = app.add_subcommand("dtw-eval", "soft/hard DTW between two spectrogram dumps");
  std::string file_a, file_b;
  double tau = 0.01, warp = 1.0;
  int band = -1;
  bool print_path = false;
  dtw->add_option("file_a", file_a, "first spectrogram dump")->required();
  dtw->add_option("file_b", file_b, "second spectrogram dump")->required();
  dtw->add_option("--tau", tau, "soft-min temperature");
  dtw->add_option("--warp-penalty", warp, "warp penalty");
  dtw->add_option("--band", band, "Sakoe-Chiba half-width (-1 = none)");
  dtw->add_flag("--path", print_path, "print the hard argmin path as CSV");

  auto* spec = app.add_subcommand("spectrogram", "log-mel spectrogram of a WAV file");
  std::string wav_path, dump_path, preset = "full";
  bool no_mu_law = false;
  spec->add_option("wav", wav_path, "input WAV (16-bit PCM or float32, mono)")->required();
  spec->add_option("--out", dump_path, "output dump path")->required();
  spec->add_option("--preset", preset, "mel parameter preset: full (24 kHz) or toy (4.8 kHz)");
  spec->add_flag("--linear", no_mu_law, "input is linear audio, skip mu-law inversion");

  auto* demo = app.add_subcommand("align-demo", "predicted lengths for a token string across latent draws");
  std::string text;
  int z_draws = 8;
  std::string demo_checkpoint;
  std::uint64_t demo_seed = 0;
  demo->add_option("--text", text, "token symbols, e.g. 0413")->required();
  demo->add_option("--z-draws", z_draws, "number of latent draws");
  demo->add_option("--checkpoint", demo_checkpoint, "optional checkpoint (random init otherwise)");
  demo->add_option("--seed", demo_seed, "seed for latents / random init");

  auto* grad = app.add_subcommand("gradcheck", "finite-difference checks for every registered op");
  double tolerance = 1e-4;
  grad->add_option("--tolerance", tolerance, "relative-error tolerance");

  auto* benchcmd = app.add_subcommand("bench", "batched inference benchmark (median of N runs)");
  std::string bench_checkpoint;
  double bench_seconds = 5.0;
  int bench_batch = 2, bench_runs = 101;
  std::uint64_t bench_seed = 0;
  benchcmd->add_option("--checkpoint", bench_checkpoint, "optional checkpoint (random init otherwise)");
  benchcmd->add_option("--seconds", bench_seconds, "utterance length in seconds");
  benchcmd->add_option("--batch", bench_batch, "utterances per batch");
  benchcmd->add_option("--runs", bench_runs, "timed runs (10 passes each)");
  benchcmd->add_option("--seed", bench_seed, "seed");

  for (auto* sub : app.get_subcommands({}))
    sub->set_config("--config", "", "optional key=value config file (flags override it)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version exit cleanly; bad usage is 2
  }

  try {
    if (train->parsed())
      return run_train_toy(out_dir, steps, batch, seed, loss, adversarial, stochastic, ema, threads);
    if (evald->parsed()) return run_eval_durations(checkpoint, utterances, eval_seed, eval_out);
    if (dtw->parsed()) return run_dtw_eval(file_a, file_b, tau, warp, band, print_path);
    if (spec->parsed()) return run_spectrogram(wav_path, dump_path, preset, no_mu_law);
    if (demo->parsed()) return run_align_demo(text, z_draws, demo_checkpoint, demo_seed);
    if (grad->parsed()) return run_gradcheck(tolerance);
    if (benchcmd->parsed()) return run_bench(bench_checkpoint, bench_seconds, bench_batch, bench_runs, bench_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
