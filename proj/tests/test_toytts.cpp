// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "dtts/dtts.hpp"

using namespace dtts;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("dtts_toy_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string dir(const std::string& name) const { return (path / name).string(); }
};

TokenSequence tones_to_sequence(const std::vector<int>& tones, const ToyTask& task) {
  TokenSequence seq;
  seq.vocab_size = task.vocab_size();
  seq.ids.assign(size_t(task.max_tokens), task.silence_id());
  for (size_t i = 0; i < tones.size(); ++i) seq.ids[i + 1] = tones[i] + 1;
  seq.true_length = int(tones.size()) + 2;
  return seq;
}

TrainConfig tiny_train_config() {
  TrainConfig cfg;
  cfg.steps = 12;
  cfg.batch = 4;
  cfg.threads = 2;
  return cfg;
}

}  // namespace

TEST_CASE("toy task constants preserve the 120x upsampling ratio") {
  ToyTask task;
  CHECK(task.upsample_factor() == 120);
  CHECK(task.tone_frequency(0) == 200.0);
  CHECK(task.tone_frequency(7) == 900.0);
  for (int k = 0; k < task.num_tones; ++k) CHECK(task.tone_frequency(k) < task.audio_rate / 2.0);
  CHECK(task.duration_steps(0) == 2);   // 0.05 s of silence at 40 Hz
  CHECK(task.duration_steps(1) == 4);   // 0.10 s
  CHECK(task.duration_steps(8) == 10);  // 0.24 s
  CHECK(task.rwd_sizes() == std::vector<int>{48, 96, 192, 384, 720});
}

TEST_CASE("ground truth synthesis: single tone flanked by silences") {
  ToyTask task;
  Rng rng(1);
  auto seq = tones_to_sequence({0}, task);
  auto gt = synthesize_ground_truth(seq, task, false, rng);
  REQUIRE(gt.durations.size() == 3);
  CHECK(gt.durations[0] == 2);
  CHECK(gt.durations[1] == 4);  // 0.10 s of the 200 Hz tone
  CHECK(gt.durations[2] == 2);
  CHECK(gt.total_steps == 8);
  REQUIRE(long(gt.audio_linear.size()) == 8L * 120);
  for (int i = 0; i < 240; ++i) CHECK(gt.audio_linear[size_t(i)] == 0.0);
  // tone segment: 0.5 * sin(2 pi 200 t / 4800), phase restarts at the segment
  for (int i = 0; i < 480; ++i) {
    double expect = 0.5 * std::sin(kTwoPi * 200.0 * i / 4800.0);
    CHECK(gt.audio_linear[size_t(240 + i)] == doctest::Approx(expect).epsilon(1e-12));
  }
  double total_from_durations = 0.0;
  for (int d : gt.durations) total_from_durations += d;
  CHECK(total_from_durations == gt.total_steps);
}

TEST_CASE("stochastic durations stay within +-10% and are recorded exactly") {
  ToyTask task;
  Rng rng(2);
  auto seq = tones_to_sequence({3, 3, 3, 3, 3, 3}, task);
  bool saw_different = false;
  for (int trial = 0; trial < 20; ++trial) {
    auto gt = synthesize_ground_truth(seq, task, true, rng);
    long samples = 0;
    for (size_t i = 0; i < gt.durations.size(); ++i) samples += long(gt.durations[i]) * 120;
    CHECK(long(gt.audio_linear.size()) == samples);
    for (size_t i = 1; i + 1 < gt.durations.size(); ++i) {
      double base = task.tone_seconds(3) * task.aligner_rate;
      CHECK(gt.durations[i] >= std::floor(base * 0.9) - 1);
      CHECK(gt.durations[i] <= std::ceil(base * 1.1) + 1);
      if (gt.durations[i] != std::lround(base)) saw_different = true;
    }
  }
  CHECK(saw_different);
}

TEST_CASE("toy decoder: shape law and zero map") {
  DecoderConfig dc;
  dc.channels = {6, 4};
  Rng rng(3);
  auto params = make_decoder_params(dc, 8, 120, rng);
  Mat features(5, 8, 0.0);
  auto wave = decoder_fwd(features, params);
  CHECK(wave.size() == 5u * 120u);
  // zero features and zero biases give a zero waveform
  for (double v : wave) CHECK(v == 0.0);
  for (auto& v : features.v) v = 0.3;
  auto wave2 = decoder_fwd(features, params);
  for (double v : wave2) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("toy decoder: unfactorizable upsampling is a config error") {
  DecoderConfig dc;
  dc.channels = {6, 4};
  Rng rng(4);
  CHECK_THROWS_AS(make_decoder_params(dc, 8, 121, rng), std::invalid_argument);
  DecoderConfig mismatched;
  mismatched.factors = {4, 5, 6};
  mismatched.channels = {6};
  mismatched.kernels = {3, 3, 3};
  CHECK_THROWS_AS(make_decoder_params(mismatched, 8, 120, rng), std::invalid_argument);
}

TEST_CASE("training smoke run: finite losses, metrics rows, checkpoint round trip") {
  ToyTask task;
  auto cfg = tiny_train_config();
  TempDir tmp;
  auto result = train_toy(task, cfg, tmp.dir("run"));
  REQUIRE(int(result.metrics.size()) == cfg.steps);
  for (const auto& m : result.metrics) {
    CHECK(std::isfinite(m.total));
    CHECK(m.pred >= 0.0);
    CHECK(m.length >= 0.0);
  }
  std::ifstream csv(result.metrics_path);
  REQUIRE(csv.good());
  std::string header;
  std::getline(csv, header);
  CHECK(header == "step,adv,pred,length,total");

  ToyTask loaded_task;
  auto loaded = load_generator(result.checkpoint_dir, &loaded_task);
  CHECK(loaded_task.audio_rate == task.audio_rate);
  // loaded parameters reproduce the trained model bit for bit
  auto seq = tones_to_sequence({1, 2}, task);
  Rng zr(7);
  auto cond = make_conditioning(result.params, 0, zr.normal_vec(result.params.aligner.cfg.latent_dim));
  auto a = align(seq, cond, result.params.aligner, 0, 10);
  auto cond2 = make_conditioning(loaded, 0, cond.latent);
  auto b = align(seq, cond2, loaded.aligner, 0, 10);
  // checkpoints are float32 on disk, so expect float precision, not double
  for (size_t i = 0; i < a.features.v.size(); ++i)
    CHECK(a.features.v[i] == doctest::Approx(b.features.v[i]).epsilon(1e-4));
}

TEST_CASE("training is deterministic for a fixed seed regardless of thread count") {
  ToyTask task;
  auto cfg = tiny_train_config();
  cfg.steps = 6;
  TempDir tmp;
  cfg.threads = 1;
  auto r1 = train_toy(task, cfg, tmp.dir("a"));
  cfg.threads = 4;
  auto r2 = train_toy(task, cfg, tmp.dir("b"));
  REQUIRE(r1.metrics.size() == r2.metrics.size());
  for (size_t i = 0; i < r1.metrics.size(); ++i) {
    CHECK(r1.metrics[i].pred == r2.metrics[i].pred);
    CHECK(r1.metrics[i].length == r2.metrics[i].length);
    CHECK(r1.metrics[i].total == r2.metrics[i].total);
  }
  // and the metrics files match byte for byte
  std::ifstream fa(r1.metrics_path), fb(r2.metrics_path);
  std::string ca((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  std::string cb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(ca == cb);
}

TEST_CASE("windowed losses equal full-pass losses on the matching slice") {
  ToyTask task;
  TrainConfig cfg;
  Rng rng(11);
  GeneratorParams params = make_generator_params(task, cfg.aligner, cfg.decoder, 1, rng);
  auto seq = tones_to_sequence({2, 5, 1, 6}, task);
  Rng grng(12);
  auto gt = synthesize_ground_truth(seq, task, false, grng);
  auto cond = make_conditioning(params, 0, rng.normal_vec(params.aligner.cfg.latent_dim));
  const long eta = 4;
  const int window = cfg.window_steps;

  auto full = align(seq, cond, params.aligner, 0, gt.total_steps);
  Mat sliced(window, full.features.cols);
  for (int t = 0; t < window; ++t)
    for (int c = 0; c < full.features.cols; ++c) sliced(t, c) = full.features(int(eta) + t, c);
  auto windowed = align(seq, cond, params.aligner, eta, window);

  auto wave_sliced = decoder_fwd(sliced, params.decoder);
  auto wave_windowed = decoder_fwd(windowed.features, params.decoder);
  auto gt_win = extract_window(post_pad(gt.audio_mu, (eta + window) * 120), {eta * 120, window * 120L});
  auto gen_a = mel_spectrogram(wave_sliced, task.mel, true, false);
  auto gen_b = mel_spectrogram(wave_windowed, task.mel, true, false);
  auto ref = mel_spectrogram(gt_win, task.mel, true, false);
  double la = l1_spectrogram_loss(gen_a.values, ref.values);
  double lb = l1_spectrogram_loss(gen_b.values, ref.values);
  CHECK(std::fabs(la - lb) <= 1e-6);
  double da = soft_dtw(gen_a.values, ref.values).value;
  double db = soft_dtw(gen_b.values, ref.values).value;
  CHECK(std::fabs(da - db) <= 1e-6);
}

TEST_CASE("end-to-end gradients are finite at initialization for 5 seeds") {
  ToyTask task;
  TrainConfig cfg;
  cfg.batch = 1;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng base(seed);
    Rng init = base.substream(trainer_detail::stream_key(trainer_detail::kInit, 0, 0));
    GeneratorParams params = make_generator_params(task, cfg.aligner, cfg.decoder, 1, init);
    GeneratorParams grads = make_generator_grads(params);
    auto metrics = train_example(params, nullptr, task, cfg, 0, 0, base, &grads);
    CHECK(std::isfinite(metrics.total));
    bool all_ok = true;
    for_each_tensor(grads, [&](const std::string&, Tensor& t) { all_ok = all_ok && all_finite(t.v); });
    CHECK(all_ok);
  }
}

TEST_CASE("adversarial code path runs and stays finite") {
  ToyTask task;
  TrainConfig cfg;
  cfg.steps = 3;
  cfg.batch = 2;
  cfg.adversarial = true;
  cfg.threads = 1;
  auto result = train_toy(task, cfg, "");
  for (const auto& m : result.metrics) {
    CHECK(std::isfinite(m.adv));
    CHECK(std::isfinite(m.total));
  }
  CHECK(std::isfinite(result.disc_loss_last));
  CHECK(result.metrics.back().adv != 0.0);
}

TEST_CASE("ema shadow tracks parameters and is saved separately") {
  ToyTask task;
  TrainConfig cfg = tiny_train_config();
  cfg.steps = 4;
  cfg.use_ema = true;
  TempDir tmp;
  auto result = train_toy(task, cfg, tmp.dir("run"));
  CHECK(fs::exists(tmp.path / "run" / "checkpoint_ema" / "manifest.txt"));
}

TEST_CASE("eval-durations report shape on an untrained model") {
  ToyTask task;
  TrainConfig cfg;
  Rng rng(13);
  GeneratorParams params = make_generator_params(task, cfg.aligner, cfg.decoder, 1, rng);
  auto report = eval_durations(params, task, 8, 99);
  CHECK(report.num_utterances == 8);
  CHECK(report.z_totals.size() == 128);
  CHECK(report.median_rel_error >= 0.0);
  CHECK(report.distinct_totals >= 2);  // latent sensitivity, even untrained
}

TEST_CASE("bench: protocol shape and batch independence") {
  ToyTask task;
  TrainConfig cfg;
  Rng rng(17);
  GeneratorParams params = make_generator_params(task, cfg.aligner, cfg.decoder, 1, rng);
  auto rep = bench(params, task, 0.5, 2, 3);
  CHECK(rep.utt_per_batch == 2);
  CHECK(rep.batches_per_run == 10);
  CHECK(rep.utt_per_run == 20);
  CHECK(rep.len_per_utt_s == doctest::Approx(0.5));
  CHECK(rep.len_per_run_s == doctest::Approx(10.0));
  CHECK(rep.median_run_time_s > 0.0);
  CHECK(rep.realtime_factor > 0.0);

  // doubling the batch must not change any single utterance's output
  auto seq = tones_to_sequence({1, 4}, task);
  auto cond = make_conditioning(params, 0, rng.normal_vec(params.aligner.cfg.latent_dim));
  auto out1 = align(seq, cond, params.aligner, 0, 20);
  auto w1 = decoder_fwd(out1.features, params.decoder);
  auto out2 = align(seq, cond, params.aligner, 0, 20);
  auto w2 = decoder_fwd(out2.features, params.decoder);
  CHECK(w1 == w2);
}

TEST_CASE("training aborts with the step number when the loss diverges") {
  ToyTask task;
  TrainConfig cfg = tiny_train_config();
  cfg.steps = 4;
  cfg.lr = 1e300;  // guaranteed blow-up
  CHECK_THROWS_WITH_AS(train_toy(task, cfg, ""), doctest::Contains("step"), std::runtime_error);
}
