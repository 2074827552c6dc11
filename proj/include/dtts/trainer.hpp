// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dtts/io.hpp"
#include "dtts/losses.hpp"
#include "dtts/optim.hpp"
#include "dtts/scorer.hpp"
#include "dtts/softdtw.hpp"
#include "dtts/toytask.hpp"

namespace dtts {

enum class LossMode { L1, SoftDtw };

struct TrainConfig {
  int steps = 2000;
  int batch = 16;
  std::uint64_t seed = 0;
  double lr = 1e-3;  // cosine-decayed to 0 at the final step
  AdamConfig adam;
  LossMode loss = LossMode::L1;
  bool adversarial = false;
  bool stochastic_durations = false;
  double duration_jitter = 0.10;
  int window_steps = 20;  // 0.5 s training window at 40 Hz
  bool jitter_gt = true;  // jitter ground truth inside the prediction loss
  LossWeights weights;
  DtwConfig dtw;
  bool use_ema = false;
  double ema_decay = 0.9999;
  int threads = 0;  // 0 = hardware concurrency, capped at the batch size
  int min_utt_tokens = 3;
  int max_utt_tokens = 8;
  AlignerConfig aligner = AlignerConfig::toy();
  DecoderConfig decoder;
  int scorer_channels = 8;
  int scorer_kernel = 8;
};

struct StepMetrics {
  int step = 0;
  double adv = 0.0, pred = 0.0, length = 0.0, total = 0.0;
};

namespace trainer_detail {

// Substream keys: distinct kinds keep data, latents, offsets and jitter
// independent of one another and of the batch traversal order.
enum StreamKind : std::uint64_t {
  kData = 1,
  kLatent = 2,
  kOffset = 3,
  kJitter = 4,
  kDiscData = 5,
  kDiscLatent = 6,
  kDiscOffset = 7,
  kDiscRealWin = 8,
  kDiscFakeWin = 9,
  kGenAdvWin = 10,
  kInit = 11,
  kEval = 12,
};

inline std::uint64_t stream_key(StreamKind kind, long step, int slot) {
  return (std::uint64_t(kind) << 56) ^ (std::uint64_t(step) << 24) ^ std::uint64_t(slot);
}

inline TokenSequence draw_sequence(const ToyTask& task, const TrainConfig& cfg, Rng& rng) {
  int count = int(rng.uniform_int(cfg.min_utt_tokens, cfg.max_utt_tokens));
  TokenSequence seq;
  seq.vocab_size = task.vocab_size();
  seq.ids.assign(size_t(task.max_tokens), task.silence_id());
  seq.ids[0] = task.silence_id();
  for (int i = 0; i < count; ++i) seq.ids[size_t(i + 1)] = 1 + int(rng.uniform_int(0, task.num_tones - 1));
  seq.ids[size_t(count + 1)] = task.silence_id();
  seq.true_length = count + 2;
  return seq;
}

inline std::vector<double> ground_truth_window(const GroundTruth& gt, const ToyTask& task, long eta_steps,
                                               int window_steps) {
  const int up = task.upsample_factor();
  const long window_samples = long(window_steps) * up;
  auto padded = post_pad(gt.audio_mu, (eta_steps + window_steps) * long(up));
  return extract_window(padded, {eta_steps * up, window_samples});
}

}  // namespace trainer_detail

/// Forward pass of the generator over one training example's window.
struct GeneratorForward {
  TokenSequence seq;
  GroundTruth gt;
  Conditioning cond;
  long eta = 0;
  AlignerTrace aligner_trace;
  AlignerOutput aligned;
  DecoderTrace decoder_trace;
  std::vector<double> waveform;
};

inline GeneratorForward generator_forward(const GeneratorParams& params, const ToyTask& task,
                                          const TrainConfig& cfg, long step, int slot, const Rng& base,
                                          bool with_traces, trainer_detail::StreamKind data_kind,
                                          trainer_detail::StreamKind latent_kind,
                                          trainer_detail::StreamKind offset_kind) {
  using namespace trainer_detail;
  GeneratorForward f;
  Rng data_rng = base.substream(stream_key(data_kind, step, slot));
  f.seq = draw_sequence(task, cfg, data_rng);
  f.gt = synthesize_ground_truth(f.seq, task, cfg.stochastic_durations, data_rng, cfg.duration_jitter);
  Rng z_rng = base.substream(stream_key(latent_kind, step, slot));
  f.cond = make_conditioning(params, 0, z_rng.normal_vec(params.aligner.cfg.latent_dim));
  Rng eta_rng = base.substream(stream_key(offset_kind, step, slot));
  long max_eta = std::max(0L, long(f.gt.total_steps) - cfg.window_steps);
  f.eta = eta_rng.uniform_int(0, max_eta);
  f.aligned = align(f.seq, f.cond, params.aligner, f.eta, cfg.window_steps, NormMode::PerExample,
                    with_traces ? &f.aligner_trace : nullptr);
  f.waveform = decoder_fwd(f.aligned.features, params.decoder, with_traces ? &f.decoder_trace : nullptr);
  return f;
}

/// One generator example: forward, losses, and (optionally) gradients into
/// `grads`. Adversarial scoring is included when `disc` is non-null.
inline StepMetrics train_example(const GeneratorParams& params, const ScorerEnsemble* disc, const ToyTask& task,
                                 const TrainConfig& cfg, long step, int slot, const Rng& base,
                                 GeneratorParams* grads) {
  using namespace trainer_detail;
  GeneratorForward f = generator_forward(params, task, cfg, step, slot, base, grads != nullptr, kData, kLatent,
                                         kOffset);
  auto gt_window = ground_truth_window(f.gt, task, f.eta, cfg.window_steps);

  MelForward gen_mel = mel_spectrogram_fwd(f.waveform, task.mel, true, false);
  Rng jitter_rng = base.substream(stream_key(kJitter, step, slot));
  MelForward gt_mel = mel_spectrogram_fwd(gt_window, task.mel, true, cfg.jitter_gt, &jitter_rng);

  StepMetrics m;
  m.step = int(step);
  Mat dspec;
  if (cfg.loss == LossMode::L1) {
    m.pred = l1_spectrogram_loss(gen_mel.value, gt_mel.value, grads ? &dspec : nullptr);
  } else {
    DtwResult r = soft_dtw(gen_mel.value, gt_mel.value, cfg.dtw);
    m.pred = r.value;
    dspec = std::move(r.grad_gen);
  }

  std::vector<double> valid_lengths(f.aligned.token_lengths.begin(),
                                    f.aligned.token_lengths.begin() + f.seq.true_length);
  std::vector<double> dlen_valid;
  m.length = length_loss(valid_lengths, double(f.gt.total_steps), grads ? &dlen_valid : nullptr);

  std::vector<double> dwave(f.waveform.size(), 0.0);
  std::vector<ScorerTrace> adv_traces;
  std::vector<RwdWindow> adv_windows;
  std::vector<double> adv_scores;
  if (disc) {
    Rng win_rng = base.substream(stream_key(kGenAdvWin, step, slot));
    for (const auto& s : disc->scorers) {
      auto windows = sample_rwd_windows(f.waveform, {s.window_size}, win_rng);
      ScorerTrace tr;
      adv_scores.push_back(score_window(s, windows[0].samples, grads ? &tr : nullptr));
      adv_traces.push_back(std::move(tr));
      adv_windows.push_back(std::move(windows[0]));
    }
    m.adv = adv_generator_loss(adv_scores);
  }
  m.total = total_generator_loss(m.adv, m.pred, m.length, cfg.weights).total;
  if (!grads) return m;

  // Backward. Scale cotangents by the loss weights up front.
  for (double& v : dspec.v) v *= cfg.weights.lambda_pred;
  std::vector<double> dwave_pred = mel_spectrogram_bwd(gen_mel, dspec, task.mel);
  for (size_t i = 0; i < dwave.size(); ++i) dwave[i] += dwave_pred[i];
  if (disc) {
    ScorerEnsemble scratch = make_scorer_grads(*disc);  // generator pass discards scorer grads
    const double dscore = -1.0 / double(disc->scorers.size());
    for (size_t i = 0; i < disc->scorers.size(); ++i) {
      auto dwin = score_window_bwd(disc->scorers[i], adv_traces[i], dscore, scratch.scorers[i]);
      for (size_t k = 0; k < dwin.size(); ++k) dwave[size_t(adv_windows[i].start) + k] += dwin[k];
    }
  }
  Mat dfeatures = decoder_bwd(params.decoder, f.decoder_trace, dwave, grads->decoder);
  std::vector<double> dlengths(f.aligned.token_lengths.size(), 0.0);
  for (int n = 0; n < f.seq.true_length; ++n) dlengths[size_t(n)] = cfg.weights.lambda_length * dlen_valid[size_t(n)];
  auto dcond = align_bwd(params.aligner, f.aligner_trace, dfeatures, dlengths, 0.0, grads->aligner);
  const int sdim = params.aligner.cfg.speaker_dim;
  const int ldim = params.aligner.cfg.latent_dim;
  for (int k = 0; k < sdim; ++k)
    grads->speaker_table.v[size_t(f.cond.speaker_id) * sdim + k] += dcond[size_t(ldim + k)];
  return m;
}

/// One discriminator example: hinge loss on real/fake random windows,
/// gradients into `dgrads`. The generator is run forward-only.
inline double disc_example(const GeneratorParams& params, const ScorerEnsemble& disc, const ToyTask& task,
                           const TrainConfig& cfg, long step, int slot, const Rng& base, ScorerEnsemble* dgrads) {
  using namespace trainer_detail;
  GeneratorForward f = generator_forward(params, task, cfg, step, slot, base, false, kDiscData, kDiscLatent,
                                         kDiscOffset);
  auto real = ground_truth_window(f.gt, task, f.eta, cfg.window_steps);
  Rng real_rng = base.substream(stream_key(kDiscRealWin, step, slot));
  Rng fake_rng = base.substream(stream_key(kDiscFakeWin, step, slot));
  double loss = 0.0;
  const double inv_s = 1.0 / double(disc.scorers.size());
  for (size_t i = 0; i < disc.scorers.size(); ++i) {
    const auto& s = disc.scorers[i];
    auto rwin = sample_rwd_windows(real, {s.window_size}, real_rng);
    auto fwin = sample_rwd_windows(f.waveform, {s.window_size}, fake_rng);
    ScorerTrace rtr, ftr;
    double d_real = score_window(s, rwin[0].samples, dgrads ? &rtr : nullptr);
    double d_fake = score_window(s, fwin[0].samples, dgrads ? &ftr : nullptr);
    loss += inv_s * hinge_discriminator_loss(d_real, d_fake);
    if (dgrads) {
      if (1.0 - d_real > 0.0) score_window_bwd(s, rtr, -inv_s, dgrads->scorers[i]);
      if (1.0 + d_fake > 0.0) score_window_bwd(s, ftr, inv_s, dgrads->scorers[i]);
    }
  }
  return loss;
}

struct TrainResult {
  GeneratorParams params;
  std::vector<StepMetrics> metrics;
  std::string checkpoint_dir;
  std::string metrics_path;
  double wall_seconds = 0.0;
  double disc_loss_last = 0.0;
};

namespace trainer_detail {

template <class P>
inline std::vector<std::vector<double>*> tensor_values(P& p) {
  std::vector<std::vector<double>*> out;
  for_each_tensor(p, [&](const std::string&, Tensor& t) { out.push_back(&t.v); });
  return out;
}

template <class P>
inline std::vector<const std::vector<double>*> tensor_values_const(P& p) {
  std::vector<const std::vector<double>*> out;
  for_each_tensor(p, [&](const std::string&, Tensor& t) { out.push_back(&t.v); });
  return out;
}

}  // namespace trainer_detail

inline void save_generator(const std::string& dir, GeneratorParams& params, const ToyTask& task) {
  std::vector<NamedTensor> tensors;
  for_each_tensor(params, [&](const std::string& name, Tensor& t) { tensors.push_back({name, t}); });
  save_checkpoint(dir, tensors);
  std::ofstream cfg(dir + "/config.txt");
  const auto& a = params.aligner.cfg;
  cfg << "channels=" << a.channels << "\nblocks=" << a.blocks << "\nlatent_dim=" << a.latent_dim
      << "\nspeaker_dim=" << a.speaker_dim << "\nsigma2=" << a.sigma2 << "\nvocab=" << params.aligner.vocab_size
      << "\nnum_speakers=" << params.speaker_table.shape[0] << "\nnum_tones=" << task.num_tones
      << "\naudio_rate=" << task.audio_rate << "\naligner_rate=" << task.aligner_rate
      << "\nmax_tokens=" << task.max_tokens << "\ndecoder_factors=";
  for (size_t i = 0; i < params.decoder.cfg.factors.size(); ++i)
    cfg << (i ? "," : "") << params.decoder.cfg.factors[i];
  cfg << "\ndecoder_channels=";
  for (size_t i = 0; i < params.decoder.cfg.channels.size(); ++i)
    cfg << (i ? "," : "") << params.decoder.cfg.channels[i];
  cfg << "\n";
}

inline GeneratorParams load_generator(const std::string& dir, ToyTask* task_out = nullptr) {
  std::ifstream cfgf(dir + "/config.txt");
  if (!cfgf) throw std::runtime_error("cannot open checkpoint config: " + dir + "/config.txt");
  std::string line;
  std::vector<std::pair<std::string, std::string>> kv;
  while (std::getline(cfgf, line)) {
    auto eq = line.find('=');
    if (eq != std::string::npos) kv.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  auto get = [&](const std::string& k) -> std::string {
    for (auto& [a, b] : kv)
      if (a == k) return b;
    throw std::runtime_error("checkpoint config missing key: " + k);
  };
  ToyTask task;
  task.num_tones = std::stoi(get("num_tones"));
  task.audio_rate = std::stoi(get("audio_rate"));
  task.aligner_rate = std::stoi(get("aligner_rate"));
  task.max_tokens = std::stoi(get("max_tokens"));
  AlignerConfig acfg = AlignerConfig::toy();
  acfg.channels = std::stoi(get("channels"));
  acfg.blocks = std::stoi(get("blocks"));
  acfg.latent_dim = std::stoi(get("latent_dim"));
  acfg.speaker_dim = std::stoi(get("speaker_dim"));
  acfg.sigma2 = std::stod(get("sigma2"));
  DecoderConfig dcfg;
  dcfg.factors.clear();
  dcfg.channels.clear();
  {
    auto fs = detail::parse_shape(get("decoder_factors"));
    dcfg.factors.assign(fs.begin(), fs.end());
    auto cs = detail::parse_shape(get("decoder_channels"));
    dcfg.channels.assign(cs.begin(), cs.end());
  }
  Rng rng(0);
  GeneratorParams params = make_generator_params(task, acfg, dcfg, std::stoi(get("num_speakers")), rng);
  auto tensors = load_checkpoint(dir);
  size_t idx = 0;
  for_each_tensor(params, [&](const std::string& name, Tensor& t) {
    if (idx >= tensors.size() || tensors[idx].name != name)
      throw std::runtime_error("checkpoint tensor order mismatch at " + name);
    if (tensors[idx].tensor.shape != t.shape) throw std::runtime_error("checkpoint shape mismatch at " + name);
    t.v = std::move(tensors[idx].tensor.v);
    ++idx;
  });
  if (idx != tensors.size()) throw std::runtime_error("checkpoint holds unexpected extra tensors");
  if (task_out) *task_out = task;
  return params;
}

/// Full training loop. Per-example gradients are computed into per-slot
/// buffers (parallelized over a thread pool) and reduced in slot order, so
/// results do not depend on the thread count.
inline TrainResult train_toy(const ToyTask& task, const TrainConfig& cfg, const std::string& out_dir) {
  namespace fs = std::filesystem;
  using namespace trainer_detail;
  auto t_start = std::chrono::steady_clock::now();
  Rng base(cfg.seed);
  Rng init_rng = base.substream(stream_key(kInit, 0, 0));
  GeneratorParams params = make_generator_params(task, cfg.aligner, cfg.decoder, 1, init_rng);
  ScorerEnsemble disc;
  Adam opt_d(cfg.adam);
  if (cfg.adversarial) disc = make_scorer_ensemble(task.rwd_sizes(), cfg.scorer_channels, cfg.scorer_kernel,
                                                   init_rng);

  Adam opt_g(cfg.adam);
  Ema ema(cfg.ema_decay);
  auto g_values = tensor_values(params);

  std::vector<GeneratorParams> slot_grads;
  slot_grads.reserve(cfg.batch);
  for (int i = 0; i < cfg.batch; ++i) slot_grads.push_back(make_generator_grads(params));
  GeneratorParams total_grads = make_generator_grads(params);

  int nthreads = cfg.threads > 0 ? cfg.threads : int(std::thread::hardware_concurrency());
  nthreads = std::max(1, std::min(nthreads, cfg.batch));

  std::ofstream metrics_csv;
  std::string metrics_path;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    metrics_path = out_dir + "/metrics.csv";
    metrics_csv.open(metrics_path);
    metrics_csv << "step,adv,pred,length,total\n";
  }

  TrainResult result;
  for (long step = 0; step < cfg.steps; ++step) {
    const double lr = cosine_lr(cfg.lr, step, cfg.steps);

    if (cfg.adversarial) {
      ScorerEnsemble dgrads = make_scorer_grads(disc);
      double dloss = 0.0;
      for (int slot = 0; slot < cfg.batch; ++slot)
        dloss += disc_example(params, disc, task, cfg, step, slot, base, &dgrads);
      result.disc_loss_last = dloss / cfg.batch;
      for_each_tensor(dgrads, [&](const std::string&, Tensor& t) {
        for (double& v : t.v) v /= double(cfg.batch);
      });
      auto d_values = tensor_values(disc);
      auto d_grad_values = tensor_values_const(dgrads);
      opt_d.step(d_values, d_grad_values, lr);
    }

    std::vector<StepMetrics> slot_metrics(cfg.batch);
    std::vector<std::thread> pool;
    std::atomic<int> next_slot{0};
    std::exception_ptr worker_error;
    std::mutex error_mutex;
    auto worker = [&]() {
      try {
        for (;;) {
          int slot = next_slot.fetch_add(1);
          if (slot >= cfg.batch) break;
          for_each_tensor(slot_grads[slot], [](const std::string&, Tensor& t) { t.zero(); });
          slot_metrics[slot] = train_example(params, cfg.adversarial ? &disc : nullptr, task, cfg, step, slot,
                                             base, &slot_grads[slot]);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!worker_error) worker_error = std::current_exception();
      }
    };
    if (nthreads == 1) {
      worker();
    } else {
      for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    if (worker_error) {
      try {
        std::rethrow_exception(worker_error);
      } catch (const std::exception& e) {
        throw std::runtime_error("training failed at step " + std::to_string(step) + ": " + e.what());
      }
    }

    StepMetrics m;
    m.step = int(step);
    for (int slot = 0; slot < cfg.batch; ++slot) {
      m.adv += slot_metrics[slot].adv;
      m.pred += slot_metrics[slot].pred;
      m.length += slot_metrics[slot].length;
    }
    m.adv /= cfg.batch;
    m.pred /= cfg.batch;
    m.length /= cfg.batch;
    m.total = total_generator_loss(m.adv, m.pred, m.length, cfg.weights).total;
    if (!std::isfinite(m.total))
      throw std::runtime_error("training diverged (non-finite loss) at step " + std::to_string(step));

    for_each_tensor(total_grads, [](const std::string&, Tensor& t) { t.zero(); });
    {
      // ordered reduction over slots
      std::vector<std::vector<double>*> dst = tensor_values(total_grads);
      for (int slot = 0; slot < cfg.batch; ++slot) {
        auto src = tensor_values(slot_grads[slot]);
        for (size_t i = 0; i < dst.size(); ++i) {
          auto& d = *dst[i];
          const auto& s = *src[i];
          for (size_t k = 0; k < d.size(); ++k) d[k] += s[k];
        }
      }
      for (auto* d : dst)
        for (double& v : *d) v /= double(cfg.batch);
    }

    auto g_grad_values = tensor_values_const(total_grads);
    opt_g.step(g_values, g_grad_values, lr);
    if (cfg.use_ema) ema.update(tensor_values_const(params));

    result.metrics.push_back(m);
    if (metrics_csv.is_open())
      metrics_csv << m.step << "," << m.adv << "," << m.pred << "," << m.length << "," << m.total << "\n";
  }

  if (!out_dir.empty()) {
    result.checkpoint_dir = out_dir + "/checkpoint";
    save_generator(result.checkpoint_dir, params, task);
    if (cfg.use_ema && ema.initialized()) {
      GeneratorParams shadow = params;
      auto views = tensor_values(shadow);
      ema.copy_to(views);
      save_generator(out_dir + "/checkpoint_ema", shadow, task);
    }
    result.metrics_path = metrics_path;
  }
  result.params = std::move(params);
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

}  // namespace dtts
