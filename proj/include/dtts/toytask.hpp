// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtts/aligner.hpp"
#include "dtts/decoder.hpp"
#include "dtts/mel.hpp"
#include "dtts/signal.hpp"
#include "dtts/text.hpp"

namespace dtts {

// Synthetic "tone language": token k is a fixed-frequency sinusoid with a
// fixed duration, so per-token ground-truth durations are known exactly. The
// rates keep the 120x decoder upsampling ratio of the full-scale setup while
// staying CPU-friendly.

struct ToyTask {
  int num_tones = 8;
  int audio_rate = 4800;
  int aligner_rate = 40;
  double tone_amplitude = 0.5;
  double silence_seconds = 0.05;
  int max_tokens = 12;  // padded token length for training sequences
  MelParams mel = MelParams::toy();

  double tone_frequency(int k) const { return 200.0 + 100.0 * k; }
  double tone_seconds(int k) const { return 0.10 + 0.02 * k; }
  int upsample_factor() const {
    if (audio_rate % aligner_rate != 0)
      throw std::invalid_argument("toy task: audio rate must be a multiple of the aligner rate");
    return audio_rate / aligner_rate;
  }
  int vocab_size() const { return num_tones + 1; }  // tones plus the silence token
  int silence_id() const { return 0; }

  /// Seconds for a token id (0 = silence, k+1 = tone k).
  double token_seconds(int id) const { return id == 0 ? silence_seconds : tone_seconds(id - 1); }

  /// Canonical (deterministic) duration in aligner steps.
  int duration_steps(int id) const { return int(std::lround(token_seconds(id) * aligner_rate)); }

  /// Tones are written as digits; '.' maps onto the silence token so the
  /// standard substitution table's punctuation outputs stay in-vocabulary.
  Vocabulary vocabulary() const {
    Vocabulary v;
    v.silence_id = 0;
    v.size = vocab_size();
    v.symbol_to_id["_"] = 0;
    v.symbol_to_id["."] = 0;
    for (int k = 0; k < num_tones; ++k) v.symbol_to_id[std::string(1, char('0' + k))] = k + 1;
    return v;
  }

  /// Discriminator window sizes, scaled from 24 kHz to the toy rate.
  std::vector<int> rwd_sizes() const {
    std::vector<int> out;
    for (int s : default_rwd_sizes()) out.push_back(int(std::lround(double(s) * audio_rate / 24000.0)));
    return out;
  }
};

struct GroundTruth {
  std::vector<int> durations;  // aligner steps per valid token
  int total_steps = 0;
  std::vector<double> audio_linear;
  std::vector<double> audio_mu;
};

/// Concatenated sinusoid segments per token (silence token = zeros). In
/// stochastic mode each token occurrence gets an independent +-10% duration
/// jitter; realized durations are rounded to whole aligner steps and recorded
/// exactly.
inline GroundTruth synthesize_ground_truth(const TokenSequence& seq, const ToyTask& task, bool stochastic,
                                           Rng& rng, double duration_jitter = 0.10) {
  GroundTruth gt;
  gt.durations.reserve(seq.true_length);
  const int up = task.upsample_factor();
  for (int n = 0; n < seq.true_length; ++n) {
    int id = seq.ids[n];
    double seconds = task.token_seconds(id);
    if (stochastic) seconds *= rng.uniform(1.0 - duration_jitter, 1.0 + duration_jitter);
    int steps = std::max(1, int(std::lround(seconds * task.aligner_rate)));
    gt.durations.push_back(steps);
    gt.total_steps += steps;
    size_t samples = size_t(steps) * up;
    if (id == task.silence_id()) {
      gt.audio_linear.insert(gt.audio_linear.end(), samples, 0.0);
    } else {
      double freq = task.tone_frequency(id - 1);
      for (size_t i = 0; i < samples; ++i)
        gt.audio_linear.push_back(task.tone_amplitude * std::sin(kTwoPi * freq * double(i) / task.audio_rate));
    }
  }
  gt.audio_mu = mu_law_encode(gt.audio_linear);
  return gt;
}

/// Trainable generator state: aligner, decoder and the speaker table.
struct GeneratorParams {
  AlignerParams aligner;
  DecoderParams decoder;
  Tensor speaker_table;  // [num_speakers, speaker_dim]
};

template <class Fn>
inline void for_each_tensor(GeneratorParams& p, Fn&& fn) {
  for_each_tensor(p.aligner, fn);
  for_each_tensor(p.decoder, fn);
  fn("speaker_table", p.speaker_table);
}

inline GeneratorParams make_generator_params(const ToyTask& task, const AlignerConfig& acfg,
                                             const DecoderConfig& dcfg, int num_speakers, Rng& rng) {
  GeneratorParams p;
  p.aligner = make_aligner_params(acfg, task.vocab_size(), rng);
  p.decoder = make_decoder_params(dcfg, acfg.channels, task.upsample_factor(), rng);
  p.speaker_table = Tensor({num_speakers, acfg.speaker_dim});
  orthogonal_init(p.speaker_table, rng);
  return p;
}

inline GeneratorParams make_generator_grads(const GeneratorParams& p) {
  GeneratorParams g = p;
  for_each_tensor(g, [](const std::string&, Tensor& t) { t.zero(); });
  return g;
}

inline Conditioning make_conditioning(const GeneratorParams& p, int speaker_id, std::vector<double> latent) {
  Conditioning c;
  c.latent = std::move(latent);
  c.speaker_id = speaker_id;
  const int dim = p.aligner.cfg.speaker_dim;
  c.speaker_embedding.assign(p.speaker_table.v.begin() + size_t(speaker_id) * dim,
                             p.speaker_table.v.begin() + size_t(speaker_id + 1) * dim);
  return c;
}

}  // namespace dtts
