// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dtts/core.hpp"
#include "dtts/signal.hpp"
#include "dtts/stft.hpp"

namespace dtts {

struct MelParams {
  int frame_length = 2048;
  int frame_step = 1024;
  int num_bins = 80;
  double sample_rate = 24000.0;
  double lower_edge_hz = 80.0;
  double upper_edge_hz = 7600.0;
  double mu = kMuLawDefault;
  int max_jitter = 60;         // samples, applied to ground truth only
  double log_scale = 10000.0;  // value = log(1 + log_scale * mel)

  /// Desk-scale preset for the 4.8 kHz toy task.
  static MelParams toy() {
    MelParams p;
    p.frame_length = 256;
    p.frame_step = 128;
    p.num_bins = 20;
    p.sample_rate = 4800.0;
    p.lower_edge_hz = 40.0;
    p.upper_edge_hz = 2000.0;
    p.max_jitter = 12;  // +-60 samples at 24 kHz, scaled to the toy rate
    return p;
  }
};

struct MelSpectrogram {
  Mat values;  // T x F, log-compressed
  int frame_length = 0, frame_step = 0, num_bins = 0;
  double sample_rate = 0.0, lower_edge_hz = 0.0, upper_edge_hz = 0.0;
};

inline double hertz_to_mel(double f) { return 1127.0 * std::log1p(f / 700.0); }

/// Triangular mel filterbank over [lower, upper] in mel space, un-normalized
/// peaks, DC bin zeroed. Returns [num_spectrogram_bins x num_mel_bins].
inline Mat mel_filterbank(int num_mel_bins, int num_spectrogram_bins, double sample_rate, double lower_edge_hz,
                          double upper_edge_hz) {
  if (num_mel_bins <= 0 || num_spectrogram_bins < 2) throw std::invalid_argument("mel_filterbank: bad sizes");
  if (!(0.0 <= lower_edge_hz && lower_edge_hz < upper_edge_hz && upper_edge_hz <= sample_rate / 2.0))
    throw std::invalid_argument("mel_filterbank: bad band edges");
  Mat w(num_spectrogram_bins, num_mel_bins, 0.0);
  const double nyquist = sample_rate / 2.0;
  const double mel_lo = hertz_to_mel(lower_edge_hz);
  const double mel_hi = hertz_to_mel(upper_edge_hz);
  std::vector<double> edges(num_mel_bins + 2);
  for (int i = 0; i < num_mel_bins + 2; ++i) edges[i] = mel_lo + (mel_hi - mel_lo) * i / (num_mel_bins + 1);
  for (int k = 1; k < num_spectrogram_bins; ++k) {  // k = 0 (DC) stays zero
    double mel_k = hertz_to_mel(double(k) * nyquist / (num_spectrogram_bins - 1));
    for (int m = 0; m < num_mel_bins; ++m) {
      double lower = edges[m], center = edges[m + 1], upper = edges[m + 2];
      double up_slope = (mel_k - lower) / (center - lower);
      double down_slope = (upper - mel_k) / (upper - center);
      double t = std::min(up_slope, down_slope);
      if (t > 0.0) w(k, m) = t;
    }
  }
  return w;
}

/// Forward state kept for the backward pass.
struct MelForward {
  Mat value;       // T x F, log-compressed
  Mat linear_mel;  // T x F, pre-log
  StftResult stft;
  std::vector<double> decoded;  // waveform after mu-law inversion (= input when not inverted)
  std::vector<double> input;    // waveform the gradient is reported against (post-jitter)
  bool inverted_mu_law = false;
  bool jittered = false;
};

/// Log-mel spectrogram, optionally inverting the mu-law companding first and
/// optionally jittering (ground-truth side of the prediction loss only; never
/// for discriminator inputs).
inline MelForward mel_spectrogram_fwd(const std::vector<double>& waveform, const MelParams& p,
                                      bool invert_mu_law = true, bool jitter = false, Rng* rng = nullptr) {
  if (long(waveform.size()) < p.frame_step)
    throw std::invalid_argument("mel_spectrogram: fewer samples (" + std::to_string(waveform.size()) +
                                ") than one hop (" + std::to_string(p.frame_step) + "), spectrogram would be empty");
  MelForward f;
  f.jittered = jitter;
  f.inverted_mu_law = invert_mu_law;
  if (jitter) {
    if (!rng) throw std::invalid_argument("mel_spectrogram: jitter requested without an rng");
    f.input = apply_jitter(waveform, p.max_jitter, *rng);
  } else {
    f.input = waveform;
  }
  f.decoded = invert_mu_law ? mu_law_decode(f.input, p.mu) : f.input;
  f.stft = stft(f.decoded, p.frame_length, p.frame_step);
  const int T = int(f.stft.spectra.size());
  const int K = f.stft.num_bins;
  Mat filters = mel_filterbank(p.num_bins, K, p.sample_rate, p.lower_edge_hz, p.upper_edge_hz);
  f.linear_mel = Mat(T, p.num_bins, 0.0);
  f.value = Mat(T, p.num_bins, 0.0);
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < K; ++k) {
      double mag = std::abs(f.stft.spectra[t][k]);
      if (mag == 0.0) continue;
      const double* wrow = filters.row(k);
      double* mrow = f.linear_mel.row(t);
      for (int m = 0; m < p.num_bins; ++m) mrow[m] += mag * wrow[m];
    }
    for (int m = 0; m < p.num_bins; ++m) f.value(t, m) = std::log1p(p.log_scale * f.linear_mel(t, m));
  }
  return f;
}

/// Gradient of a scalar loss wrt the input waveform, given d(loss)/d(value).
/// Jittered forwards (ground truth) are not differentiated through.
inline std::vector<double> mel_spectrogram_bwd(const MelForward& f, const Mat& dvalue, const MelParams& p) {
  if (f.jittered) throw std::logic_error("mel_spectrogram_bwd: jittered forward passes are ground-truth only");
  if (!dvalue.same_shape(f.value)) throw std::invalid_argument("mel_spectrogram_bwd: cotangent shape mismatch");
  const int T = f.value.rows;
  const int K = f.stft.num_bins;
  Mat filters = mel_filterbank(p.num_bins, K, p.sample_rate, p.lower_edge_hz, p.upper_edge_hz);
  // back through the log compression and the filterbank to magnitude cotangents
  std::vector<std::vector<cdouble>> dspectra(T, std::vector<cdouble>(K, cdouble(0.0, 0.0)));
  for (int t = 0; t < T; ++t) {
    std::vector<double> dmel(p.num_bins);
    for (int m = 0; m < p.num_bins; ++m)
      dmel[m] = dvalue(t, m) * p.log_scale / (1.0 + p.log_scale * f.linear_mel(t, m));
    for (int k = 0; k < K; ++k) {
      const cdouble z = f.stft.spectra[t][k];
      const double mag = std::abs(z);
      if (mag == 0.0) continue;  // subgradient of |z| at 0 is taken as 0
      const double* wrow = filters.row(k);
      double dmag = 0.0;
      for (int m = 0; m < p.num_bins; ++m) dmag += dmel[m] * wrow[m];
      dspectra[t][k] = cdouble(dmag * z.real() / mag, dmag * z.imag() / mag);
    }
  }
  std::vector<double> ddecoded(f.decoded.size(), 0.0);
  stft_backward(dspectra, p.frame_length, p.frame_step, ddecoded);
  if (!f.inverted_mu_law) return ddecoded;
  std::vector<double> dinput(f.input.size());
  for (size_t i = 0; i < f.input.size(); ++i) dinput[i] = ddecoded[i] * mu_law_decode_derivative(f.input[i], p.mu);
  return dinput;
}

/// Public entry point matching the training pipeline's call shape.
inline MelSpectrogram mel_spectrogram(const std::vector<double>& waveform, const MelParams& p,
                                      bool invert_mu_law = true, bool jitter = false, Rng* rng = nullptr) {
  MelForward f = mel_spectrogram_fwd(waveform, p, invert_mu_law, jitter, rng);
  MelSpectrogram s;
  s.values = std::move(f.value);
  s.frame_length = p.frame_length;
  s.frame_step = p.frame_step;
  s.num_bins = p.num_bins;
  s.sample_rate = p.sample_rate;
  s.lower_edge_hz = p.lower_edge_hz;
  s.upper_edge_hz = p.upper_edge_hz;
  return s;
}

}  // namespace dtts
