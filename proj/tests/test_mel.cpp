// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#include <cmath>

#include "doctest.h"
#include "dtts/mel.hpp"

using namespace dtts;

namespace {
std::vector<double> tone(double freq, double amp, int samples, double sr) {
  std::vector<double> w(static_cast<size_t>(samples));
  for (int i = 0; i < samples; ++i) w[size_t(i)] = amp * std::sin(kTwoPi * freq * i / sr);
  return w;
}
}  // namespace

TEST_CASE("2 seconds at 24 kHz gives a 47x80 grid") {
  std::vector<double> w(48000, 0.0);
  auto spec = mel_spectrogram(w, MelParams{});
  CHECK(spec.values.rows == 47);
  CHECK(spec.values.cols == 80);
}

TEST_CASE("all-zero waveform maps to all-zero log-mel") {
  std::vector<double> w(4096, 0.0);
  auto spec = mel_spectrogram(w, MelParams{});
  for (double v : spec.values.v) CHECK(v == 0.0);
}

TEST_CASE("frame count is ceil(len/step) for any length") {
  MelParams p = MelParams::toy();
  for (long len : {128L, 129L, 256L, 1000L, 2400L}) {
    auto spec = mel_spectrogram(std::vector<double>(size_t(len), 0.1), p);
    CHECK(spec.values.rows == int((len + p.frame_step - 1) / p.frame_step));
  }
}

TEST_CASE("fewer samples than one hop is an error") {
  MelParams p = MelParams::toy();
  CHECK_THROWS_WITH_AS(mel_spectrogram(std::vector<double>(size_t(p.frame_step - 1), 0.0), p),
                       doctest::Contains("empty"), std::invalid_argument);
}

TEST_CASE("mel values are non-negative and log compression is monotone") {
  MelParams p = MelParams::toy();
  Rng rng(42);
  std::vector<double> w(2400);
  for (auto& v : w) v = rng.uniform(-0.95, 0.95);
  auto spec = mel_spectrogram(w, p);
  for (double v : spec.values.v) CHECK(v >= 0.0);
}

TEST_CASE("doubling a tone's amplitude strictly increases nonzero mel magnitudes pre-log") {
  MelParams p = MelParams::toy();
  auto w1 = tone(400.0, 0.2, 2400, p.sample_rate);
  auto w2 = tone(400.0, 0.4, 2400, p.sample_rate);
  auto f1 = mel_spectrogram_fwd(w1, p, false, false);
  auto f2 = mel_spectrogram_fwd(w2, p, false, false);
  int checked = 0;
  for (size_t i = 0; i < f1.linear_mel.v.size(); ++i) {
    if (f1.linear_mel.v[i] > 0.0) {
      CHECK(f2.linear_mel.v[i] > f1.linear_mel.v[i]);
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("a pure tone's per-frame argmax lands in the bin containing its frequency") {
  MelParams p = MelParams::toy();
  const double freq = 400.0;
  auto w = tone(freq, 0.5, 2400, p.sample_rate);
  auto spec = mel_spectrogram(mu_law_encode(w), p, true, false);
  // which mel band contains the tone: the band whose triangle peaks nearest
  const double mel_lo = hertz_to_mel(p.lower_edge_hz), mel_hi = hertz_to_mel(p.upper_edge_hz);
  const double mel_f = hertz_to_mel(freq);
  int expect_bin = -1;
  double best = 1e300;
  for (int m = 0; m < p.num_bins; ++m) {
    double center = mel_lo + (mel_hi - mel_lo) * (m + 1) / (p.num_bins + 1);
    if (std::fabs(center - mel_f) < best) {
      best = std::fabs(center - mel_f);
      expect_bin = m;
    }
  }
  // skip the trailing (zero-padded, low-energy) frame
  for (int t = 0; t + 1 < spec.values.rows; ++t) {
    int arg = 0;
    for (int m = 1; m < p.num_bins; ++m)
      if (spec.values(t, m) > spec.values(t, arg)) arg = m;
    CHECK(std::abs(arg - expect_bin) <= 1);
  }
}

TEST_CASE("jitter applies to ground truth only and never to gradient paths") {
  MelParams p = MelParams::toy();
  Rng rng(9);
  std::vector<double> w(1024);
  for (auto& v : w) v = rng.uniform(-0.9, 0.9);
  Rng jrng(3);
  auto jittered = mel_spectrogram_fwd(w, p, true, true, &jrng);
  CHECK(jittered.jittered);
  Mat dv(jittered.value.rows, jittered.value.cols, 1.0);
  CHECK_THROWS_AS(mel_spectrogram_bwd(jittered, dv, p), std::logic_error);
  CHECK_THROWS_AS(mel_spectrogram_fwd(w, p, true, true, nullptr), std::invalid_argument);
}

TEST_CASE("mel filterbank: DC row is zero, triangles are non-negative") {
  Mat fb = mel_filterbank(80, 1025, 24000.0, 80.0, 7600.0);
  for (int m = 0; m < 80; ++m) CHECK(fb(0, m) == 0.0);
  double total = 0.0;
  for (double v : fb.v) {
    CHECK(v >= 0.0);
    total += v;
  }
  CHECK(total > 0.0);
}
