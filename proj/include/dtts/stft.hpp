// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "dtts/core.hpp"

namespace dtts {

using cdouble = std::complex<double>;

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// In-place iterative radix-2 FFT. `inverse` uses conjugate twiddles and does
/// NOT apply the 1/N normalization (callers that need a true inverse divide).
inline void fft_pow2(std::vector<cdouble>& a, bool inverse) {
  const int n = int(a.size());
  if (!is_pow2(n)) throw std::invalid_argument("fft_pow2: size must be a power of two");
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    double ang = kTwoPi / len * (inverse ? 1.0 : -1.0);
    cdouble wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      cdouble w(1.0, 0.0);
      for (int j = 0; j < len / 2; ++j) {
        cdouble u = a[i + j];
        cdouble v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

/// O(n^2) DFT for non-power-of-two sizes (rare; defaults are powers of two).
inline std::vector<cdouble> dft_naive(const std::vector<cdouble>& a, bool inverse) {
  const int n = int(a.size());
  std::vector<cdouble> out(n, cdouble(0.0, 0.0));
  for (int k = 0; k < n; ++k) {
    for (int t = 0; t < n; ++t) {
      double ang = kTwoPi * k * t / n * (inverse ? 1.0 : -1.0);
      out[k] += a[t] * cdouble(std::cos(ang), std::sin(ang));
    }
  }
  return out;
}

inline void fft(std::vector<cdouble>& a, bool inverse) {
  if (is_pow2(int(a.size())))
    fft_pow2(a, inverse);
  else
    a = dft_naive(a, inverse);
}

/// Periodic Hann window: w[n] = 0.5 - 0.5 cos(2 pi n / length).
inline std::vector<double> hann_window(int length) {
  std::vector<double> w(length);
  for (int n = 0; n < length; ++n) w[n] = 0.5 - 0.5 * std::cos(kTwoPi * n / length);
  return w;
}

inline int stft_num_frames(long num_samples, int frame_step) {
  return int((num_samples + frame_step - 1) / frame_step);  // ceil, end-padded
}

struct StftResult {
  // spectra[t][k], k in [0, fft_length/2], one row per frame
  std::vector<std::vector<cdouble>> spectra;
  int fft_length = 0;
  int num_bins = 0;  // fft_length/2 + 1
};

/// End-padded STFT: frame t covers samples [t*step, t*step + frame_length)
/// with zeros past the end; T = ceil(len/step). fft_length is the next power
/// of two >= frame_length, matching the reference behaviour.
inline StftResult stft(const std::vector<double>& x, int frame_length, int frame_step) {
  if (frame_length <= 0 || frame_step <= 0) throw std::invalid_argument("stft: frame params must be positive");
  StftResult r;
  r.fft_length = next_pow2(frame_length);
  r.num_bins = r.fft_length / 2 + 1;
  const int T = stft_num_frames(long(x.size()), frame_step);
  const auto window = hann_window(frame_length);
  r.spectra.resize(T);
  std::vector<cdouble> buf(r.fft_length);
  for (int t = 0; t < T; ++t) {
    std::fill(buf.begin(), buf.end(), cdouble(0.0, 0.0));
    const long base = long(t) * frame_step;
    for (int n = 0; n < frame_length; ++n) {
      long idx = base + n;
      double s = idx < long(x.size()) ? x[size_t(idx)] : 0.0;
      buf[n] = cdouble(s * window[n], 0.0);
    }
    fft(buf, false);
    r.spectra[t].assign(buf.begin(), buf.begin() + r.num_bins);
  }
  return r;
}

/// Adjoint of the map waveform -> (Re, Im) of the kept bins, given cotangents
/// on those bins. Scatter-adds into `dx` (resized by the caller).
inline void stft_backward(const std::vector<std::vector<cdouble>>& dspectra, int frame_length, int frame_step,
                          std::vector<double>& dx) {
  const int fft_length = next_pow2(frame_length);
  const int num_bins = fft_length / 2 + 1;
  const auto window = hann_window(frame_length);
  std::vector<cdouble> buf(fft_length);
  for (int t = 0; t < int(dspectra.size()); ++t) {
    if (int(dspectra[t].size()) != num_bins) throw std::invalid_argument("stft_backward: bin count mismatch");
    std::fill(buf.begin(), buf.end(), cdouble(0.0, 0.0));
    for (int k = 0; k < num_bins; ++k) buf[k] = dspectra[t][k];
    // grad wrt frame sample n is Re(sum_k G_k e^{+i 2 pi k n / N})
    fft(buf, true);
    const long base = long(t) * frame_step;
    for (int n = 0; n < frame_length; ++n) {
      long idx = base + n;
      if (idx < long(dx.size())) dx[size_t(idx)] += buf[n].real() * window[n];
    }
  }
}

}  // namespace dtts
