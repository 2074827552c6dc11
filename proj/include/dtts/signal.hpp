// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtts/core.hpp"

namespace dtts {

constexpr double kMuLawDefault = 255.0;

struct Waveform {
  std::vector<double> samples;  // [-1, 1], mu-law domain unless noted linear
  int sample_rate = 24000;
};

struct WindowSpec {
  long offset = 0;  // sample index
  long length = 48000;  // 2 s at 24 kHz
};

namespace signal_detail {
inline void check_range(const std::vector<double>& x, const char* op) {
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(std::fabs(x[i]) <= 1.0))
      throw std::domain_error(std::string(op) + ": sample " + std::to_string(i) + " = " + std::to_string(x[i]) +
                              " outside [-1, 1]");
  }
}
}  // namespace signal_detail

/// y = sign(x) * ln(1 + mu*|x|) / ln(1 + mu). Odd, strictly monotone, maps
/// [-1,1] onto [-1,1].
inline std::vector<double> mu_law_encode(const std::vector<double>& x, double mu = kMuLawDefault) {
  signal_detail::check_range(x, "mu_law_encode");
  std::vector<double> y(x.size());
  const double denom = std::log1p(mu);
  for (size_t i = 0; i < x.size(); ++i) {
    double s = x[i] > 0 ? 1.0 : (x[i] < 0 ? -1.0 : 0.0);
    y[i] = s * std::log1p(mu * std::fabs(x[i])) / denom;
  }
  return y;
}

/// x = sign(t)/mu * ((1+mu)^|t| - 1).
inline std::vector<double> mu_law_decode(const std::vector<double>& t, double mu = kMuLawDefault) {
  signal_detail::check_range(t, "mu_law_decode");
  std::vector<double> x(t.size());
  for (size_t i = 0; i < t.size(); ++i) {
    double s = t[i] > 0 ? 1.0 : (t[i] < 0 ? -1.0 : 0.0);
    x[i] = s / mu * (std::pow(1.0 + mu, std::fabs(t[i])) - 1.0);
  }
  return x;
}

/// d(decode)/dt, defined everywhere (the one-sided derivatives agree at 0).
inline double mu_law_decode_derivative(double t, double mu = kMuLawDefault) {
  return std::log1p(mu) / mu * std::pow(1.0 + mu, std::fabs(t));
}

/// Zero-pads by `max_jitter` on both sides, then crops back to the original
/// length at a uniformly random start in [0, 2*max_jitter]. Callers jitter
/// each batch item with its own substream.
inline std::vector<double> apply_jitter(const std::vector<double>& w, int max_jitter, Rng& rng) {
  if (max_jitter < 0) throw std::domain_error("apply_jitter: max_jitter must be >= 0");
  if (max_jitter == 0) return w;
  long start = rng.uniform_int(0, 2L * max_jitter);
  std::vector<double> out(w.size(), 0.0);
  // padded[i] = w[i - max_jitter]; out[i] = padded[start + i]
  for (long i = 0; i < long(w.size()); ++i) {
    long src = start + i - max_jitter;
    if (src >= 0 && src < long(w.size())) out[size_t(i)] = w[size_t(src)];
  }
  return out;
}

/// Post-pads with silence up to `min_length` (no-op when already long enough).
inline std::vector<double> post_pad(const std::vector<double>& w, long min_length) {
  if (long(w.size()) >= min_length) return w;
  std::vector<double> out = w;
  out.resize(size_t(min_length), 0.0);
  return out;
}

inline std::vector<double> extract_window(const std::vector<double>& w, const WindowSpec& spec) {
  if (spec.offset < 0 || spec.length < 0 || spec.offset + spec.length > long(w.size()))
    throw std::out_of_range("extract_window: [" + std::to_string(spec.offset) + ", " +
                            std::to_string(spec.offset + spec.length) + ") out of bounds for length " +
                            std::to_string(w.size()));
  return std::vector<double>(w.begin() + spec.offset, w.begin() + spec.offset + spec.length);
}

constexpr int kRwdWindowSizes[5] = {240, 480, 960, 1920, 3600};

struct RwdWindow {
  long start = 0;
  std::vector<double> samples;
};

/// One sub-window per requested size, start uniform in [0, len - size].
inline std::vector<RwdWindow> sample_rwd_windows(const std::vector<double>& w, const std::vector<int>& sizes,
                                                 Rng& rng) {
  std::vector<RwdWindow> out;
  out.reserve(sizes.size());
  for (int size : sizes) {
    if (size <= 0 || size > int(w.size()))
      throw std::out_of_range("sample_rwd_windows: size " + std::to_string(size) + " exceeds window length " +
                              std::to_string(w.size()));
    long start = rng.uniform_int(0, long(w.size()) - size);
    out.push_back({start, extract_window(w, {start, size})});
  }
  return out;
}

inline std::vector<int> default_rwd_sizes() { return {240, 480, 960, 1920, 3600}; }

}  // namespace dtts
