// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtts/aligner.hpp"
#include "dtts/core.hpp"

namespace dtts {

// Small upsampling decoder: aligned features at the aligner rate are
// repeat-upsampled and convolved in stages down to a single channel, with a
// saturating tanh keeping the output waveform inside [-1, 1] (mu-law domain).

struct DecoderConfig {
  std::vector<int> factors = {4, 5, 6};   // product must equal audio_rate / aligner_rate
  std::vector<int> channels = {48, 24};   // intermediate stage widths; final stage is 1 channel
  std::vector<int> kernels = {3, 5, 7};   // one kernel per stage; wider at higher rates
};

struct DecoderParams {
  DecoderConfig cfg;
  int in_channels = 0;
  std::vector<Conv1dParams> convs;
};

template <class Fn>
inline void for_each_tensor(DecoderParams& p, Fn&& fn) {
  for (size_t i = 0; i < p.convs.size(); ++i) {
    fn("decoder.c" + std::to_string(i) + ".w", p.convs[i].w);
    fn("decoder.c" + std::to_string(i) + ".b", p.convs[i].b);
  }
}

inline DecoderParams make_decoder_params(const DecoderConfig& cfg, int in_channels, int upsample_factor, Rng& rng) {
  if (cfg.channels.size() + 1 != cfg.factors.size())
    throw std::invalid_argument("decoder: need one intermediate width per stage except the last");
  if (cfg.kernels.size() != cfg.factors.size())
    throw std::invalid_argument("decoder: need one kernel size per stage");
  long product = 1;
  for (int f : cfg.factors) {
    if (f < 1) throw std::invalid_argument("decoder: stage factors must be >= 1");
    product *= f;
  }
  if (product != upsample_factor)
    throw std::invalid_argument("decoder: stage factors multiply to " + std::to_string(product) +
                                ", cannot realize upsampling factor " + std::to_string(upsample_factor));
  DecoderParams p;
  p.cfg = cfg;
  p.in_channels = in_channels;
  int prev = in_channels;
  for (size_t i = 0; i < cfg.factors.size(); ++i) {
    int out = i + 1 < cfg.factors.size() ? cfg.channels[i] : 1;
    Conv1dParams conv;
    conv.w = Tensor({cfg.kernels[i], prev, out});
    conv.b = Tensor({out});
    conv.dilation = 1;
    orthogonal_init(conv.w, rng, kConvInitGain);
    p.convs.push_back(std::move(conv));
    prev = out;
  }
  return p;
}

inline DecoderParams make_decoder_grads(const DecoderParams& p) {
  DecoderParams g = p;
  for_each_tensor(g, [](const std::string&, Tensor& t) { t.zero(); });
  return g;
}

namespace decoder_detail {

inline Mat upsample_repeat(const Mat& x, int factor) {
  Mat y(x.rows * factor, x.cols, 0.0);
  for (int t = 0; t < x.rows; ++t) {
    const double* src = x.row(t);
    for (int r = 0; r < factor; ++r) {
      double* dst = y.row(t * factor + r);
      for (int c = 0; c < x.cols; ++c) dst[c] = src[c];
    }
  }
  return y;
}

inline Mat upsample_repeat_bwd(const Mat& dy, int factor) {
  Mat dx(dy.rows / factor, dy.cols, 0.0);
  for (int t = 0; t < dx.rows; ++t) {
    double* dst = dx.row(t);
    for (int r = 0; r < factor; ++r) {
      const double* src = dy.row(t * factor + r);
      for (int c = 0; c < dy.cols; ++c) dst[c] += src[c];
    }
  }
  return dx;
}

}  // namespace decoder_detail

struct DecoderTrace {
  std::vector<Mat> conv_inputs;  // upsampled, post-activation inputs per stage
  std::vector<Mat> pre_acts;     // conv outputs before the stage activation
  std::vector<double> waveform;
};

/// features [S, C] -> waveform of length S * prod(factors).
inline std::vector<double> decoder_fwd(const Mat& features, const DecoderParams& p, DecoderTrace* tr = nullptr) {
  if (features.cols != p.in_channels) throw std::invalid_argument("decoder: feature channel mismatch");
  Mat x = features;
  if (tr) {
    tr->conv_inputs.clear();
    tr->pre_acts.clear();
  }
  for (size_t i = 0; i < p.convs.size(); ++i) {
    x = decoder_detail::upsample_repeat(x, p.cfg.factors[i]);
    Mat saved;
    Mat y = masked_conv1d_fwd(x, x.rows, p.convs[i], tr ? &saved : nullptr);
    if (tr) {
      tr->conv_inputs.push_back(std::move(saved));
      tr->pre_acts.push_back(y);
    }
    if (i + 1 < p.convs.size()) {
      x = relu_fwd(y);
    } else {
      x = y;
      for (double& v : x.v) v = std::tanh(v);
    }
  }
  std::vector<double> wave(x.rows);
  for (int t = 0; t < x.rows; ++t) wave[size_t(t)] = x(t, 0);
  if (tr) tr->waveform = wave;
  return wave;
}

/// Backward; returns d(loss)/d(features).
inline Mat decoder_bwd(const DecoderParams& p, const DecoderTrace& tr, const std::vector<double>& dwave,
                       DecoderParams& grads) {
  const size_t last = p.convs.size() - 1;
  Mat d(int(dwave.size()), 1, 0.0);
  for (int t = 0; t < d.rows; ++t) {
    double y = std::tanh(tr.pre_acts[last](t, 0));
    d(t, 0) = dwave[size_t(t)] * (1.0 - y * y);
  }
  for (size_t i = p.convs.size(); i-- > 0;) {
    Mat dx = masked_conv1d_bwd(tr.conv_inputs[i], tr.conv_inputs[i].rows, p.convs[i], d, grads.convs[i]);
    d = decoder_detail::upsample_repeat_bwd(dx, p.cfg.factors[i]);
    if (i > 0) d = relu_bwd(tr.pre_acts[i - 1], d);
  }
  return d;
}

}  // namespace dtts
