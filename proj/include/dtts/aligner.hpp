// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtts/core.hpp"

namespace dtts {

// Monotonic interpolation aligner: token embeddings run through a stack of
// masked dilated convolutions with conditional scale/shift normalization, a
// small head predicts a non-negative length per token, cumulative sums turn
// lengths into end/centre positions, and a Gaussian softmax over centres
// interpolates token features onto the output time grid.

struct TokenSequence {
  std::vector<int> ids;  // padded to a fixed maximum length
  int true_length = 0;
  int vocab_size = 0;

  int padded_length() const { return int(ids.size()); }
};

struct Conditioning {
  std::vector<double> latent;             // z, standard normal draws
  std::vector<double> speaker_embedding;  // s, a learned row of the speaker table
  int speaker_id = 0;
};

/// How normalization statistics are computed. Training and single-example
/// inference use per-example statistics over valid positions; Pooled shares
/// statistics across a batch (forward only, for fidelity comparisons);
/// Standing applies frozen accumulated statistics (forward only).
enum class NormMode { PerExample, Pooled, Standing };

constexpr double kMaskedLogitOffset = 1e9;

struct AlignerConfig {
  int channels = 256;
  int blocks = 10;  // each block holds 3 residual pairs: dilations (1,2),(4,8),(16,32)
  int latent_dim = 128;
  int speaker_dim = 128;
  double sigma2 = 10.0;
  double norm_eps = 1e-8;
  int max_tokens_train = 400;
  int out_steps_train = 400;  // 2 s at 200 Hz
  int max_tokens_infer = 600;
  int out_steps_infer = 6000;  // 30 s at 200 Hz
  double length_head_bias_init = 0.0;

  int cond_dim() const { return latent_dim + speaker_dim; }

  static AlignerConfig toy() {
    AlignerConfig c;
    c.channels = 64;
    c.blocks = 2;
    // start every token's length prediction on the live side of the output
    // ramp; with a zero bias roughly half the token types begin at zero
    // length with no gradient, and whether they recover is seed luck
    c.length_head_bias_init = 5.0;
    return c;
  }
};

struct CondNormParams {
  Tensor w_gamma, b_gamma;  // scale head: gamma = 1 + w_gamma.cond + b_gamma
  Tensor w_beta, b_beta;    // shift head: beta = w_beta.cond + b_beta
  Tensor standing_mean, standing_var;
  double standing_count = 0.0;
};

struct Conv1dParams {
  Tensor w;  // [taps, in, out]
  Tensor b;  // [out]
  int dilation = 1;
};

struct ResidualPairParams {
  CondNormParams n1;
  Conv1dParams c1;
  CondNormParams n2;
  Conv1dParams c2;
};

struct AlignerParams {
  AlignerConfig cfg;
  int vocab_size = 0;
  Tensor token_embedding;  // [vocab, channels]
  std::vector<ResidualPairParams> pairs;
  CondNormParams head_n1;
  Conv1dParams head_c1;  // channels -> channels, 1x1
  CondNormParams head_n2;
  Conv1dParams head_c2;  // channels -> 1, 1x1
};

namespace aligner_detail {

inline CondNormParams make_norm(int channels, int cond_dim) {
  CondNormParams p;
  p.w_gamma = Tensor({channels, cond_dim});
  p.b_gamma = Tensor({channels});
  p.w_beta = Tensor({channels, cond_dim});
  p.b_beta = Tensor({channels});
  p.standing_mean = Tensor({channels});
  p.standing_var = Tensor({channels}, 1.0);
  return p;
}

inline Conv1dParams make_conv(int taps, int in_ch, int out_ch, int dilation) {
  Conv1dParams p;
  p.w = Tensor({taps, in_ch, out_ch});
  p.b = Tensor({out_ch});
  p.dilation = dilation;
  return p;
}

}  // namespace aligner_detail

template <class Fn>
inline void for_each_tensor(CondNormParams& p, const std::string& prefix, Fn&& fn) {
  fn(prefix + ".w_gamma", p.w_gamma);
  fn(prefix + ".b_gamma", p.b_gamma);
  fn(prefix + ".w_beta", p.w_beta);
  fn(prefix + ".b_beta", p.b_beta);
  fn(prefix + ".standing_mean", p.standing_mean);
  fn(prefix + ".standing_var", p.standing_var);
}

template <class Fn>
inline void for_each_tensor(Conv1dParams& p, const std::string& prefix, Fn&& fn) {
  fn(prefix + ".w", p.w);
  fn(prefix + ".b", p.b);
}

template <class Fn>
inline void for_each_tensor(AlignerParams& p, Fn&& fn) {
  fn("aligner.embedding", p.token_embedding);
  for (size_t i = 0; i < p.pairs.size(); ++i) {
    std::string base = "aligner.enc" + std::to_string(i);
    for_each_tensor(p.pairs[i].n1, base + ".n1", fn);
    for_each_tensor(p.pairs[i].c1, base + ".c1", fn);
    for_each_tensor(p.pairs[i].n2, base + ".n2", fn);
    for_each_tensor(p.pairs[i].c2, base + ".c2", fn);
  }
  for_each_tensor(p.head_n1, "aligner.head.n1", fn);
  for_each_tensor(p.head_c1, "aligner.head.c1", fn);
  for_each_tensor(p.head_n2, "aligner.head.n2", fn);
  for_each_tensor(p.head_c2, "aligner.head.c2", fn);
}

/// Sub-unit gain on convolution kernels: keeps the residual through-paths
/// gentle at the start so the length head initially sees near-embedding
/// features, which speeds up duration learning at short step budgets.
constexpr double kConvInitGain = 0.3;
/// Conditioning maps start small: the latent/speaker modulation should begin
/// as a gentle perturbation of the unit scale, not +-70% gamma swings that
/// drown the duration signal in per-utterance noise.
constexpr double kCondInitGain = 0.01;

/// All weights orthogonal, all biases zero.
inline AlignerParams make_aligner_params(const AlignerConfig& cfg, int vocab_size, Rng& rng) {
  AlignerParams p;
  p.cfg = cfg;
  p.vocab_size = vocab_size;
  const int C = cfg.channels;
  const int D = cfg.cond_dim();
  p.token_embedding = Tensor({vocab_size, C});
  orthogonal_init(p.token_embedding, rng);
  const int dil[3][2] = {{1, 2}, {4, 8}, {16, 32}};
  for (int b = 0; b < cfg.blocks; ++b) {
    for (auto& d : dil) {
      ResidualPairParams pair;
      pair.n1 = aligner_detail::make_norm(C, D);
      pair.c1 = aligner_detail::make_conv(3, C, C, d[0]);
      pair.n2 = aligner_detail::make_norm(C, D);
      pair.c2 = aligner_detail::make_conv(3, C, C, d[1]);
      orthogonal_init(pair.n1.w_gamma, rng, kCondInitGain);
      orthogonal_init(pair.n1.w_beta, rng, kCondInitGain);
      orthogonal_init(pair.n2.w_gamma, rng, kCondInitGain);
      orthogonal_init(pair.n2.w_beta, rng, kCondInitGain);
      orthogonal_init(pair.c1.w, rng, kConvInitGain);
      orthogonal_init(pair.c2.w, rng, kConvInitGain);
      p.pairs.push_back(std::move(pair));
    }
  }
  p.head_n1 = aligner_detail::make_norm(C, D);
  p.head_c1 = aligner_detail::make_conv(1, C, C, 1);
  p.head_n2 = aligner_detail::make_norm(C, D);
  p.head_c2 = aligner_detail::make_conv(1, C, 1, 1);
  orthogonal_init(p.head_n1.w_gamma, rng, kCondInitGain);
  orthogonal_init(p.head_n1.w_beta, rng, kCondInitGain);
  orthogonal_init(p.head_n2.w_gamma, rng, kCondInitGain);
  orthogonal_init(p.head_n2.w_beta, rng, kCondInitGain);
  orthogonal_init(p.head_c1.w, rng, kConvInitGain);
  orthogonal_init(p.head_c2.w, rng, kConvInitGain);
  p.head_c2.b[0] = cfg.length_head_bias_init;
  return p;
}

/// Same shapes, all zeros; used as a gradient accumulator.
inline AlignerParams make_aligner_grads(const AlignerParams& p) {
  AlignerParams g = p;
  for_each_tensor(g, [](const std::string&, Tensor& t) { t.zero(); });
  return g;
}

// ---------------------------------------------------------------------------
// Layer primitives
// ---------------------------------------------------------------------------

struct NormTrace {
  Mat xhat;  // normalized input, valid rows
  std::vector<double> inv_std;
  std::vector<double> gamma, beta;
  NormMode mode = NormMode::PerExample;
};

/// gamma/beta per channel from the conditioning vector.
inline void cond_affine(const CondNormParams& p, const std::vector<double>& cond, std::vector<double>& gamma,
                        std::vector<double>& beta) {
  const int C = p.b_gamma.shape[0];
  const int D = int(cond.size());
  gamma.resize(C);
  beta.resize(C);
  for (int c = 0; c < C; ++c) {
    double g = p.b_gamma[c], b = p.b_beta[c];
    const double* wg = &p.w_gamma.v[size_t(c) * D];
    const double* wb = &p.w_beta.v[size_t(c) * D];
    for (int k = 0; k < D; ++k) {
      g += wg[k] * cond[k];
      b += wb[k] * cond[k];
    }
    gamma[c] = 1.0 + g;
    beta[c] = b;
  }
}

/// Per-channel standardization over valid rows followed by the conditional
/// affine. Padded rows come out exactly zero.
inline Mat cond_norm_fwd(const Mat& x, int valid, const std::vector<double>& cond, const CondNormParams& p,
                         double eps, NormMode mode, NormTrace* tr) {
  const int L = x.rows, C = x.cols;
  if (mode == NormMode::Pooled)
    throw std::logic_error("cond_norm: pooled statistics require the batch entry points");
  std::vector<double> mean(C, 0.0), var(C, 0.0);
  if (mode == NormMode::Standing) {
    if (p.standing_count <= 0.0) throw std::logic_error("cond_norm: standing statistics not accumulated");
    mean = p.standing_mean.v;
    var = p.standing_var.v;
  } else {
    for (int t = 0; t < valid; ++t) {
      const double* row = x.row(t);
      for (int c = 0; c < C; ++c) mean[c] += row[c];
    }
    for (int c = 0; c < C; ++c) mean[c] /= double(valid);
    for (int t = 0; t < valid; ++t) {
      const double* row = x.row(t);
      for (int c = 0; c < C; ++c) {
        double d = row[c] - mean[c];
        var[c] += d * d;
      }
    }
    for (int c = 0; c < C; ++c) var[c] /= double(valid);
  }
  std::vector<double> gamma, beta;
  cond_affine(p, cond, gamma, beta);
  Mat y(L, C, 0.0);
  Mat xhat(valid, C, 0.0);
  std::vector<double> inv_std(C);
  for (int c = 0; c < C; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
  for (int t = 0; t < valid; ++t) {
    const double* row = x.row(t);
    double* h = xhat.row(t);
    double* out = y.row(t);
    for (int c = 0; c < C; ++c) {
      h[c] = (row[c] - mean[c]) * inv_std[c];
      out[c] = gamma[c] * h[c] + beta[c];
    }
  }
  if (tr) {
    tr->xhat = std::move(xhat);
    tr->inv_std = std::move(inv_std);
    tr->gamma = std::move(gamma);
    tr->beta = std::move(beta);
    tr->mode = mode;
  }
  return y;
}

/// Backward for the per-example mode. Accumulates parameter gradients and the
/// conditioning gradient; returns d(loss)/dx.
inline Mat cond_norm_bwd(const NormTrace& tr, int valid, const std::vector<double>& cond, const CondNormParams& p,
                         const Mat& dy, CondNormParams& grads, std::vector<double>& dcond) {
  if (tr.mode != NormMode::PerExample)
    throw std::logic_error("cond_norm_bwd: backward requires per-example statistics");
  const int L = dy.rows, C = dy.cols;
  const int D = int(cond.size());
  Mat dx(L, C, 0.0);
  std::vector<double> dgamma(C, 0.0), dbeta(C, 0.0), sum_dxhat(C, 0.0), sum_dxhat_xhat(C, 0.0);
  for (int t = 0; t < valid; ++t) {
    const double* dyr = dy.row(t);
    const double* h = tr.xhat.row(t);
    for (int c = 0; c < C; ++c) {
      dgamma[c] += dyr[c] * h[c];
      dbeta[c] += dyr[c];
      double dxh = dyr[c] * tr.gamma[c];
      sum_dxhat[c] += dxh;
      sum_dxhat_xhat[c] += dxh * h[c];
    }
  }
  const double inv_n = 1.0 / double(valid);
  for (int t = 0; t < valid; ++t) {
    const double* dyr = dy.row(t);
    const double* h = tr.xhat.row(t);
    double* out = dx.row(t);
    for (int c = 0; c < C; ++c) {
      double dxh = dyr[c] * tr.gamma[c];
      out[c] = tr.inv_std[c] * (dxh - inv_n * sum_dxhat[c] - h[c] * inv_n * sum_dxhat_xhat[c]);
    }
  }
  for (int c = 0; c < C; ++c) {
    grads.b_gamma[c] += dgamma[c];
    grads.b_beta[c] += dbeta[c];
    double* wg = &grads.w_gamma.v[size_t(c) * D];
    double* wb = &grads.w_beta.v[size_t(c) * D];
    const double* pg = &p.w_gamma.v[size_t(c) * D];
    const double* pb = &p.w_beta.v[size_t(c) * D];
    for (int k = 0; k < D; ++k) {
      wg[k] += dgamma[c] * cond[k];
      wb[k] += dbeta[c] * cond[k];
      dcond[k] += dgamma[c] * pg[k] + dbeta[c] * pb[k];
    }
  }
  return dx;
}

inline Mat relu_fwd(const Mat& x) {
  Mat y = x;
  for (double& v : y.v) v = v > 0.0 ? v : 0.0;
  return y;
}

inline Mat relu_bwd(const Mat& pre, const Mat& dy) {
  Mat dx = dy;
  for (size_t i = 0; i < dx.v.size(); ++i)
    if (pre.v[i] <= 0.0) dx.v[i] = 0.0;
  return dx;
}

/// Dilated SAME conv with inputs masked (padded rows zeroed) before every
/// kernel application; outputs at padded rows are zeroed too.
inline Mat masked_conv1d_fwd(const Mat& x, int valid, const Conv1dParams& p, Mat* saved_masked_input) {
  const int L = x.rows;
  const int in_ch = p.w.shape[1], out_ch = p.w.shape[2], taps = p.w.shape[0];
  const int center = taps / 2;
  Mat xm = x;
  for (int t = valid; t < L; ++t)
    for (int c = 0; c < in_ch; ++c) xm(t, c) = 0.0;
  Mat y(L, out_ch, 0.0);
  for (int t = 0; t < valid; ++t) {
    double* out = y.row(t);
    for (int o = 0; o < out_ch; ++o) out[o] = p.b[o];
    for (int j = 0; j < taps; ++j) {
      long src = t + long(j - center) * p.dilation;
      if (src < 0 || src >= L) continue;
      const double* row = xm.row(int(src));
      const double* w = &p.w.v[size_t(j) * in_ch * out_ch];
      for (int c = 0; c < in_ch; ++c) {
        double xv = row[c];
        if (xv == 0.0) continue;
        const double* wrow = w + size_t(c) * out_ch;
        for (int o = 0; o < out_ch; ++o) out[o] += xv * wrow[o];
      }
    }
  }
  if (saved_masked_input) *saved_masked_input = std::move(xm);
  return y;
}

inline Mat masked_conv1d_bwd(const Mat& saved_xm, int valid, const Conv1dParams& p, const Mat& dy,
                             Conv1dParams& grads) {
  const int L = saved_xm.rows;
  const int in_ch = p.w.shape[1], out_ch = p.w.shape[2], taps = p.w.shape[0];
  const int center = taps / 2;
  Mat dx(L, in_ch, 0.0);
  for (int t = 0; t < valid; ++t) {
    const double* dyr = dy.row(t);
    for (int o = 0; o < out_ch; ++o) grads.b[o] += dyr[o];
    for (int j = 0; j < taps; ++j) {
      long src = t + long(j - center) * p.dilation;
      if (src < 0 || src >= L) continue;
      const double* xrow = saved_xm.row(int(src));
      double* dxrow = dx.row(int(src));
      const double* w = &p.w.v[size_t(j) * in_ch * out_ch];
      double* gw = &grads.w.v[size_t(j) * in_ch * out_ch];
      for (int c = 0; c < in_ch; ++c) {
        const double* wrow = w + size_t(c) * out_ch;
        double* gwrow = gw + size_t(c) * out_ch;
        double acc = 0.0;
        const double xv = xrow[c];
        for (int o = 0; o < out_ch; ++o) {
          acc += dyr[o] * wrow[o];
          gwrow[o] += xv * dyr[o];
        }
        dxrow[c] += acc;
      }
    }
  }
  for (int t = valid; t < L; ++t)
    for (int c = 0; c < in_ch; ++c) dx(t, c) = 0.0;
  return dx;
}

// ---------------------------------------------------------------------------
// Encoder, length head, positions, interpolation
// ---------------------------------------------------------------------------

struct UnitTrace {
  NormTrace norm;
  Mat pre_relu;  // norm output
  Mat conv_in;   // masked conv input (post-ReLU)
};

struct PairTrace {
  UnitTrace u1, u2;
};

struct EncoderTrace {
  Mat embedded;
  std::vector<PairTrace> pairs;
  Mat features;
};

struct HeadTrace {
  NormTrace n1;
  Mat pre_relu1, conv1_in;
  NormTrace n2;
  Mat pre_relu2, conv2_in;
  std::vector<double> pre_relu_lengths;
};

inline std::vector<int> token_mask(const TokenSequence& seq) {
  std::vector<int> m(seq.ids.size(), 0);
  for (int t = 0; t < seq.true_length; ++t) m[t] = 1;
  return m;
}

inline void validate_sequence(const TokenSequence& seq, const AlignerParams& p) {
  if (seq.true_length < 1 || seq.true_length > seq.padded_length())
    throw std::invalid_argument("aligner: true_length out of range");
  for (int t = 0; t < seq.padded_length(); ++t)
    if (seq.ids[t] < 0 || seq.ids[t] >= p.vocab_size)
      throw std::domain_error("aligner: token id " + std::to_string(seq.ids[t]) + " at position " +
                              std::to_string(t) + " outside vocabulary of size " + std::to_string(p.vocab_size));
}

inline std::vector<double> concat_conditioning(const Conditioning& cond, const AlignerConfig& cfg) {
  if (int(cond.latent.size()) != cfg.latent_dim || int(cond.speaker_embedding.size()) != cfg.speaker_dim)
    throw std::invalid_argument("aligner: conditioning dimensions do not match the config");
  std::vector<double> out;
  out.reserve(cfg.cond_dim());
  out.insert(out.end(), cond.latent.begin(), cond.latent.end());
  out.insert(out.end(), cond.speaker_embedding.begin(), cond.speaker_embedding.end());
  return out;
}

/// Token features [L, channels]; padded rows are exactly zero.
inline Mat encode_tokens(const TokenSequence& seq, const std::vector<double>& cond, const AlignerParams& p,
                         NormMode mode = NormMode::PerExample, EncoderTrace* tr = nullptr) {
  validate_sequence(seq, p);
  const int L = seq.padded_length();
  const int C = p.cfg.channels;
  const int valid = seq.true_length;
  Mat x(L, C, 0.0);
  for (int t = 0; t < valid; ++t) {
    const double* e = &p.token_embedding.v[size_t(seq.ids[t]) * C];
    double* row = x.row(t);
    for (int c = 0; c < C; ++c) row[c] = e[c];
  }
  if (tr) {
    tr->embedded = x;
    tr->pairs.resize(p.pairs.size());
  }
  for (size_t i = 0; i < p.pairs.size(); ++i) {
    const auto& pair = p.pairs[i];
    PairTrace* pt = tr ? &tr->pairs[i] : nullptr;
    Mat h = cond_norm_fwd(x, valid, cond, pair.n1, p.cfg.norm_eps, mode, pt ? &pt->u1.norm : nullptr);
    if (pt) pt->u1.pre_relu = h;
    h = relu_fwd(h);
    h = masked_conv1d_fwd(h, valid, pair.c1, pt ? &pt->u1.conv_in : nullptr);
    Mat h2 = cond_norm_fwd(h, valid, cond, pair.n2, p.cfg.norm_eps, mode, pt ? &pt->u2.norm : nullptr);
    if (pt) pt->u2.pre_relu = h2;
    h2 = relu_fwd(h2);
    h2 = masked_conv1d_fwd(h2, valid, pair.c2, pt ? &pt->u2.conv_in : nullptr);
    for (size_t k = 0; k < x.v.size(); ++k) x.v[k] += h2.v[k];  // residual
  }
  if (tr) tr->features = x;
  return x;
}

/// Backward through the encoder; returns d(loss)/d(embedded) folded into the
/// embedding-table gradient directly.
inline void encode_tokens_bwd(const TokenSequence& seq, const std::vector<double>& cond, const AlignerParams& p,
                              const EncoderTrace& tr, Mat dx, AlignerParams& grads, std::vector<double>& dcond) {
  const int valid = seq.true_length;
  const int C = p.cfg.channels;
  for (int i = int(p.pairs.size()) - 1; i >= 0; --i) {
    const auto& pair = p.pairs[i];
    const auto& pt = tr.pairs[i];
    // residual: dx flows both around and through the pair
    Mat d2 = masked_conv1d_bwd(pt.u2.conv_in, valid, pair.c2, dx, grads.pairs[i].c2);
    d2 = relu_bwd(pt.u2.pre_relu, d2);
    d2 = cond_norm_bwd(pt.u2.norm, valid, cond, pair.n2, d2, grads.pairs[i].n2, dcond);
    Mat d1 = masked_conv1d_bwd(pt.u1.conv_in, valid, pair.c1, d2, grads.pairs[i].c1);
    d1 = relu_bwd(pt.u1.pre_relu, d1);
    d1 = cond_norm_bwd(pt.u1.norm, valid, cond, pair.n1, d1, grads.pairs[i].n1, dcond);
    for (size_t k = 0; k < dx.v.size(); ++k) dx.v[k] += d1.v[k];
  }
  for (int t = 0; t < valid; ++t) {
    double* ge = &grads.token_embedding.v[size_t(seq.ids[t]) * C];
    const double* row = dx.row(t);
    for (int c = 0; c < C; ++c) ge[c] += row[c];
  }
}

/// Non-negative per-token lengths; padded positions come out zero.
inline std::vector<double> predict_lengths(const Mat& features, int valid, const std::vector<double>& cond,
                                           const AlignerParams& p, NormMode mode = NormMode::PerExample,
                                           HeadTrace* tr = nullptr) {
  Mat h = cond_norm_fwd(features, valid, cond, p.head_n1, p.cfg.norm_eps, mode, tr ? &tr->n1 : nullptr);
  if (tr) tr->pre_relu1 = h;
  h = relu_fwd(h);
  h = masked_conv1d_fwd(h, valid, p.head_c1, tr ? &tr->conv1_in : nullptr);
  Mat h2 = cond_norm_fwd(h, valid, cond, p.head_n2, p.cfg.norm_eps, mode, tr ? &tr->n2 : nullptr);
  if (tr) tr->pre_relu2 = h2;
  h2 = relu_fwd(h2);
  h2 = masked_conv1d_fwd(h2, valid, p.head_c2, tr ? &tr->conv2_in : nullptr);
  std::vector<double> lengths(features.rows, 0.0);
  if (tr) tr->pre_relu_lengths.assign(features.rows, 0.0);
  for (int t = 0; t < valid; ++t) {
    double pre = h2(t, 0);
    if (tr) tr->pre_relu_lengths[t] = pre;
    lengths[t] = pre > 0.0 ? pre : 0.0;
  }
  return lengths;
}

/// Backward through the length head; returns d(loss)/d(features).
inline Mat predict_lengths_bwd(const std::vector<double>& dlengths, int valid, const std::vector<double>& cond,
                               const AlignerParams& p, const HeadTrace& tr, AlignerParams& grads,
                               std::vector<double>& dcond) {
  Mat dh2(int(dlengths.size()), 1, 0.0);
  for (int t = 0; t < valid; ++t) dh2(t, 0) = tr.pre_relu_lengths[t] > 0.0 ? dlengths[t] : 0.0;
  Mat d = masked_conv1d_bwd(tr.conv2_in, valid, p.head_c2, dh2, grads.head_c2);
  d = relu_bwd(tr.pre_relu2, d);
  d = cond_norm_bwd(tr.n2, valid, cond, p.head_n2, d, grads.head_n2, dcond);
  d = masked_conv1d_bwd(tr.conv1_in, valid, p.head_c1, d, grads.head_c1);
  d = relu_bwd(tr.pre_relu1, d);
  d = cond_norm_bwd(tr.n1, valid, cond, p.head_n1, d, grads.head_n1, dcond);
  return d;
}

struct TokenPositions {
  std::vector<double> ends, centres;
  double total = 0.0;
};

/// e_n = sum_{m<=n} l_m, c_n = e_n - l_n / 2, total = last valid end.
inline TokenPositions positions_from_lengths(const std::vector<double>& lengths, int valid) {
  TokenPositions pos;
  pos.ends.resize(lengths.size());
  pos.centres.resize(lengths.size());
  double acc = 0.0;
  for (size_t n = 0; n < lengths.size(); ++n) {
    acc += lengths[n];
    pos.ends[n] = acc;
    pos.centres[n] = acc - 0.5 * lengths[n];
  }
  pos.total = valid > 0 ? pos.ends[size_t(valid) - 1] : 0.0;
  return pos;
}

/// d(loss)/d(lengths) from cotangents on ends, centres and the total.
inline std::vector<double> positions_from_lengths_bwd(const std::vector<double>& dends,
                                                      const std::vector<double>& dcentres,
                                                      const std::vector<double>& dlengths_direct, double dtotal,
                                                      int valid) {
  const size_t n = dcentres.size();
  std::vector<double> de(n, 0.0);
  for (size_t i = 0; i < n; ++i) de[i] = (i < dends.size() ? dends[i] : 0.0) + dcentres[i];
  if (valid > 0) de[size_t(valid) - 1] += dtotal;
  std::vector<double> dl(n, 0.0);
  double suffix = 0.0;
  for (size_t i = n; i-- > 0;) {
    suffix += de[i];
    dl[i] = suffix - 0.5 * dcentres[i] + (i < dlengths_direct.size() ? dlengths_direct[i] : 0.0);
  }
  return dl;
}

struct InterpTrace {
  Mat weights;  // S x L
  std::vector<double> centres;
  int valid = 0;
  long out_offset = 0;
  double sigma2 = 10.0;
};

/// Gaussian-kernel softmax interpolation: for output step t at absolute
/// position t + offset, logits_n = -(t + offset - c_n)^2 / sigma2, padded
/// tokens pushed down by 1e9; rows are softmax-normalized.
inline Mat interpolate(const Mat& features, const std::vector<double>& centres, int valid, long out_offset,
                       int out_length, double sigma2, Mat* weights_out = nullptr, InterpTrace* tr = nullptr) {
  if (out_length < 1) throw std::invalid_argument("interpolate: out_length must be >= 1");
  const int L = features.rows, C = features.cols;
  Mat weights(out_length, L, 0.0);
  Mat aligned(out_length, C, 0.0);
  std::vector<double> logits(L);
  for (int t = 0; t < out_length; ++t) {
    const double pos = double(out_offset + t);
    double best = -std::numeric_limits<double>::infinity();
    for (int n = 0; n < L; ++n) {
      double d = pos - centres[n];
      double lg = -(d * d) / sigma2;
      if (n >= valid) lg -= kMaskedLogitOffset;
      logits[n] = lg;
      best = std::max(best, lg);
    }
    double z = 0.0;
    for (int n = 0; n < L; ++n) {
      double e = std::exp(logits[n] - best);
      weights(t, n) = e;
      z += e;
    }
    double* wrow = weights.row(t);
    double* arow = aligned.row(t);
    for (int n = 0; n < L; ++n) {
      wrow[n] /= z;
      if (wrow[n] == 0.0) continue;
      const double* frow = features.row(n);
      for (int c = 0; c < C; ++c) arow[c] += wrow[n] * frow[c];
    }
  }
  if (weights_out) *weights_out = weights;
  if (tr) {
    tr->weights = std::move(weights);
    tr->centres = centres;
    tr->valid = valid;
    tr->out_offset = out_offset;
    tr->sigma2 = sigma2;
  }
  return aligned;
}

/// Backward: fills d(loss)/d(features) and d(loss)/d(centres).
inline void interpolate_bwd(const Mat& features, const InterpTrace& tr, const Mat& daligned, Mat& dfeatures,
                            std::vector<double>& dcentres) {
  const int S = daligned.rows, L = features.rows, C = features.cols;
  dfeatures = Mat(L, C, 0.0);
  dcentres.assign(L, 0.0);
  std::vector<double> dw(L);
  for (int t = 0; t < S; ++t) {
    const double* wrow = tr.weights.row(t);
    const double* darow = daligned.row(t);
    double wdot = 0.0;
    for (int n = 0; n < L; ++n) {
      if (wrow[n] == 0.0) {
        dw[n] = 0.0;
        continue;
      }
      const double* frow = features.row(n);
      double* dfrow = dfeatures.row(n);
      double acc = 0.0;
      for (int c = 0; c < C; ++c) {
        acc += darow[c] * frow[c];
        dfrow[c] += wrow[n] * darow[c];
      }
      dw[n] = acc;
      wdot += wrow[n] * acc;
    }
    const double pos = double(tr.out_offset + t);
    for (int n = 0; n < tr.valid; ++n) {
      if (wrow[n] == 0.0) continue;
      double dlogit = wrow[n] * (dw[n] - wdot);
      dcentres[n] += dlogit * 2.0 * (pos - tr.centres[n]) / tr.sigma2;
    }
  }
}

// ---------------------------------------------------------------------------
// Full aligner
// ---------------------------------------------------------------------------

struct AlignerOutput {
  Mat features;  // S x channels
  Mat weights;   // S x L
  std::vector<double> token_lengths, token_ends, token_centres;
  double predicted_total_length = 0.0;
  long out_offset = 0;
  bool degenerate_length = false;  // all-zero lengths; S clamped to 1
};

struct AlignerTrace {
  TokenSequence seq;
  std::vector<double> cond;
  EncoderTrace enc;
  HeadTrace head;
  InterpTrace interp;
  std::vector<double> lengths;
};

/// Full pass: encode, predict lengths over the whole input, position, and
/// interpolate the requested output window. `out_steps` < 0 means "cover the
/// full predicted length" (inference; out_offset is then 0).
inline AlignerOutput align(const TokenSequence& seq, const Conditioning& cond, const AlignerParams& p,
                           long out_offset = 0, int out_steps = -1, NormMode mode = NormMode::PerExample,
                           AlignerTrace* tr = nullptr) {
  auto cvec = concat_conditioning(cond, p.cfg);
  Mat features = encode_tokens(seq, cvec, p, mode, tr ? &tr->enc : nullptr);
  auto lengths = predict_lengths(features, seq.true_length, cvec, p, mode, tr ? &tr->head : nullptr);
  auto pos = positions_from_lengths(lengths, seq.true_length);
  AlignerOutput out;
  out.token_lengths = lengths;
  out.token_ends = pos.ends;
  out.token_centres = pos.centres;
  out.predicted_total_length = pos.total;
  out.out_offset = out_offset;
  int steps = out_steps;
  if (steps < 0) {
    out_offset = 0;
    steps = int(std::ceil(pos.total));
    if (steps < 1) {
      steps = 1;
      out.degenerate_length = true;
    }
    out.out_offset = 0;
  }
  out.features = interpolate(features, pos.centres, seq.true_length, out.out_offset, steps, p.cfg.sigma2,
                             &out.weights, tr ? &tr->interp : nullptr);
  if (tr) {
    tr->seq = seq;
    tr->cond = cvec;
    tr->lengths = lengths;
  }
  return out;
}

/// Backward through the whole aligner. `dfeatures` is the cotangent on the
/// aligned output grid, `dlengths_direct` on the per-token lengths (e.g. from
/// the length loss; pass empty for none), `dtotal` on the predicted total.
/// Returns the conditioning gradient (latent part first, speaker part last).
inline std::vector<double> align_bwd(const AlignerParams& p, const AlignerTrace& tr, const Mat& dfeatures,
                                     const std::vector<double>& dlengths_direct, double dtotal,
                                     AlignerParams& grads) {
  const int valid = tr.seq.true_length;
  Mat dtoken_features;
  std::vector<double> dcentres;
  // reconstruct unaligned features from the trace (encoder output)
  const Mat& token_features = tr.enc.features;
  interpolate_bwd(token_features, tr.interp, dfeatures, dtoken_features, dcentres);
  std::vector<double> dends(dcentres.size(), 0.0);
  auto dlengths = positions_from_lengths_bwd(dends, dcentres, dlengths_direct, dtotal, valid);
  std::vector<double> dcond(tr.cond.size(), 0.0);
  Mat dfeat_head = predict_lengths_bwd(dlengths, valid, tr.cond, p, tr.head, grads, dcond);
  for (size_t k = 0; k < dtoken_features.v.size(); ++k) dtoken_features.v[k] += dfeat_head.v[k];
  encode_tokens_bwd(tr.seq, tr.cond, p, tr.enc, std::move(dtoken_features), grads, dcond);
  return dcond;
}

// ---------------------------------------------------------------------------
// Batch entry points with pooled statistics (fidelity mode, forward only)
// ---------------------------------------------------------------------------

namespace aligner_detail {

/// Joint statistics over the valid rows of every batch item; per-item affine.
inline void cond_norm_pooled(const std::vector<Mat>& xs, const std::vector<int>& valids,
                             const std::vector<std::vector<double>>& conds, const CondNormParams& p, double eps,
                             std::vector<Mat>& ys, CondNormParams* accumulate_into) {
  const int C = xs[0].cols;
  std::vector<double> mean(C, 0.0), var(C, 0.0);
  long count = 0;
  for (size_t e = 0; e < xs.size(); ++e) {
    for (int t = 0; t < valids[e]; ++t) {
      const double* row = xs[e].row(t);
      for (int c = 0; c < C; ++c) mean[c] += row[c];
    }
    count += valids[e];
  }
  for (int c = 0; c < C; ++c) mean[c] /= double(count);
  for (size_t e = 0; e < xs.size(); ++e)
    for (int t = 0; t < valids[e]; ++t) {
      const double* row = xs[e].row(t);
      for (int c = 0; c < C; ++c) {
        double d = row[c] - mean[c];
        var[c] += d * d;
      }
    }
  for (int c = 0; c < C; ++c) var[c] /= double(count);
  if (accumulate_into) {
    // running average of batch statistics across accumulation passes
    double n = accumulate_into->standing_count;
    for (int c = 0; c < C; ++c) {
      accumulate_into->standing_mean[c] = (accumulate_into->standing_mean[c] * n + mean[c]) / (n + 1.0);
      accumulate_into->standing_var[c] =
          n == 0.0 ? var[c] : (accumulate_into->standing_var[c] * n + var[c]) / (n + 1.0);
    }
    accumulate_into->standing_count = n + 1.0;
  }
  ys.resize(xs.size());
  for (size_t e = 0; e < xs.size(); ++e) {
    std::vector<double> gamma, beta;
    cond_affine(p, conds[e], gamma, beta);
    const Mat& x = xs[e];
    Mat y(x.rows, C, 0.0);
    for (int t = 0; t < valids[e]; ++t) {
      const double* row = x.row(t);
      double* out = y.row(t);
      for (int c = 0; c < C; ++c) out[c] = gamma[c] * (row[c] - mean[c]) / std::sqrt(var[c] + eps) + beta[c];
    }
    ys[e] = std::move(y);
  }
}

}  // namespace aligner_detail

/// Forward with batch-pooled normalization statistics (the true batch-norm
/// fidelity mode). When `accumulate_standing` is set, each norm layer's batch
/// statistics are folded into its standing-statistics accumulators so that
/// NormMode::Standing can be used afterwards.
inline std::vector<Mat> encode_tokens_pooled(const std::vector<TokenSequence>& seqs,
                                             const std::vector<std::vector<double>>& conds, AlignerParams& p,
                                             bool accumulate_standing = false) {
  if (seqs.empty() || seqs.size() != conds.size())
    throw std::invalid_argument("encode_tokens_pooled: batch size mismatch");
  const int C = p.cfg.channels;
  std::vector<Mat> xs(seqs.size());
  std::vector<int> valids(seqs.size());
  for (size_t e = 0; e < seqs.size(); ++e) {
    validate_sequence(seqs[e], p);
    valids[e] = seqs[e].true_length;
    Mat x(seqs[e].padded_length(), C, 0.0);
    for (int t = 0; t < valids[e]; ++t) {
      const double* emb = &p.token_embedding.v[size_t(seqs[e].ids[t]) * C];
      double* row = x.row(t);
      for (int c = 0; c < C; ++c) row[c] = emb[c];
    }
    xs[e] = std::move(x);
  }
  std::vector<Mat> hs;
  for (auto& pair : p.pairs) {
    aligner_detail::cond_norm_pooled(xs, valids, conds, pair.n1, p.cfg.norm_eps, hs,
                                     accumulate_standing ? &pair.n1 : nullptr);
    for (size_t e = 0; e < xs.size(); ++e) {
      hs[e] = relu_fwd(hs[e]);
      hs[e] = masked_conv1d_fwd(hs[e], valids[e], pair.c1, nullptr);
    }
    std::vector<Mat> h2s;
    aligner_detail::cond_norm_pooled(hs, valids, conds, pair.n2, p.cfg.norm_eps, h2s,
                                     accumulate_standing ? &pair.n2 : nullptr);
    for (size_t e = 0; e < xs.size(); ++e) {
      h2s[e] = relu_fwd(h2s[e]);
      h2s[e] = masked_conv1d_fwd(h2s[e], valids[e], pair.c2, nullptr);
      for (size_t k = 0; k < xs[e].v.size(); ++k) xs[e].v[k] += h2s[e].v[k];
    }
  }
  return xs;
}

/// Pooled-statistics length head matching encode_tokens_pooled.
inline std::vector<std::vector<double>> predict_lengths_pooled(const std::vector<Mat>& features,
                                                               const std::vector<int>& valids,
                                                               const std::vector<std::vector<double>>& conds,
                                                               AlignerParams& p, bool accumulate_standing = false) {
  std::vector<Mat> hs;
  aligner_detail::cond_norm_pooled(features, valids, conds, p.head_n1, p.cfg.norm_eps, hs,
                                   accumulate_standing ? &p.head_n1 : nullptr);
  for (size_t e = 0; e < hs.size(); ++e) {
    hs[e] = relu_fwd(hs[e]);
    hs[e] = masked_conv1d_fwd(hs[e], valids[e], p.head_c1, nullptr);
  }
  std::vector<Mat> h2s;
  aligner_detail::cond_norm_pooled(hs, valids, conds, p.head_n2, p.cfg.norm_eps, h2s,
                                   accumulate_standing ? &p.head_n2 : nullptr);
  std::vector<std::vector<double>> lengths(h2s.size());
  for (size_t e = 0; e < h2s.size(); ++e) {
    h2s[e] = relu_fwd(h2s[e]);
    h2s[e] = masked_conv1d_fwd(h2s[e], valids[e], p.head_c2, nullptr);
    lengths[e].assign(h2s[e].rows, 0.0);
    for (int t = 0; t < valids[e]; ++t) lengths[e][t] = std::max(0.0, h2s[e](t, 0));
  }
  return lengths;
}

}  // namespace dtts
