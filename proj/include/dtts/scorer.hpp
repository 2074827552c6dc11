// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtts/core.hpp"

namespace dtts {

// Tiny convolutional scorers for the random-window discriminators: two
// strided valid convolutions, global average pooling, and a linear readout.
// One scorer per window size. These exist to exercise the adversarial code
// path at toy scale, not to reproduce a full discriminator architecture.

struct ScorerStage {
  Tensor w;  // [kernel, in, out]
  Tensor b;  // [out]
  int stride = 4;
};

struct WindowScorer {
  int window_size = 0;
  ScorerStage s1, s2;
  Tensor lin_w;  // [channels]
  Tensor lin_b;  // [1]
};

struct ScorerEnsemble {
  std::vector<WindowScorer> scorers;
};

template <class Fn>
inline void for_each_tensor(ScorerEnsemble& e, Fn&& fn) {
  for (size_t i = 0; i < e.scorers.size(); ++i) {
    std::string base = "scorer" + std::to_string(i);
    fn(base + ".s1.w", e.scorers[i].s1.w);
    fn(base + ".s1.b", e.scorers[i].s1.b);
    fn(base + ".s2.w", e.scorers[i].s2.w);
    fn(base + ".s2.b", e.scorers[i].s2.b);
    fn(base + ".lin_w", e.scorers[i].lin_w);
    fn(base + ".lin_b", e.scorers[i].lin_b);
  }
}

inline ScorerEnsemble make_scorer_ensemble(const std::vector<int>& window_sizes, int channels, int kernel,
                                           Rng& rng) {
  ScorerEnsemble e;
  for (int size : window_sizes) {
    WindowScorer s;
    s.window_size = size;
    s.s1.w = Tensor({kernel, 1, channels});
    s.s1.b = Tensor({channels});
    s.s2.w = Tensor({kernel, channels, channels});
    s.s2.b = Tensor({channels});
    s.lin_w = Tensor({channels});
    s.lin_b = Tensor({1});
    orthogonal_init(s.s1.w, rng);
    orthogonal_init(s.s2.w, rng);
    orthogonal_init(s.lin_w, rng);
    int len = size;
    for (int stage = 0; stage < 2; ++stage) {
      len = (len - kernel) / 4 + 1;
      if (len < 1)
        throw std::invalid_argument("scorer: window size " + std::to_string(size) + " too small for the stack");
    }
    e.scorers.push_back(std::move(s));
  }
  return e;
}

inline ScorerEnsemble make_scorer_grads(const ScorerEnsemble& e) {
  ScorerEnsemble g = e;
  for_each_tensor(g, [](const std::string&, Tensor& t) { t.zero(); });
  return g;
}

namespace scorer_detail {

inline Mat strided_conv_fwd(const Mat& x, const ScorerStage& s) {
  const int k = s.w.shape[0], in_ch = s.w.shape[1], out_ch = s.w.shape[2];
  const int out_len = (x.rows - k) / s.stride + 1;
  Mat y(out_len, out_ch, 0.0);
  for (int t = 0; t < out_len; ++t) {
    double* out = y.row(t);
    for (int o = 0; o < out_ch; ++o) out[o] = s.b[o];
    for (int j = 0; j < k; ++j) {
      const double* row = x.row(t * s.stride + j);
      const double* w = &s.w.v[size_t(j) * in_ch * out_ch];
      for (int c = 0; c < in_ch; ++c) {
        double xv = row[c];
        const double* wrow = w + size_t(c) * out_ch;
        for (int o = 0; o < out_ch; ++o) out[o] += xv * wrow[o];
      }
    }
  }
  return y;
}

inline Mat strided_conv_bwd(const Mat& x, const ScorerStage& s, const Mat& dy, ScorerStage& grads) {
  const int k = s.w.shape[0], in_ch = s.w.shape[1], out_ch = s.w.shape[2];
  Mat dx(x.rows, x.cols, 0.0);
  for (int t = 0; t < dy.rows; ++t) {
    const double* dyr = dy.row(t);
    for (int o = 0; o < out_ch; ++o) grads.b[o] += dyr[o];
    for (int j = 0; j < k; ++j) {
      const double* xrow = x.row(t * s.stride + j);
      double* dxrow = dx.row(t * s.stride + j);
      const double* w = &s.w.v[size_t(j) * in_ch * out_ch];
      double* gw = &grads.w.v[size_t(j) * in_ch * out_ch];
      for (int c = 0; c < in_ch; ++c) {
        const double* wrow = w + size_t(c) * out_ch;
        double* gwrow = gw + size_t(c) * out_ch;
        double acc = 0.0;
        for (int o = 0; o < out_ch; ++o) {
          acc += dyr[o] * wrow[o];
          gwrow[o] += xrow[c] * dyr[o];
        }
        dxrow[c] += acc;
      }
    }
  }
  return dx;
}

}  // namespace scorer_detail

struct ScorerTrace {
  Mat input;  // window as a [len, 1] column
  Mat pre1, pre2;
  std::vector<double> pooled;
};

inline double score_window(const WindowScorer& s, const std::vector<double>& window, ScorerTrace* tr = nullptr) {
  if (int(window.size()) != s.window_size) throw std::invalid_argument("scorer: window size mismatch");
  Mat x(int(window.size()), 1, 0.0);
  for (int t = 0; t < x.rows; ++t) x(t, 0) = window[size_t(t)];
  Mat pre1 = scorer_detail::strided_conv_fwd(x, s.s1);
  Mat h1 = relu_fwd(pre1);
  Mat pre2 = scorer_detail::strided_conv_fwd(h1, s.s2);
  Mat h2 = relu_fwd(pre2);
  const int ch = h2.cols;
  std::vector<double> pooled(ch, 0.0);
  for (int t = 0; t < h2.rows; ++t)
    for (int c = 0; c < ch; ++c) pooled[c] += h2(t, c);
  for (int c = 0; c < ch; ++c) pooled[c] /= double(h2.rows);
  double out = s.lin_b[0];
  for (int c = 0; c < ch; ++c) out += s.lin_w[c] * pooled[c];
  if (tr) {
    tr->input = std::move(x);
    tr->pre1 = std::move(pre1);
    tr->pre2 = std::move(pre2);
    tr->pooled = std::move(pooled);
  }
  return out;
}

/// Backward from a scalar cotangent on the score; returns d(score)/d(window)
/// scaled by dscore, and accumulates parameter gradients.
inline std::vector<double> score_window_bwd(const WindowScorer& s, const ScorerTrace& tr, double dscore,
                                            WindowScorer& grads) {
  const int ch = int(tr.pooled.size());
  grads.lin_b[0] += dscore;
  for (int c = 0; c < ch; ++c) grads.lin_w[c] += dscore * tr.pooled[c];
  Mat h2 = relu_fwd(tr.pre2);
  Mat dh2(h2.rows, h2.cols, 0.0);
  for (int t = 0; t < h2.rows; ++t)
    for (int c = 0; c < ch; ++c) dh2(t, c) = dscore * s.lin_w[c] / double(h2.rows);
  dh2 = relu_bwd(tr.pre2, dh2);
  Mat h1 = relu_fwd(tr.pre1);
  Mat dh1 = scorer_detail::strided_conv_bwd(h1, s.s2, dh2, grads.s2);
  dh1 = relu_bwd(tr.pre1, dh1);
  Mat dx = scorer_detail::strided_conv_bwd(tr.input, s.s1, dh1, grads.s1);
  std::vector<double> dwindow(size_t(dx.rows));
  for (int t = 0; t < dx.rows; ++t) dwindow[size_t(t)] = dx(t, 0);
  return dwindow;
}

}  // namespace dtts
