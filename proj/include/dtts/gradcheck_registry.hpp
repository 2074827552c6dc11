// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#pragma once

#include <string>
#include <vector>

#include "dtts/aligner.hpp"
#include "dtts/decoder.hpp"
#include "dtts/diffcheck.hpp"
#include "dtts/losses.hpp"
#include "dtts/mel.hpp"
#include "dtts/softdtw.hpp"

namespace dtts {

// The default registry: every hand-derived backward pass in the library gets
// checked against central finite differences here. Fixed collaborators
// (parameters, the other spectrogram of a pair, probe coefficients) are drawn
// from tag-keyed streams so they are identical across the FD evaluations.

namespace gradcheck_detail {

inline std::vector<double> probe_vec(std::uint64_t tag, size_t n) {
  Rng rng(splitmix64(tag ^ 0x9e3779b97f4a7c15ULL));
  std::vector<double> p(n);
  for (auto& v : p) v = rng.uniform(-1.0, 1.0);
  return p;
}

inline Mat fixed_mat(std::uint64_t tag, int rows, int cols, double lo = -1.0, double hi = 1.0) {
  Rng rng(splitmix64(tag));
  Mat m(rows, cols);
  for (auto& v : m.v) v = rng.uniform(lo, hi);
  return m;
}

inline double dot_probe(const std::vector<double>& p, const Mat& m) {
  double acc = 0.0;
  for (size_t i = 0; i < m.v.size(); ++i) acc += p[i] * m.v[i];
  return acc;
}

template <class P>
inline std::vector<double> flatten_tensors(P& params) {
  std::vector<double> out;
  for_each_tensor(params, [&](const std::string&, Tensor& t) { out.insert(out.end(), t.v.begin(), t.v.end()); });
  return out;
}

template <class P>
inline void unflatten_tensors(P& params, const std::vector<double>& x) {
  size_t pos = 0;
  for_each_tensor(params, [&](const std::string&, Tensor& t) {
    std::copy(x.begin() + pos, x.begin() + pos + t.size(), t.v.begin());
    pos += t.size();
  });
}

/// Tiny aligner for the composition checks (small enough for per-coordinate FD).
inline AlignerConfig tiny_aligner_config() {
  AlignerConfig cfg;
  cfg.channels = 6;
  cfg.blocks = 1;
  cfg.latent_dim = 4;
  cfg.speaker_dim = 3;
  return cfg;
}

inline TokenSequence tiny_sequence() {
  TokenSequence seq;
  seq.ids = {0, 2, 1, 3, 0, 0};
  seq.true_length = 5;
  seq.vocab_size = 4;
  return seq;
}

struct TinyAlignerFixture {
  AlignerConfig cfg = tiny_aligner_config();
  TokenSequence seq = tiny_sequence();
  AlignerParams params;
  std::vector<double> cond;
  long eta = 1;
  int out_steps = 6;

  explicit TinyAlignerFixture(std::uint64_t tag) {
    Rng rng(splitmix64(tag ^ 0xA11C));
    params = make_aligner_params(cfg, seq.vocab_size, rng);
    cond = rng.normal_vec(cfg.cond_dim());
  }

  /// Probe over aligned features, valid lengths and the predicted total.
  double probe(const AlignerOutput& out, std::uint64_t tag) const {
    auto pf = probe_vec(tag ^ 0xF0, out.features.v.size());
    auto pl = probe_vec(tag ^ 0xF1, size_t(seq.true_length) + 1);
    double acc = dot_probe(pf, out.features);
    for (int n = 0; n < seq.true_length; ++n) acc += pl[size_t(n)] * out.token_lengths[size_t(n)];
    acc += pl[size_t(seq.true_length)] * out.predicted_total_length;
    return acc;
  }

  /// The matching cotangents for align_bwd.
  void cotangents(const AlignerOutput& out, std::uint64_t tag, Mat& dfeatures, std::vector<double>& dlengths,
                  double& dtotal) const {
    auto pf = probe_vec(tag ^ 0xF0, out.features.v.size());
    auto pl = probe_vec(tag ^ 0xF1, size_t(seq.true_length) + 1);
    dfeatures = Mat(out.features.rows, out.features.cols);
    dfeatures.v = pf;
    dlengths.assign(out.token_lengths.size(), 0.0);
    for (int n = 0; n < seq.true_length; ++n) dlengths[size_t(n)] = pl[size_t(n)];
    dtotal = pl[size_t(seq.true_length)];
  }

  Conditioning conditioning_from(const std::vector<double>& cvec) const {
    Conditioning c;
    c.latent.assign(cvec.begin(), cvec.begin() + cfg.latent_dim);
    c.speaker_embedding.assign(cvec.begin() + cfg.latent_dim, cvec.end());
    return c;
  }
};

}  // namespace gradcheck_detail

inline std::vector<DifferentiableCheck> default_gradcheck_registry() {
  using namespace gradcheck_detail;
  std::vector<DifferentiableCheck> reg;

  // --- mel spectrogram wrt the input waveform -------------------------------
  {
    MelParams mp;
    mp.frame_length = 64;
    mp.frame_step = 32;
    mp.num_bins = 8;
    mp.sample_rate = 4800.0;
    mp.lower_edge_hz = 40.0;
    mp.upper_edge_hz = 2000.0;
    const int len = 160;
    DifferentiableCheck c;
    c.name = "mel_spectrogram";
    c.make_input = [len](Rng& rng) {
      std::vector<double> x(len);
      for (auto& v : x) v = rng.uniform(-0.8, 0.8);
      return x;
    };
    c.scalar = [mp](const std::vector<double>& x) {
      auto f = mel_spectrogram_fwd(x, mp, true, false);
      return dot_probe(probe_vec(0x3E1, f.value.v.size()), f.value);
    };
    c.analytic = [mp](const std::vector<double>& x) {
      auto f = mel_spectrogram_fwd(x, mp, true, false);
      Mat dv(f.value.rows, f.value.cols);
      dv.v = probe_vec(0x3E1, f.value.v.size());
      return mel_spectrogram_bwd(f, dv, mp);
    };
    reg.push_back(std::move(c));
  }

  // --- interpolation wrt features and centres -------------------------------
  {
    const int L = 6, C = 5, S = 7, valid = 4;
    const long eta = 2;
    const double sigma2 = 10.0;
    DifferentiableCheck c;
    c.name = "interpolate";
    c.make_input = [=](Rng& rng) {
      std::vector<double> x(size_t(L) * C + L);
      for (size_t i = 0; i < size_t(L) * C; ++i) x[i] = rng.uniform(-1.0, 1.0);
      for (int n = 0; n < L; ++n) x[size_t(L) * C + n] = rng.uniform(0.0, 8.0);
      return x;
    };
    auto split = [=](const std::vector<double>& x, Mat& feats, std::vector<double>& centres) {
      feats = Mat(L, C);
      std::copy(x.begin(), x.begin() + size_t(L) * C, feats.v.begin());
      centres.assign(x.begin() + size_t(L) * C, x.end());
    };
    c.scalar = [=](const std::vector<double>& x) {
      Mat feats;
      std::vector<double> centres;
      split(x, feats, centres);
      Mat a = interpolate(feats, centres, valid, eta, S, sigma2);
      return dot_probe(probe_vec(0x1A7, a.v.size()), a);
    };
    c.analytic = [=](const std::vector<double>& x) {
      Mat feats;
      std::vector<double> centres;
      split(x, feats, centres);
      InterpTrace tr;
      Mat a = interpolate(feats, centres, valid, eta, S, sigma2, nullptr, &tr);
      Mat da(a.rows, a.cols);
      da.v = probe_vec(0x1A7, a.v.size());
      Mat dfeats;
      std::vector<double> dcentres;
      interpolate_bwd(feats, tr, da, dfeats, dcentres);
      std::vector<double> g(dfeats.v);
      g.insert(g.end(), dcentres.begin(), dcentres.end());
      return g;
    };
    reg.push_back(std::move(c));
  }

  // --- lengths -> positions -> interpolation composition --------------------
  {
    const int L = 5, C = 4, S = 6, valid = 5;
    const long eta = 0;
    const double sigma2 = 10.0;
    DifferentiableCheck c;
    c.name = "positions_from_lengths";
    c.make_input = [=](Rng& rng) {
      std::vector<double> lengths(L);
      for (auto& v : lengths) v = rng.uniform(0.5, 2.5);
      return lengths;
    };
    c.scalar = [=](const std::vector<double>& lengths) {
      Mat feats = fixed_mat(0x9051, L, C);
      auto pos = positions_from_lengths(lengths, valid);
      Mat a = interpolate(feats, pos.centres, valid, eta, S, sigma2);
      return dot_probe(probe_vec(0x9052, a.v.size()), a) + 0.37 * pos.total;
    };
    c.analytic = [=](const std::vector<double>& lengths) {
      Mat feats = fixed_mat(0x9051, L, C);
      auto pos = positions_from_lengths(lengths, valid);
      InterpTrace tr;
      Mat a = interpolate(feats, pos.centres, valid, eta, S, sigma2, nullptr, &tr);
      Mat da(a.rows, a.cols);
      da.v = probe_vec(0x9052, a.v.size());
      Mat dfeats;
      std::vector<double> dcentres;
      interpolate_bwd(feats, tr, da, dfeats, dcentres);
      std::vector<double> dends(dcentres.size(), 0.0), direct(dcentres.size(), 0.0);
      return positions_from_lengths_bwd(dends, dcentres, direct, 0.37, valid);
    };
    reg.push_back(std::move(c));
  }

  // --- length head wrt its input features -----------------------------------
  {
    TinyAlignerFixture fx(0xBEEF);
    const int L = fx.seq.padded_length(), C = fx.cfg.channels, valid = fx.seq.true_length;
    DifferentiableCheck c;
    c.name = "length_head";
    c.make_input = [=](Rng& rng) {
      std::vector<double> x(size_t(L) * C);
      for (auto& v : x) v = rng.uniform(-1.0, 1.0);
      return x;
    };
    c.scalar = [=](const std::vector<double>& x) {
      Mat feats(L, C);
      feats.v = x;
      auto lengths = predict_lengths(feats, valid, fx.cond, fx.params);
      double acc = 0.0;
      auto p = probe_vec(0x9EAD, size_t(valid));
      for (int n = 0; n < valid; ++n) acc += p[size_t(n)] * lengths[size_t(n)];
      return acc;
    };
    c.analytic = [=](const std::vector<double>& x) {
      Mat feats(L, C);
      feats.v = x;
      HeadTrace tr;
      auto lengths = predict_lengths(feats, valid, fx.cond, fx.params, NormMode::PerExample, &tr);
      (void)lengths;
      std::vector<double> dl(size_t(L), 0.0);
      auto p = probe_vec(0x9EAD, size_t(valid));
      for (int n = 0; n < valid; ++n) dl[size_t(n)] = p[size_t(n)];
      AlignerParams grads = make_aligner_grads(fx.params);
      std::vector<double> dcond(fx.cond.size(), 0.0);
      Mat dfeats = predict_lengths_bwd(dl, valid, fx.cond, fx.params, tr, grads, dcond);
      return dfeats.v;
    };
    reg.push_back(std::move(c));
  }

  // --- soft DTW wrt the generated spectrogram --------------------------------
  {
    const int T = 4, F = 3;
    DifferentiableCheck c;
    c.name = "soft_dtw";
    c.make_input = [=](Rng& rng) {
      Mat gt = fixed_mat(0xD7A, T, F, 0.0, 2.0);
      std::vector<double> x(size_t(T) * F);
      for (size_t i = 0; i < x.size(); ++i) {
        // keep a margin from the |.| kinks of the cost cells
        double offset = rng.uniform(0.05, 1.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        x[i] = gt.v[i] + offset;
      }
      return x;
    };
    c.scalar = [=](const std::vector<double>& x) {
      Mat gen(T, F);
      gen.v = x;
      return soft_dtw(gen, fixed_mat(0xD7A, T, F, 0.0, 2.0)).value;
    };
    c.analytic = [=](const std::vector<double>& x) {
      Mat gen(T, F);
      gen.v = x;
      return soft_dtw(gen, fixed_mat(0xD7A, T, F, 0.0, 2.0)).grad_gen.v;
    };
    reg.push_back(std::move(c));
  }

  // --- L1 spectrogram loss ----------------------------------------------------
  {
    const int T = 5, F = 4;
    DifferentiableCheck c;
    c.name = "l1_spectrogram_loss";
    c.make_input = [=](Rng& rng) {
      Mat gt = fixed_mat(0x11A, T, F, 0.0, 2.0);
      std::vector<double> x(size_t(T) * F);
      for (size_t i = 0; i < x.size(); ++i) {
        double offset = rng.uniform(0.05, 1.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        x[i] = gt.v[i] + offset;
      }
      return x;
    };
    c.scalar = [=](const std::vector<double>& x) {
      Mat gen(T, F);
      gen.v = x;
      return l1_spectrogram_loss(gen, fixed_mat(0x11A, T, F, 0.0, 2.0));
    };
    c.analytic = [=](const std::vector<double>& x) {
      Mat gen(T, F);
      gen.v = x;
      Mat g;
      l1_spectrogram_loss(gen, fixed_mat(0x11A, T, F, 0.0, 2.0), &g);
      return g.v;
    };
    reg.push_back(std::move(c));
  }

  // --- length loss ------------------------------------------------------------
  {
    const int N = 7;
    const double L_gt = 12.5;
    DifferentiableCheck c;
    c.name = "length_loss";
    c.make_input = [=](Rng& rng) {
      std::vector<double> l(N);
      for (auto& v : l) v = rng.uniform(0.0, 4.0);
      return l;
    };
    c.scalar = [=](const std::vector<double>& l) { return length_loss(l, L_gt); };
    c.analytic = [=](const std::vector<double>& l) {
      std::vector<double> g;
      length_loss(l, L_gt, &g);
      return g;
    };
    reg.push_back(std::move(c));
  }

  // --- toy decoder wrt features and wrt parameters ----------------------------
  {
    DecoderConfig dc;
    dc.factors = {4, 5, 6};
    dc.channels = {6, 4};
    const int S = 4, C = 8;
    Rng prng(splitmix64(0xDECD));
    DecoderParams dparams = make_decoder_params(dc, C, 120, prng);
    {
      DifferentiableCheck c;
      c.name = "toy_decoder";
      c.make_input = [=](Rng& rng) {
        std::vector<double> x(size_t(S) * C);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        return x;
      };
      c.scalar = [=](const std::vector<double>& x) {
        Mat feats(S, C);
        feats.v = x;
        auto wave = decoder_fwd(feats, dparams);
        auto p = probe_vec(0xDEC1, wave.size());
        double acc = 0.0;
        for (size_t i = 0; i < wave.size(); ++i) acc += p[i] * wave[i];
        return acc;
      };
      c.analytic = [=](const std::vector<double>& x) {
        Mat feats(S, C);
        feats.v = x;
        DecoderTrace tr;
        auto wave = decoder_fwd(feats, dparams, &tr);
        auto p = probe_vec(0xDEC1, wave.size());
        DecoderParams grads = make_decoder_grads(dparams);
        Mat dfeats = decoder_bwd(dparams, tr, p, grads);
        return dfeats.v;
      };
      reg.push_back(std::move(c));
    }
    {
      DifferentiableCheck c;
      c.name = "toy_decoder_params";
      c.make_input = [=](Rng& rng) mutable {
        DecoderParams fresh = dparams;
        // re-randomize parameters per seed, keeping shapes
        for_each_tensor(fresh, [&](const std::string&, Tensor& t) {
          for (auto& v : t.v) v = rng.uniform(-0.5, 0.5);
        });
        return flatten_tensors(fresh);
      };
      c.scalar = [=](const std::vector<double>& x) {
        DecoderParams p = dparams;
        unflatten_tensors(p, x);
        Mat feats = fixed_mat(0xDEC2, S, C);
        auto wave = decoder_fwd(feats, p);
        auto pr = probe_vec(0xDEC3, wave.size());
        double acc = 0.0;
        for (size_t i = 0; i < wave.size(); ++i) acc += pr[i] * wave[i];
        return acc;
      };
      c.analytic = [=](const std::vector<double>& x) {
        DecoderParams p = dparams;
        unflatten_tensors(p, x);
        Mat feats = fixed_mat(0xDEC2, S, C);
        DecoderTrace tr;
        auto wave = decoder_fwd(feats, p, &tr);
        auto pr = probe_vec(0xDEC3, wave.size());
        DecoderParams grads = make_decoder_grads(p);
        decoder_bwd(p, tr, pr, grads);
        return flatten_tensors(grads);
      };
      reg.push_back(std::move(c));
    }
  }

  // --- the full aligner wrt all its parameters -------------------------------
  {
    DifferentiableCheck c;
    c.name = "aligner_params";
    c.make_input = [](Rng& rng) {
      // the input vector is the flattened parameter set, re-drawn per seed
      TinyAlignerFixture fx(0xC0FE);
      AlignerParams p = fx.params;
      for_each_tensor(p, [&](const std::string& name, Tensor& t) {
        if (name.find("standing") != std::string::npos) return;
        for (auto& v : t.v) v = rng.uniform(-0.5, 0.5);
      });
      return flatten_tensors(p);
    };
    c.scalar = [](const std::vector<double>& x) {
      TinyAlignerFixture fx(0xC0FE);
      AlignerParams p = fx.params;
      unflatten_tensors(p, x);
      auto out = align(fx.seq, fx.conditioning_from(fx.cond), p, fx.eta, fx.out_steps);
      return fx.probe(out, 0xC0FF);
    };
    c.analytic = [](const std::vector<double>& x) {
      TinyAlignerFixture fx(0xC0FE);
      AlignerParams p = fx.params;
      unflatten_tensors(p, x);
      AlignerTrace tr;
      auto out = align(fx.seq, fx.conditioning_from(fx.cond), p, fx.eta, fx.out_steps, NormMode::PerExample, &tr);
      Mat dfeatures;
      std::vector<double> dlengths;
      double dtotal = 0.0;
      fx.cotangents(out, 0xC0FF, dfeatures, dlengths, dtotal);
      AlignerParams grads = make_aligner_grads(p);
      align_bwd(p, tr, dfeatures, dlengths, dtotal, grads);
      return flatten_tensors(grads);
    };
    reg.push_back(std::move(c));
  }

  // --- the full aligner wrt the conditioning vector --------------------------
  {
    DifferentiableCheck c;
    c.name = "aligner_conditioning";
    c.make_input = [](Rng& rng) {
      TinyAlignerFixture fx(0xC0FE);
      std::vector<double> cond(fx.cfg.cond_dim());
      for (auto& v : cond) v = rng.normal();
      return cond;
    };
    c.scalar = [](const std::vector<double>& cond) {
      TinyAlignerFixture fx(0xC0FE);
      auto out = align(fx.seq, fx.conditioning_from(cond), fx.params, fx.eta, fx.out_steps);
      return fx.probe(out, 0xCAFE);
    };
    c.analytic = [](const std::vector<double>& cond) {
      TinyAlignerFixture fx(0xC0FE);
      AlignerTrace tr;
      auto out = align(fx.seq, fx.conditioning_from(cond), fx.params, fx.eta, fx.out_steps, NormMode::PerExample,
                       &tr);
      Mat dfeatures;
      std::vector<double> dlengths;
      double dtotal = 0.0;
      fx.cotangents(out, 0xCAFE, dfeatures, dlengths, dtotal);
      AlignerParams grads = make_aligner_grads(fx.params);
      return align_bwd(fx.params, tr, dfeatures, dlengths, dtotal, grads);
    };
    reg.push_back(std::move(c));
  }

  return reg;
}

}  // namespace dtts
