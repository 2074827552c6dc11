// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dtts/core.hpp"

namespace dtts {

struct LossWeights {
  double lambda_pred = 1.0;
  double lambda_length = 0.1;
};

struct LossBreakdown {
  double adv = 0.0;
  double pred = 0.0;
  double length = 0.0;
  double total = 0.0;
};

/// (1/F) * sum_{t,f} |gen - gt|. Normalized by the bin count only, so the
/// value scales with the window length.
inline double l1_spectrogram_loss(const Mat& gen, const Mat& gt, Mat* grad_gen = nullptr) {
  if (!gen.same_shape(gt)) throw std::invalid_argument("l1_spectrogram_loss: shape mismatch");
  if (gen.cols < 1) throw std::invalid_argument("l1_spectrogram_loss: empty spectrogram");
  const double inv_f = 1.0 / gen.cols;
  if (grad_gen) *grad_gen = Mat(gen.rows, gen.cols, 0.0);
  double acc = 0.0;
  for (int t = 0; t < gen.rows; ++t)
    for (int f = 0; f < gen.cols; ++f) {
      double diff = gen(t, f) - gt(t, f);
      acc += std::fabs(diff);
      if (grad_gen) (*grad_gen)(t, f) = diff > 0 ? inv_f : (diff < 0 ? -inv_f : 0.0);
    }
  return acc * inv_f;
}

/// 0.5 * (L - sum_n l_n)^2; the gradient wrt every l_n is (sum_n l_n - L).
inline double length_loss(const std::vector<double>& token_lengths, double ground_truth_steps,
                          std::vector<double>* grad_lengths = nullptr) {
  double total = 0.0;
  for (double l : token_lengths) total += l;
  double diff = ground_truth_steps - total;
  if (grad_lengths) grad_lengths->assign(token_lengths.size(), -diff);
  return 0.5 * diff * diff;
}

inline double hinge_discriminator_loss(double d_real, double d_fake) {
  return std::max(0.0, 1.0 - d_real) + std::max(0.0, 1.0 + d_fake);
}

/// Ensemble form: mean of the per-discriminator hinge losses.
inline double hinge_discriminator_loss(const std::vector<double>& d_real, const std::vector<double>& d_fake) {
  if (d_real.size() != d_fake.size() || d_real.empty())
    throw std::domain_error("hinge_discriminator_loss: score lists must be non-empty and equal-sized");
  double acc = 0.0;
  for (size_t i = 0; i < d_real.size(); ++i) acc += hinge_discriminator_loss(d_real[i], d_fake[i]);
  return acc / double(d_real.size());
}

/// -mean(scores); the gradient wrt each score is -1/count.
inline double adv_generator_loss(const std::vector<double>& d_fake_scores, std::vector<double>* grad = nullptr) {
  if (d_fake_scores.empty()) throw std::domain_error("adv_generator_loss: empty score list");
  double acc = 0.0;
  for (double s : d_fake_scores) acc += s;
  if (grad) grad->assign(d_fake_scores.size(), -1.0 / double(d_fake_scores.size()));
  return -acc / double(d_fake_scores.size());
}

inline LossBreakdown total_generator_loss(double adv, double pred, double length, const LossWeights& w = {}) {
  LossBreakdown b;
  b.adv = adv;
  b.pred = pred;
  b.length = length;
  b.total = adv + w.lambda_pred * pred + w.lambda_length * length;
  return b;
}

}  // namespace dtts
