// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtts/core.hpp"

namespace dtts {

/// Adam over a flat list of tensor views. Defaults follow the training setup:
/// beta1 = 0 (no momentum), beta2 = 0.999.
struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.0;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// `params` and `grads` are parallel lists of equal-sized vectors.
  void step(std::vector<std::vector<double>*>& params, const std::vector<const std::vector<double>*>& grads,
            double lr) {
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (size_t i = 0; i < params.size(); ++i) {
        m_[i].assign(params[i]->size(), 0.0);
        v_[i].assign(params[i]->size(), 0.0);
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    for (size_t i = 0; i < params.size(); ++i) {
      auto& p = *params[i];
      const auto& g = *grads[i];
      if (p.size() != g.size()) throw std::logic_error("Adam: parameter/gradient size mismatch");
      for (size_t k = 0; k < p.size(); ++k) {
        m_[i][k] = cfg_.beta1 * m_[i][k] + (1.0 - cfg_.beta1) * g[k];
        v_[i][k] = cfg_.beta2 * v_[i][k] + (1.0 - cfg_.beta2) * g[k] * g[k];
        double mhat = m_[i][k] / bc1;
        double vhat = v_[i][k] / bc2;
        p[k] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

  long step_count() const { return t_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// Cosine decay from `base_lr` at step 0 to exactly 0 at step `total - 1`.
inline double cosine_lr(double base_lr, long step, long total_steps) {
  if (total_steps <= 1) return base_lr;
  double frac = double(step) / double(total_steps - 1);
  if (frac > 1.0) frac = 1.0;
  return base_lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * frac));
}

/// Exponential moving average of a parameter list.
class Ema {
 public:
  explicit Ema(double decay = 0.9999) : decay_(decay) {}

  void update(const std::vector<const std::vector<double>*>& params) {
    if (shadow_.empty()) {
      shadow_.resize(params.size());
      for (size_t i = 0; i < params.size(); ++i) shadow_[i] = *params[i];
      return;
    }
    for (size_t i = 0; i < params.size(); ++i) {
      const auto& p = *params[i];
      for (size_t k = 0; k < p.size(); ++k) shadow_[i][k] = decay_ * shadow_[i][k] + (1.0 - decay_) * p[k];
    }
  }

  const std::vector<std::vector<double>>& shadow() const { return shadow_; }
  bool initialized() const { return !shadow_.empty(); }

  void copy_to(std::vector<std::vector<double>*>& params) const {
    for (size_t i = 0; i < params.size(); ++i) *params[i] = shadow_[i];
  }

 private:
  double decay_;
  std::vector<std::vector<double>> shadow_;
};

}  // namespace dtts
