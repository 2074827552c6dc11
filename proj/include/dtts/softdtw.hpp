// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dtts/core.hpp"

namespace dtts {

// Alignment-path losses between two spectrograms. A path starts with both
// indices at the first frame and ends with both at the last; each step either
// advances both sequences (diagonal) or one of them (a warp, charged an extra
// penalty). The soft variant aggregates all paths with a log-sum-exp soft
// minimum at temperature tau; the hard variant is the tau -> 0 limit.

struct DtwConfig {
  double warp_penalty = 1.0;
  double temperature = 0.01;
  int band = -1;  // Sakoe-Chiba half-width; < 0 disables the band
};

struct DtwResult {
  double value = 0.0;
  Mat grad_gen;  // d(value)/d(S_gen), same shape as S_gen
  std::vector<std::pair<int, int>> argmin_path;  // hard variant only; 1-based (gen, gt)
  int path_length() const { return int(argmin_path.size()); }
};

/// Large-but-finite stand-in for infinity; exp(-kDtwInf/tau) underflows to 0.
constexpr double kDtwInf = 1e30;

namespace dtw_detail {
inline double sat_add(double a, double b) { return a >= kDtwInf ? kDtwInf : a + b; }
}  // namespace dtw_detail

/// -tau * ln(sum_i exp(-v_i / tau)), max-subtracted. Never exceeds min(v).
inline double soft_minimum(const std::vector<double>& values, double tau) {
  if (values.empty()) throw std::domain_error("soft_minimum: empty input");
  if (!(tau > 0.0)) throw std::invalid_argument("soft_minimum: temperature must be positive");
  double lo = values[0];
  for (double v : values) lo = std::min(lo, v);
  if (lo >= kDtwInf) return kDtwInf;
  double acc = 0.0;
  for (double v : values) acc += std::exp(-(v - lo) / tau);
  return lo - tau * std::log(acc);
}

/// cost[i][j] = (1/F) * sum_f |gen[i,f] - gt[j,f]|.
inline Mat frame_cost_matrix(const Mat& gen, const Mat& gt) {
  if (gen.cols != gt.cols) throw std::invalid_argument("frame_cost_matrix: mel bin counts differ");
  if (gen.rows < 1 || gt.rows < 1) throw std::invalid_argument("frame_cost_matrix: empty spectrogram");
  Mat cost(gen.rows, gt.rows, 0.0);
  const double inv_f = 1.0 / gen.cols;
  for (int i = 0; i < gen.rows; ++i) {
    const double* a = gen.row(i);
    for (int j = 0; j < gt.rows; ++j) {
      const double* b = gt.row(j);
      double s = 0.0;
      for (int f = 0; f < gen.cols; ++f) s += std::fabs(a[f] - b[f]);
      cost(i, j) = s * inv_f;
    }
  }
  return cost;
}

/// y[i, j] = x[clip(i - j, 0, H-1), j]: shifts column j down by j rows so the
/// anti-diagonals of x become the rows of y. Shape (H+W-1) x W.
inline Mat skew_matrix(const Mat& x) {
  if (x.rows < 1 || x.cols < 1) throw std::invalid_argument("skew_matrix: empty input");
  Mat y(x.rows + x.cols - 1, x.cols, 0.0);
  for (int i = 0; i < y.rows; ++i)
    for (int j = 0; j < y.cols; ++j) {
      int src = i - j;
      if (src < 0) src = 0;
      if (src > x.rows - 1) src = x.rows - 1;
      y(i, j) = x(src, j);
    }
  return y;
}

namespace dtw_detail {

inline void check_config(const Mat& gen, const Mat& gt, const DtwConfig& cfg, bool soft) {
  if (gen.cols != gt.cols) throw std::invalid_argument("dtw: mel bin counts differ");
  if (gen.rows < 1 || gt.rows < 1) throw std::invalid_argument("dtw: empty spectrogram");
  if (cfg.warp_penalty < 0.0) throw std::invalid_argument("dtw: warp penalty must be >= 0");
  if (soft && !(cfg.temperature > 0.0)) throw std::invalid_argument("dtw: temperature must be positive");
}

inline bool in_band(int i, int j, int band) { return band < 0 || std::abs(i - j) <= band; }

/// Fills the aggregated-cost table in anti-diagonal order. Cells outside the
/// band stay at the sentinel.
template <bool Soft>
inline Mat dp_table(const Mat& cost, const DtwConfig& cfg) {
  const int h = cost.rows, w = cost.cols;
  Mat d(h, w, kDtwInf);
  for (int diag = 0; diag <= h + w - 2; ++diag) {
    int i_lo = std::max(0, diag - (w - 1));
    int i_hi = std::min(h - 1, diag);
    for (int i = i_lo; i <= i_hi; ++i) {
      int j = diag - i;
      if (!in_band(i, j, cfg.band)) continue;
      if (i == 0 && j == 0) {
        d(0, 0) = cost(0, 0);
        continue;
      }
      double from_diag = (i > 0 && j > 0) ? d(i - 1, j - 1) : kDtwInf;
      double from_gen = i > 0 ? sat_add(d(i - 1, j), cfg.warp_penalty) : kDtwInf;  // advance gen only
      double from_gt = j > 0 ? sat_add(d(i, j - 1), cfg.warp_penalty) : kDtwInf;   // advance gt only
      double agg;
      if constexpr (Soft) {
        double lo = std::min(from_diag, std::min(from_gen, from_gt));
        if (lo >= kDtwInf) {
          agg = kDtwInf;
        } else {
          double acc = std::exp(-(from_diag - lo) / cfg.temperature) + std::exp(-(from_gen - lo) / cfg.temperature) +
                       std::exp(-(from_gt - lo) / cfg.temperature);
          agg = lo - cfg.temperature * std::log(acc);
        }
      } else {
        agg = std::min(from_diag, std::min(from_gen, from_gt));
      }
      d(i, j) = agg >= kDtwInf ? kDtwInf : agg + cost(i, j);
    }
  }
  if (d(h - 1, w - 1) >= kDtwInf) throw std::invalid_argument("dtw: band too narrow, end cell unreachable");
  return d;
}

}  // namespace dtw_detail

/// Soft DTW with exact reverse-mode gradient wrt S_gen: backpropagates the
/// per-cell softmin weights over the three predecessors through the table.
inline DtwResult soft_dtw(const Mat& gen, const Mat& gt, const DtwConfig& cfg = {}) {
  dtw_detail::check_config(gen, gt, cfg, true);
  const int h = gen.rows, w = gt.rows;
  const double tau = cfg.temperature;
  Mat cost = frame_cost_matrix(gen, gt);
  Mat d = dtw_detail::dp_table<true>(cost, cfg);

  DtwResult r;
  r.value = d(h - 1, w - 1);

  // dvalue/dD[i][j], accumulated in reverse; dvalue/dcost[i][j] equals it.
  Mat g(h, w, 0.0);
  g(h - 1, w - 1) = 1.0;
  for (int i = h - 1; i >= 0; --i) {
    for (int j = w - 1; j >= 0; --j) {
      if (i == 0 && j == 0) continue;
      double gij = g(i, j);
      if (gij == 0.0 || d(i, j) >= kDtwInf) continue;
      double from_diag = (i > 0 && j > 0) ? d(i - 1, j - 1) : kDtwInf;
      double from_gen = i > 0 ? dtw_detail::sat_add(d(i - 1, j), cfg.warp_penalty) : kDtwInf;
      double from_gt = j > 0 ? dtw_detail::sat_add(d(i, j - 1), cfg.warp_penalty) : kDtwInf;
      double lo = std::min(from_diag, std::min(from_gen, from_gt));
      double e_diag = std::exp(-(from_diag - lo) / tau);
      double e_gen = std::exp(-(from_gen - lo) / tau);
      double e_gt = std::exp(-(from_gt - lo) / tau);
      double z = e_diag + e_gen + e_gt;
      if (i > 0 && j > 0) g(i - 1, j - 1) += gij * e_diag / z;
      if (i > 0) g(i - 1, j) += gij * e_gen / z;
      if (j > 0) g(i, j - 1) += gij * e_gt / z;
    }
  }

  r.grad_gen = Mat(h, gen.cols, 0.0);
  const double inv_f = 1.0 / gen.cols;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      double gij = g(i, j);
      if (gij == 0.0) continue;
      const double* a = gen.row(i);
      const double* b = gt.row(j);
      double* out = r.grad_gen.row(i);
      for (int f = 0; f < gen.cols; ++f) {
        double diff = a[f] - b[f];
        if (diff > 0)
          out[f] += gij * inv_f;
        else if (diff < 0)
          out[f] -= gij * inv_f;
      }
    }
  }
  return r;
}

/// Hard DTW: minimal path cost, the backtracked argmin path (1-based index
/// pairs, ties broken diagonal > advance-gt > advance-gen), and the
/// subgradient along that path.
inline DtwResult hard_dtw(const Mat& gen, const Mat& gt, const DtwConfig& cfg = {}) {
  dtw_detail::check_config(gen, gt, cfg, false);
  const int h = gen.rows, w = gt.rows;
  Mat cost = frame_cost_matrix(gen, gt);
  Mat d = dtw_detail::dp_table<false>(cost, cfg);

  DtwResult r;
  r.value = d(h - 1, w - 1);

  int i = h - 1, j = w - 1;
  std::vector<std::pair<int, int>> rev;
  rev.emplace_back(i + 1, j + 1);
  while (i > 0 || j > 0) {
    double from_diag = (i > 0 && j > 0) ? d(i - 1, j - 1) : kDtwInf;
    double from_gt = j > 0 ? dtw_detail::sat_add(d(i, j - 1), cfg.warp_penalty) : kDtwInf;  // action 2
    double from_gen = i > 0 ? dtw_detail::sat_add(d(i - 1, j), cfg.warp_penalty) : kDtwInf;  // action 3
    if (from_diag <= from_gt && from_diag <= from_gen) {
      --i;
      --j;
    } else if (from_gt <= from_gen) {
      --j;
    } else {
      --i;
    }
    rev.emplace_back(i + 1, j + 1);
  }
  r.argmin_path.assign(rev.rbegin(), rev.rend());

  r.grad_gen = Mat(h, gen.cols, 0.0);
  const double inv_f = 1.0 / gen.cols;
  for (auto [pi, pj] : r.argmin_path) {
    const double* a = gen.row(pi - 1);
    const double* b = gt.row(pj - 1);
    double* out = r.grad_gen.row(pi - 1);
    for (int f = 0; f < gen.cols; ++f) {
      double diff = a[f] - b[f];
      if (diff > 0)
        out[f] += inv_f;
      else if (diff < 0)
        out[f] -= inv_f;
    }
  }
  return r;
}

}  // namespace dtts
