// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#pragma once

// Test-only oracle: enumerates every monotone alignment path explicitly and
// aggregates the path costs directly. Deliberately shares no code with the
// dynamic program it is used to validate; keep it that way.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dtts/core.hpp"
#include "dtts/softdtw.hpp"

namespace dtts::oracle {

constexpr int kMaxBruteForceFrames = 8;

/// Central Delannoy numbers: paths in an n x n grid with steps right/down/diag.
inline long long count_paths(int rows, int cols) {
  std::vector<std::vector<long long>> d(rows, std::vector<long long>(cols, 0));
  d[0][0] = 1;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      if (i == 0 && j == 0) continue;
      long long acc = 0;
      if (i > 0) acc += d[i - 1][j];
      if (j > 0) acc += d[i][j - 1];
      if (i > 0 && j > 0) acc += d[i - 1][j - 1];
      d[i][j] = acc;
    }
  return d[rows - 1][cols - 1];
}

namespace detail {

inline double cell_cost(const Mat& gen, const Mat& gt, int i, int j) {
  double s = 0.0;
  for (int f = 0; f < gen.cols; ++f) s += std::fabs(gen(i, f) - gt(j, f));
  return s / gen.cols;
}

inline void enumerate(const Mat& gen, const Mat& gt, double warp_penalty, int i, int j, double acc,
                      std::vector<double>& path_costs) {
  acc += cell_cost(gen, gt, i, j);
  if (i == gen.rows - 1 && j == gt.rows - 1) {
    path_costs.push_back(acc);
    return;
  }
  if (i + 1 < gen.rows && j + 1 < gt.rows) enumerate(gen, gt, warp_penalty, i + 1, j + 1, acc, path_costs);
  if (j + 1 < gt.rows) enumerate(gen, gt, warp_penalty, i, j + 1, acc + warp_penalty, path_costs);
  if (i + 1 < gen.rows) enumerate(gen, gt, warp_penalty, i + 1, j, acc + warp_penalty, path_costs);
}

}  // namespace detail

inline std::vector<double> all_path_costs(const Mat& gen, const Mat& gt, double warp_penalty) {
  if (gen.rows > kMaxBruteForceFrames || gt.rows > kMaxBruteForceFrames)
    throw std::length_error("brute-force dtw oracle refuses inputs longer than " +
                            std::to_string(kMaxBruteForceFrames) + " frames");
  if (gen.cols != gt.cols) throw std::invalid_argument("brute-force dtw oracle: bin counts differ");
  std::vector<double> costs;
  costs.reserve(size_t(count_paths(gen.rows, gt.rows)));
  detail::enumerate(gen, gt, warp_penalty, 0, 0, 0.0, costs);
  return costs;
}

inline double brute_force_soft_dtw(const Mat& gen, const Mat& gt, const DtwConfig& cfg = {}) {
  if (!(cfg.temperature > 0.0)) throw std::invalid_argument("brute-force dtw oracle: temperature must be positive");
  auto costs = all_path_costs(gen, gt, cfg.warp_penalty);
  double lo = costs[0];
  for (double c : costs) lo = std::min(lo, c);
  double acc = 0.0;
  for (double c : costs) acc += std::exp(-(c - lo) / cfg.temperature);
  return lo - cfg.temperature * std::log(acc);
}

inline double brute_force_hard_dtw(const Mat& gen, const Mat& gt, const DtwConfig& cfg = {}) {
  auto costs = all_path_costs(gen, gt, cfg.warp_penalty);
  double lo = costs[0];
  for (double c : costs) lo = std::min(lo, c);
  return lo;
}

}  // namespace dtts::oracle
