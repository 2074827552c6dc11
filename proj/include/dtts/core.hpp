// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace dtts {

/// Dense row-major matrix of doubles. All numerics in this library run in
/// double precision; float32 appears only in the on-disk dump format.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), v(size_t(r) * c, fill) {}

  double& operator()(int i, int j) { return v[size_t(i) * cols + j]; }
  double operator()(int i, int j) const { return v[size_t(i) * cols + j]; }
  double* row(int i) { return v.data() + size_t(i) * cols; }
  const double* row(int i) const { return v.data() + size_t(i) * cols; }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

inline bool all_finite(const std::vector<double>& x) {
  for (double t : x)
    if (!std::isfinite(t)) return false;
  return true;
}

inline bool all_finite(const Mat& m) { return all_finite(m.v); }

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seedable random stream (xoshiro-free, just splitmix state). Substreams are
/// derived from the base seed and a key, so independently-keyed consumers see
/// independent, reproducible streams regardless of draw order elsewhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), state_(splitmix64(seed ^ 0x6a09e667f3bcc908ULL)) {}

  std::uint64_t next_u64() {
    state_ = splitmix64(state_);
    return state_;
  }

  /// Uniform in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    std::uint64_t span = std::uint64_t(hi - lo) + 1;
    return lo + std::int64_t(next_u64() % span);
  }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  std::vector<double> normal_vec(int n) {
    std::vector<double> out(n);
    for (auto& x : out) x = normal();
    return out;
  }

  /// Independent stream keyed off the base seed; insensitive to how much the
  /// parent stream has been consumed.
  Rng substream(std::uint64_t key) const { return Rng(splitmix64(seed_ ^ splitmix64(key + 0x9e3779b97f4a7c15ULL))); }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Named tensor: flat storage plus a shape, the unit of checkpointing and of
/// optimizer state.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, double fill = 0.0) : shape(std::move(s)) {
    size_t n = 1;
    for (int d : shape) n *= size_t(d);
    v.assign(n, fill);
  }
  size_t size() const { return v.size(); }
  double& operator[](size_t i) { return v[i]; }
  double operator[](size_t i) const { return v[i]; }
  /// 2-D accessor (shape = [r, c]).
  double& at(int i, int j) { return v[size_t(i) * shape[1] + j]; }
  double at(int i, int j) const { return v[size_t(i) * shape[1] + j]; }
  /// 3-D accessor (shape = [a, b, c]).
  double& at(int i, int j, int k) { return v[(size_t(i) * shape[1] + j) * shape[2] + k]; }
  double at(int i, int j, int k) const { return v[(size_t(i) * shape[1] + j) * shape[2] + k]; }
  void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

/// Fills `t` (viewed as [rows, cols] with cols = the last extent and rows =
/// everything else, i.e. [fan_in, fan_out] for conv kernels) with a
/// semi-orthogonal matrix scaled by `gain`: modified Gram-Schmidt over the
/// smaller dimension.
inline void orthogonal_init(Tensor& t, Rng& rng, double gain = 1.0) {
  if (t.shape.empty() || t.size() == 0) return;
  size_t cols = size_t(t.shape.back());
  size_t rows = t.size() / cols;
  bool wide = cols > rows;  // orthonormalize the shorter side
  size_t n = wide ? rows : cols;
  size_t m = wide ? cols : rows;
  // vectors[i] has length m; orthonormalize n of them.
  std::vector<std::vector<double>> q(n, std::vector<double>(m));
  for (auto& row : q)
    for (auto& x : row) x = rng.normal();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < i; ++j) {
      double dot = 0.0;
      for (size_t k = 0; k < m; ++k) dot += q[i][k] * q[j][k];
      for (size_t k = 0; k < m; ++k) q[i][k] -= dot * q[j][k];
    }
    double norm = 0.0;
    for (size_t k = 0; k < m; ++k) norm += q[i][k] * q[i][k];
    norm = std::sqrt(norm);
    if (norm < 1e-12) norm = 1.0;
    for (size_t k = 0; k < m; ++k) q[i][k] /= norm;
  }
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < cols; ++c) t.v[r * cols + c] = gain * (wide ? q[r][c] : q[c][r]);
}

inline double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("pearson_correlation: size mismatch");
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= double(a.size());
  mb /= double(b.size());
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

inline double median(std::vector<double> x) {
  if (x.empty()) throw std::invalid_argument("median: empty");
  std::sort(x.begin(), x.end());
  size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

}  // namespace dtts
