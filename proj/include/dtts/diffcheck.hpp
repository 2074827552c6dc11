// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtts/core.hpp"

namespace dtts {

// Finite-difference verification harness. Every differentiable operation in
// the repository registers a check here: inputs built from a seed, a scalar
// probe of the op's output, and the analytic gradient of that probe computed
// through the op's own backward pass. Central differences are the arbiter.

struct FdReport {
  std::string name;
  std::uint64_t seed = 0;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  int worst_coordinate = -1;
  double step = 1e-5;
  int excluded = 0;  // coordinates skipped as non-differentiable (kinks)
  int total = 0;
  bool passed = false;

  double excluded_pct() const { return total ? 100.0 * excluded / total : 0.0; }
};

struct DifferentiableCheck {
  std::string name;
  /// Builds the flattened input vector for a seed.
  std::function<std::vector<double>(Rng&)> make_input;
  /// Forward + scalar probe.
  std::function<double(const std::vector<double>&)> scalar;
  /// Analytic gradient of the probe wrt the flattened input.
  std::function<std::vector<double>(const std::vector<double>&)> analytic;
};

constexpr double kFdDefaultStep = 1e-5;
constexpr double kFdDefaultTolerance = 1e-4;
/// Forward/backward one-sided estimates disagreeing by more than this
/// (relative to slope scale) mark a coordinate as sitting on a kink.
constexpr double kFdKinkThreshold = 1e-2;
/// A check with more than this percentage of kink coordinates fails outright.
constexpr double kFdMaxExcludedPct = 5.0;

/// Plain central-difference gradient of a scalar function.
inline std::vector<double> finite_difference_gradient(const std::function<double(const std::vector<double>&)>& f,
                                                      std::vector<double> x, double step = kFdDefaultStep) {
  std::vector<double> g(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    double keep = x[i];
    x[i] = keep + step;
    double fp = f(x);
    x[i] = keep - step;
    double fm = f(x);
    x[i] = keep;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::runtime_error("finite_difference_gradient: non-finite forward value");
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

/// Runs one registered check at one seed. Relative error per coordinate is
/// |g_fd - g_an| / max(1, |g_fd|); kink coordinates are excluded but counted.
inline FdReport finite_difference_check(const DifferentiableCheck& check, std::uint64_t seed,
                                        double step = kFdDefaultStep, double tolerance = kFdDefaultTolerance) {
  Rng rng(seed);
  std::vector<double> x = check.make_input(rng);
  const double f0 = check.scalar(x);
  if (!std::isfinite(f0)) throw std::runtime_error("finite_difference_check: non-finite forward value");
  std::vector<double> g_an = check.analytic(x);
  if (g_an.size() != x.size()) throw std::logic_error("finite_difference_check: gradient size mismatch");

  FdReport rep;
  rep.name = check.name;
  rep.seed = seed;
  rep.step = step;
  rep.total = int(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    double keep = x[i];
    x[i] = keep + step;
    double fp = check.scalar(x);
    x[i] = keep - step;
    double fm = check.scalar(x);
    x[i] = keep;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::runtime_error("finite_difference_check: non-finite forward value");
    double fwd = (fp - f0) / step;
    double bwd = (f0 - fm) / step;
    if (std::fabs(fwd - bwd) > kFdKinkThreshold * std::max({1.0, std::fabs(fwd), std::fabs(bwd)})) {
      ++rep.excluded;
      continue;
    }
    double g_fd = (fp - fm) / (2.0 * step);
    double abs_err = std::fabs(g_fd - g_an[i]);
    double rel_err = abs_err / std::max(1.0, std::fabs(g_fd));
    rep.max_abs_error = std::max(rep.max_abs_error, abs_err);
    if (rel_err > rep.max_rel_error) {
      rep.max_rel_error = rel_err;
      rep.worst_coordinate = int(i);
    }
  }
  rep.passed = rep.max_rel_error <= tolerance && rep.excluded_pct() <= kFdMaxExcludedPct;
  return rep;
}

inline std::vector<FdReport> check_all(const std::vector<DifferentiableCheck>& registry,
                                       const std::vector<std::uint64_t>& seeds,
                                       double tolerance = kFdDefaultTolerance) {
  std::vector<FdReport> reports;
  reports.reserve(registry.size() * seeds.size());
  for (const auto& check : registry)
    for (auto seed : seeds) reports.push_back(finite_difference_check(check, seed, kFdDefaultStep, tolerance));
  return reports;
}

inline bool all_passed(const std::vector<FdReport>& reports) {
  for (const auto& r : reports)
    if (!r.passed) return false;
  return true;
}

}  // namespace dtts
