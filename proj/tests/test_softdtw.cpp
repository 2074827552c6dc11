// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "dtts/losses.hpp"
#include "dtts/softdtw.hpp"
#include "dtts/softdtw_oracle.hpp"

using namespace dtts;

namespace {
Mat random_spec(Rng& rng, int t, int f, double lo = 0.0, double hi = 2.0) {
  Mat m(t, f);
  for (auto& v : m.v) v = rng.uniform(lo, hi);
  return m;
}
}  // namespace

TEST_CASE("soft_minimum: frozen values") {
  CHECK(std::fabs(soft_minimum({0.0, 1.0}, 0.01)) < 1e-40);  // dominated term
  CHECK(soft_minimum({0.0, 0.0}, 0.01) == doctest::Approx(-0.01 * std::log(2.0)).epsilon(1e-12));
  CHECK(soft_minimum({3.25}, 0.01) == 3.25);  // single element is exact
  CHECK_THROWS_AS(soft_minimum({}, 0.01), std::domain_error);
  CHECK_THROWS_AS(soft_minimum({1.0}, 0.0), std::invalid_argument);
  // never exceeds the hard minimum
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> vals(5);
    for (auto& v : vals) v = rng.uniform(-3.0, 3.0);
    double lo = *std::min_element(vals.begin(), vals.end());
    CHECK(soft_minimum(vals, 0.1) <= lo + 1e-12);
  }
}

TEST_CASE("frame cost matrix: diagonal zeros, direct arithmetic, symmetry") {
  Mat a(2, 1), b(2, 1);
  a(0, 0) = 0.0;
  a(1, 0) = 1.0;
  b(0, 0) = 0.0;
  b(1, 0) = 0.0;
  Mat c = frame_cost_matrix(a, b);
  CHECK(c(0, 0) == 0.0);
  CHECK(c(0, 1) == 0.0);
  CHECK(c(1, 0) == 1.0);
  CHECK(c(1, 1) == 1.0);

  Rng rng(2);
  Mat x = random_spec(rng, 4, 3), y = random_spec(rng, 4, 3);
  Mat cxy = frame_cost_matrix(x, y), cyx = frame_cost_matrix(y, x);
  for (int i = 0; i < 4; ++i) {
    CHECK(frame_cost_matrix(x, x)(i, i) == 0.0);
    for (int j = 0; j < 4; ++j) CHECK(cxy(i, j) == doctest::Approx(cyx(j, i)).epsilon(1e-15));
  }
  Mat bad(4, 2);
  CHECK_THROWS_AS(frame_cost_matrix(x, bad), std::invalid_argument);
}

TEST_CASE("skew_matrix: listing semantics") {
  Mat x(2, 2);
  x(0, 0) = 1.0;  // a
  x(0, 1) = 2.0;  // b
  x(1, 0) = 3.0;  // c
  x(1, 1) = 4.0;  // d
  Mat y = skew_matrix(x);
  REQUIRE(y.rows == 3);
  REQUIRE(y.cols == 2);
  // [[a,b],[c,b],[c,d]]
  CHECK(y(0, 0) == 1.0);
  CHECK(y(0, 1) == 2.0);
  CHECK(y(1, 0) == 3.0);
  CHECK(y(1, 1) == 2.0);
  CHECK(y(2, 0) == 3.0);
  CHECK(y(2, 1) == 4.0);

  Mat one(1, 1);
  one(0, 0) = 7.0;
  Mat yo = skew_matrix(one);
  REQUIRE(yo.rows == 1);
  CHECK(yo(0, 0) == 7.0);

  Rng rng(3);
  Mat r = random_spec(rng, 3, 2);
  Mat yr = skew_matrix(r);
  for (int i = 0; i < yr.rows; ++i)
    for (int j = 0; j < yr.cols; ++j) {
      int src = std::clamp(i - j, 0, r.rows - 1);
      CHECK(yr(i, j) == r(src, j));
    }
}

TEST_CASE("soft dtw: identical inputs cost ~0; T=1 is the plain L1 cell") {
  Rng rng(4);
  for (int t : {1, 2, 5, 17, 47}) {
    Mat s = random_spec(rng, t, 3);
    auto r = soft_dtw(s, s);
    CHECK(std::fabs(r.value) <= 1e-8);
  }
  Mat a = random_spec(rng, 1, 4), b = random_spec(rng, 1, 4);
  double expect = 0.0;
  for (int f = 0; f < 4; ++f) expect += std::fabs(a(0, f) - b(0, f)) / 4.0;
  CHECK(soft_dtw(a, b).value == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("the three-path example, enumerated by hand") {
  // F=1: S_gen=[0,1], S_gt=[0,0], w=1. Path costs: diag 1, via (1,2) 3, via (2,1) 4.
  Mat gen(2, 1), gt(2, 1);
  gen(0, 0) = 0.0;
  gen(1, 0) = 1.0;
  gt(0, 0) = 0.0;
  gt(1, 0) = 0.0;
  auto costs = oracle::all_path_costs(gen, gt, 1.0);
  REQUIRE(costs.size() == 3);
  std::sort(costs.begin(), costs.end());
  CHECK(costs[0] == doctest::Approx(1.0));
  CHECK(costs[1] == doctest::Approx(3.0));
  CHECK(costs[2] == doctest::Approx(4.0));

  auto soft = soft_dtw(gen, gt);
  CHECK(soft.value == doctest::Approx(1.0).epsilon(1e-9));  // dominated terms vanish at tau=0.01

  auto hard = hard_dtw(gen, gt);
  CHECK(hard.value == doctest::Approx(1.0));
  REQUIRE(hard.argmin_path.size() == 2);
  CHECK(hard.argmin_path[0] == std::pair<int, int>(1, 1));
  CHECK(hard.argmin_path[1] == std::pair<int, int>(2, 2));
}

TEST_CASE("path count equals the central Delannoy numbers") {
  long long expect[] = {1, 3, 13, 63, 321, 1683, 8989, 48639};
  for (int t = 1; t <= 8; ++t) CHECK(oracle::count_paths(t, t) == expect[t - 1]);
  Rng rng(5);
  Mat a = random_spec(rng, 2, 1), b = random_spec(rng, 2, 1);
  CHECK(oracle::all_path_costs(a, b, 1.0).size() == 3);
  Mat big(9, 1);
  CHECK_THROWS_AS(oracle::all_path_costs(big, big, 1.0), std::length_error);
}

TEST_CASE("DP equals the brute-force oracle within 1e-9 for T<=6") {
  Rng rng(6);
  for (int t = 2; t <= 6; ++t) {
    for (int trial = 0; trial < 100; ++trial) {
      Mat gen = random_spec(rng, t, 3), gt = random_spec(rng, t, 3);
      double dp = soft_dtw(gen, gt).value;
      double ref = oracle::brute_force_soft_dtw(gen, gt);
      CHECK(std::fabs(dp - ref) <= 1e-9);
      double hp = hard_dtw(gen, gt).value;
      double href = oracle::brute_force_hard_dtw(gen, gt);
      CHECK(hp == doctest::Approx(href).epsilon(1e-12));
    }
  }
}

TEST_CASE("rectangular inputs are supported") {
  Rng rng(7);
  Mat gen = random_spec(rng, 3, 2), gt = random_spec(rng, 5, 2);
  double dp = soft_dtw(gen, gt).value;
  double ref = oracle::brute_force_soft_dtw(gen, gt);
  CHECK(std::fabs(dp - ref) <= 1e-9);
  auto hard = hard_dtw(gen, gt);
  CHECK(hard.argmin_path.front() == std::pair<int, int>(1, 1));
  CHECK(hard.argmin_path.back() == std::pair<int, int>(3, 5));
}

TEST_CASE("sandwich: soft <= hard <= soft + tau log |P|") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    int t = int(rng.uniform_int(2, 6));
    Mat gen = random_spec(rng, t, 2), gt = random_spec(rng, t, 2);
    DtwConfig cfg;
    cfg.temperature = 0.05;
    double soft = soft_dtw(gen, gt, cfg).value;
    double hard = hard_dtw(gen, gt, cfg).value;
    double paths = double(oracle::count_paths(t, t));
    CHECK(soft <= hard + 1e-12);
    CHECK(hard <= soft + cfg.temperature * std::log(paths) + 1e-12);
  }
}

TEST_CASE("temperature limit: |soft(1e-4) - hard| <= tau ln(1683) at T=6") {
  Rng rng(9);
  const double bound = 1e-4 * std::log(1683.0);
  CHECK(bound <= 7.5e-4);
  for (int trial = 0; trial < 50; ++trial) {
    Mat gen = random_spec(rng, 6, 3), gt = random_spec(rng, 6, 3);
    DtwConfig cfg;
    cfg.temperature = 1e-4;
    CHECK(std::fabs(soft_dtw(gen, gt, cfg).value - hard_dtw(gen, gt, cfg).value) <= bound);
  }
}

TEST_CASE("value is non-increasing in the temperature") {
  Rng rng(10);
  Mat gen = random_spec(rng, 5, 2), gt = random_spec(rng, 5, 2);
  double prev = 1e300;
  for (double tau : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
    DtwConfig cfg;
    cfg.temperature = tau;
    double v = soft_dtw(gen, gt, cfg).value;
    CHECK(v <= prev + 1e-12);
    prev = v;
  }
}

TEST_CASE("path length bound T <= K_p <= 2T-1 and legal moves") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    int t = int(rng.uniform_int(1, 12));
    Mat gen = random_spec(rng, t, 2), gt = random_spec(rng, t, 2);
    auto r = hard_dtw(gen, gt);
    int k = r.path_length();
    CHECK(k >= t);
    CHECK(k <= 2 * t - 1);
    CHECK(r.argmin_path.front() == std::pair<int, int>(1, 1));
    CHECK(r.argmin_path.back() == std::pair<int, int>(t, t));
    for (size_t i = 1; i < r.argmin_path.size(); ++i) {
      int di = r.argmin_path[i].first - r.argmin_path[i - 1].first;
      int dj = r.argmin_path[i].second - r.argmin_path[i - 1].second;
      CHECK(di >= 0);
      CHECK(dj >= 0);
      CHECK(di + dj >= 1);
      CHECK(di <= 1);
      CHECK(dj <= 1);
    }
  }
}

TEST_CASE("w = 0 never exceeds the L1 frame loss; huge w matches it exactly") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    int t = int(rng.uniform_int(2, 6));
    Mat gen = random_spec(rng, t, 3), gt = random_spec(rng, t, 3);
    double l1 = l1_spectrogram_loss(gen, gt);
    DtwConfig free;
    free.warp_penalty = 0.0;
    CHECK(hard_dtw(gen, gt, free).value <= l1 + 1e-12);
    double max_cell = 0.0;
    Mat cost = frame_cost_matrix(gen, gt);
    for (double v : cost.v) max_cell = std::max(max_cell, v);
    DtwConfig rigid;
    rigid.warp_penalty = t * max_cell + 1.0;
    auto r = hard_dtw(gen, gt, rigid);
    CHECK(r.value == doctest::Approx(l1).epsilon(1e-12));
    CHECK(r.path_length() == t);  // pure diagonal
  }
}

TEST_CASE("Sakoe-Chiba band: full width reproduces the unbanded result exactly") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    int t = int(rng.uniform_int(2, 8));
    Mat gen = random_spec(rng, t, 2), gt = random_spec(rng, t, 2);
    DtwConfig banded;
    banded.band = t - 1;
    CHECK(soft_dtw(gen, gt, banded).value == soft_dtw(gen, gt).value);
    CHECK(hard_dtw(gen, gt, banded).value == hard_dtw(gen, gt).value);
    // a tight band only restricts paths, so it cannot lower the cost
    DtwConfig tight;
    tight.band = 0;
    CHECK(hard_dtw(gen, gt, tight).value >= hard_dtw(gen, gt).value - 1e-12);
  }
}

TEST_CASE("hard-DTW subgradient on identical inputs is zero along the diagonal") {
  Rng rng(14);
  Mat s = random_spec(rng, 5, 3);
  auto r = hard_dtw(s, s);
  CHECK(r.value == 0.0);
  CHECK(r.path_length() == 5);
  for (double g : r.grad_gen.v) CHECK(g == 0.0);
}

TEST_CASE("config validation") {
  Mat a(2, 2), b(2, 3);
  CHECK_THROWS_AS(soft_dtw(a, b), std::invalid_argument);
  Mat c(2, 2), d(2, 2);
  DtwConfig bad;
  bad.temperature = 0.0;
  CHECK_THROWS_AS(soft_dtw(c, d, bad), std::invalid_argument);
  DtwConfig negw;
  negw.warp_penalty = -1.0;
  CHECK_THROWS_AS(hard_dtw(c, d, negw), std::invalid_argument);
}
