// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#include <cmath>

#include "doctest.h"
#include "dtts/signal.hpp"

using namespace dtts;

TEST_CASE("mu-law encode fixed points") {
  auto y = mu_law_encode({0.0, 1.0, -1.0});
  CHECK(y[0] == 0.0);
  CHECK(y[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(y[2] == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("mu-law decode fixed points") {
  auto x = mu_law_decode({1.0, 0.5, 0.0, -1.0});
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-15));
  // 256^0.5 = 16 exactly, so decode(0.5) = 15/255 = 1/17
  CHECK(x[1] == doctest::Approx(1.0 / 17.0).epsilon(1e-14));
  CHECK(x[2] == 0.0);
  CHECK(x[3] == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("mu-law roundtrip within 1e-12 on 1000 uniform points") {
  std::vector<double> x(1000);
  for (int i = 0; i < 1000; ++i) x[size_t(i)] = -1.0 + 2.0 * i / 999.0;
  auto t = mu_law_encode(x);
  auto back = mu_law_decode(t);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) worst = std::max(worst, std::fabs(back[size_t(i)] - x[size_t(i)]));
  CHECK(worst <= 1e-12);
  // and the encode side of the roundtrip
  auto t2 = mu_law_encode(back);
  worst = 0.0;
  for (int i = 0; i < 1000; ++i) worst = std::max(worst, std::fabs(t2[size_t(i)] - t[size_t(i)]));
  CHECK(worst <= 1e-12);
}

TEST_CASE("mu-law encode is odd and strictly monotone") {
  Rng rng(7);
  std::vector<double> xs(200);
  for (auto& v : xs) v = rng.uniform(-1.0, 1.0);
  auto enc = mu_law_encode(xs);
  std::vector<double> neg(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) neg[i] = -xs[i];
  auto enc_neg = mu_law_encode(neg);
  for (size_t i = 0; i < xs.size(); ++i) CHECK(enc_neg[i] == doctest::Approx(-enc[i]).epsilon(1e-15));
  std::vector<double> grid(101);
  for (int i = 0; i <= 100; ++i) grid[size_t(i)] = -1.0 + 0.02 * i;
  auto g = mu_law_encode(grid);
  for (size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
}

TEST_CASE("mu-law rejects out-of-range samples naming the index") {
  std::vector<double> bad = {0.0, 1.5};
  CHECK_THROWS_WITH_AS(mu_law_encode(bad), doctest::Contains("sample 1"), std::domain_error);
  CHECK_THROWS_AS(mu_law_decode({-2.0}), std::domain_error);
}

TEST_CASE("jitter: zero max is identity, length is preserved") {
  Rng rng(3);
  std::vector<double> w(100);
  for (auto& v : w) v = rng.uniform(-1.0, 1.0);
  auto same = apply_jitter(w, 0, rng);
  CHECK(same == w);
  for (int trial = 0; trial < 10; ++trial) {
    auto out = apply_jitter(w, 60, rng);
    CHECK(out.size() == w.size());
  }
}

TEST_CASE("jitter: extreme shift matches the direct index oracle") {
  // find a seed whose first draw lands on start = 2*max_jitter (shift +60)
  const int max_jitter = 60;
  std::vector<double> w(200);
  for (size_t i = 0; i < w.size(); ++i) w[i] = std::sin(0.1 * double(i)) + 0.01 * double(i);
  std::uint64_t seed = 0;
  bool found = false;
  for (; seed < 20000; ++seed) {
    Rng probe(seed);
    if (probe.uniform_int(0, 2 * max_jitter) == 2 * max_jitter) {
      found = true;
      break;
    }
  }
  REQUIRE(found);
  Rng rng(seed);
  auto out = apply_jitter(w, max_jitter, rng);
  // start = 2*max_jitter reads padded[i + 120] = w[i + 60]: a shift of -60;
  // the mirrored extreme (start = 0) gives out[i] = w[i - 60] with zero fill.
  for (size_t i = 0; i < w.size(); ++i) {
    double expect = i + max_jitter < w.size() ? w[i + max_jitter] : 0.0;
    CHECK(out[i] == doctest::Approx(expect));
  }
  for (seed = 0; seed < 20000; ++seed) {
    Rng probe(seed);
    if (probe.uniform_int(0, 2 * max_jitter) == 0) break;
  }
  Rng rng2(seed);
  auto out2 = apply_jitter(w, max_jitter, rng2);
  for (size_t i = 0; i < w.size(); ++i) {
    double expect = long(i) - max_jitter >= 0 ? w[i - max_jitter] : 0.0;
    CHECK(out2[i] == doctest::Approx(expect));
  }
}

TEST_CASE("extract_window basics and silence post-padding") {
  std::vector<double> w(96000);
  for (size_t i = 0; i < w.size(); ++i) w[i] = double(i % 97) / 97.0;
  auto all = extract_window(w, {0, long(w.size())});
  CHECK(all == w);
  auto second = extract_window(w, {48000, 48000});
  CHECK(second[0] == w[48000]);
  CHECK(second.size() == 48000);

  std::vector<double> clip(24000, 0.25);
  auto padded = post_pad(clip, 48000);
  auto window = extract_window(padded, {0, 48000});
  CHECK(window[0] == 0.25);
  CHECK(window[23999] == 0.25);
  CHECK(window[24000] == 0.0);
  CHECK(window[47999] == 0.0);

  CHECK_THROWS_AS(extract_window(clip, {1, 24000}), std::out_of_range);
}

TEST_CASE("post-padding plus windowing never reads out of bounds") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    long len = rng.uniform_int(1, 60000);
    std::vector<double> clip(size_t(len), 0.5);
    auto padded = post_pad(clip, 48000);
    long max_off = long(padded.size()) - 48000;
    long off = max_off > 0 ? rng.uniform_int(0, max_off) : 0;
    auto window = extract_window(padded, {off, 48000});
    CHECK(window.size() == 48000);
  }
}

TEST_CASE("rwd windows: sizes, bounds, and whole-window case") {
  Rng rng(5);
  std::vector<double> w(48000, 0.0);
  auto windows = sample_rwd_windows(w, default_rwd_sizes(), rng);
  REQUIRE(windows.size() == 5);
  int expected[5] = {240, 480, 960, 1920, 3600};
  for (int i = 0; i < 5; ++i) {
    CHECK(int(windows[size_t(i)].samples.size()) == expected[i]);
    CHECK(windows[size_t(i)].start >= 0);
    CHECK(windows[size_t(i)].start + expected[i] <= 48000);
  }
  auto whole = sample_rwd_windows(w, {48000}, rng);
  CHECK(whole[0].start == 0);
  CHECK(whole[0].samples.size() == w.size());
  CHECK_THROWS_AS(sample_rwd_windows(w, {48001}, rng), std::out_of_range);
}

TEST_CASE("rwd start distribution is uniform (5-sigma sanity over 10 bins)") {
  Rng rng(2026);
  std::vector<double> w(48000, 0.0);
  const int draws = 10000;
  const long span = 48000 - 240 + 1;  // valid starts
  int bins[10] = {0};
  for (int i = 0; i < draws; ++i) {
    auto windows = sample_rwd_windows(w, {240}, rng);
    long b = windows[0].start * 10 / span;
    ++bins[b];
  }
  const double expect = draws / 10.0;
  const double sigma = std::sqrt(draws * 0.1 * 0.9);
  for (int b = 0; b < 10; ++b) CHECK(std::fabs(bins[b] - expect) <= 5.0 * sigma);
}
