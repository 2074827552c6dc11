// Copyright 2026 the dtts authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#include <cmath>

#include "doctest.h"
#include "dtts/losses.hpp"

using namespace dtts;

TEST_CASE("l1 spectrogram loss: frozen arithmetic and sign gradient") {
  Mat a(2, 2), b(2, 2);
  for (auto& v : a.v) v = 0.5;
  for (auto& v : b.v) v = 0.0;
  Mat g;
  CHECK(l1_spectrogram_loss(a, b, &g) == doctest::Approx(1.0));  // (1/2) * 4 * 0.5
  for (double v : g.v) CHECK(v == doctest::Approx(0.5));         // +1/F where gen > gt
  CHECK(l1_spectrogram_loss(a, a) == 0.0);
  CHECK(l1_spectrogram_loss(a, b) == doctest::Approx(l1_spectrogram_loss(b, a)));
  Mat c(2, 3);
  CHECK_THROWS_AS(l1_spectrogram_loss(a, c), std::invalid_argument);
}

TEST_CASE("l1 triangle property on random triples") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    Mat a(3, 4), b(3, 4), c(3, 4);
    for (auto& v : a.v) v = rng.uniform(-2.0, 2.0);
    for (auto& v : b.v) v = rng.uniform(-2.0, 2.0);
    for (auto& v : c.v) v = rng.uniform(-2.0, 2.0);
    CHECK(l1_spectrogram_loss(a, c) <= l1_spectrogram_loss(a, b) + l1_spectrogram_loss(b, c) + 1e-12);
  }
}

TEST_CASE("length loss: exact match, frozen value, shared gradient") {
  CHECK(length_loss({2.0, 3.0, 5.0}, 10.0) == 0.0);
  std::vector<double> g;
  CHECK(length_loss({6.0, 6.0}, 10.0, &g) == doctest::Approx(2.0));  // 0.5 * (10-12)^2
  for (double v : g) CHECK(v == doctest::Approx(2.0));               // sum - L = +2 for every token
}

TEST_CASE("hinge discriminator loss") {
  CHECK(hinge_discriminator_loss(2.0, -2.0) == 0.0);
  CHECK(hinge_discriminator_loss(0.0, 0.0) == doctest::Approx(2.0));
  CHECK(hinge_discriminator_loss(0.5, -0.5) == doctest::Approx(1.0));
  CHECK(hinge_discriminator_loss(std::vector<double>{2.0, 0.0}, std::vector<double>{-2.0, 0.0}) ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(hinge_discriminator_loss(std::vector<double>{}, std::vector<double>{}), std::domain_error);
}

TEST_CASE("adversarial generator loss is the negated mean") {
  std::vector<double> g;
  CHECK(adv_generator_loss({1.0}, &g) == doctest::Approx(-1.0));
  CHECK(g[0] == doctest::Approx(-1.0));
  CHECK(adv_generator_loss({1.0, -1.0}, &g) == doctest::Approx(0.0));
  for (double v : g) CHECK(v == doctest::Approx(-0.5));
  CHECK_THROWS_AS(adv_generator_loss({}), std::domain_error);
}

TEST_CASE("total generator loss identity holds bit for bit") {
  auto b = total_generator_loss(1.0, 2.0, 3.0, LossWeights{});
  CHECK(b.total == 1.0 + 1.0 * 2.0 + 0.1 * 3.0);
  CHECK(b.total == doctest::Approx(3.3));
  auto zero = total_generator_loss(0.0, 0.0, 0.0, LossWeights{});
  CHECK(zero.total == 0.0);
  LossWeights off;
  off.lambda_pred = 0.0;
  off.lambda_length = 0.0;
  CHECK(total_generator_loss(0.7, 9.0, 9.0, off).total == 0.7);
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    double adv = rng.uniform(-2, 2), pred = rng.uniform(0, 2), len = rng.uniform(0, 2);
    LossWeights w;
    w.lambda_pred = rng.uniform(0, 2);
    w.lambda_length = rng.uniform(0, 2);
    auto bd = total_generator_loss(adv, pred, len, w);
    CHECK(bd.total == adv + w.lambda_pred * pred + w.lambda_length * len);  // exact identity
  }
}
