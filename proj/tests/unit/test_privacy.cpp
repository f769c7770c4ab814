// Copyright 2026 The margsyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>

#include "margsyn/error.hpp"
#include "margsyn/privacy.hpp"
#include "support.hpp"

using namespace margsyn;

TEST_CASE("gaussian sigma formula") {
  CHECK(gaussian_sigma(1.0, 1e-5, 1.0) == doctest::Approx(std::sqrt(2.0 * std::log(1.25e5))));
  CHECK(gaussian_sigma(0.5, 1e-5, 2.0) == doctest::Approx(4.0 * gaussian_sigma(1.0, 1e-5, 1.0)));
  CHECK_THROWS_AS(gaussian_sigma(0.0, 1e-5, 1.0), InvalidArgument);
  CHECK_THROWS_AS(gaussian_sigma(1.0, 1.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(gaussian_sigma(1.0, 1e-5, 0.0), InvalidArgument);
}

TEST_CASE("sensitivity modes") {
  // m=3, d=2: 4 + 6 = 10 queries.
  CHECK(marginal_set_sensitivity(3, 2, SensitivityMode::exact) == doctest::Approx(std::sqrt(20.0)));
  CHECK(marginal_set_sensitivity(3, 2, SensitivityMode::paper_bound) == doctest::Approx(std::sqrt(18.0)));
  CHECK(sensitivity_mode_from_string("exact") == SensitivityMode::exact);
  CHECK(sensitivity_mode_from_string("paper") == SensitivityMode::paper_bound);
  CHECK_THROWS_AS(sensitivity_mode_from_string("other"), InvalidArgument);
}

TEST_CASE("epsilon range guard") {
  PrivacyParams p;
  p.epsilon = 2.0;
  CHECK_THROWS_AS(calibrate(3, 2, p, SensitivityMode::exact), InvalidArgument);
  p.allow_large_epsilon = true;
  const NoiseCalibration c = calibrate(3, 2, p, SensitivityMode::exact);
  CHECK(c.query_count == 10);
  CHECK(c.sigma == doctest::Approx(std::sqrt(20.0) * std::sqrt(2.0 * std::log(1.25e5)) / 2.0));
}

TEST_CASE("noise has the requested scale") {
  const Schema s = testing::binary_schema(1);
  const Dataset ds = testing::random_dataset(s, 10, 1);
  Marginal h = compute_marginal(ds, MarginalQuery({0, 1}));
  h.counts.assign(20000, 0.0);
  h.shape = {20000};
  Rng rng(4);
  const Marginal noisy = add_noise(h, 3.0, rng);
  CHECK_FALSE(noisy.exact);
  double sum = 0.0, sq = 0.0;
  for (double v : noisy.counts) {
    sum += v;
    sq += v * v;
  }
  const double mean = sum / 20000.0;
  CHECK(std::abs(mean) < 0.1);
  CHECK(std::sqrt(sq / 20000.0 - mean * mean) == doctest::Approx(3.0).epsilon(0.03));
  Rng zero(4);
  CHECK(add_noise(h, 0.0, zero).counts == h.counts);
}

TEST_CASE("l1 deviation bound closed form") {
  const double sigma = 2.0;
  const double expect = 2.0 * 4.0 * std::sqrt(2.0 * (std::log(2.0) * 4.0 + 2.0 * std::log(6.0))) * sigma;
  CHECK(l1_deviation_bound(sigma, 2, 3, 2, 3.0) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(l1_deviation_bound(0.0, 2, 3, 2, 3.0) == 0.0);
  CHECK_THROWS_AS(l1_deviation_bound(-1.0, 2, 3, 2, 3.0), InvalidArgument);
}

TEST_CASE("l1 deviation bound covers gaussian noise") {
  // Empirical check of the tail claim: the l1 norm of l^d-dimensional
  // noise exceeds the radius far less often than 2^-lambda.
  const std::size_t d = 2, m = 3, l = 2;
  const double sigma = 1.0, lambda = 1.0;
  const double radius = l1_deviation_bound(sigma, d, m, l, lambda);
  const std::size_t queries = query_count(m, d);
  Rng rng(12);
  int violations = 0;
  for (int t = 0; t < 2000; ++t) {
    double worst = 0.0;
    for (std::size_t q = 0; q < queries; ++q) {
      double l1 = 0.0;
      for (int c = 0; c < 4; ++c) l1 += std::abs(rng.gaussian(sigma));
      worst = std::max(worst, l1);
    }
    violations += worst > radius;
  }
  CHECK(violations <= 1000);
}
