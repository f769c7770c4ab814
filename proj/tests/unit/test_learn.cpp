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
#include <filesystem>

#include "margsyn/error.hpp"
#include "margsyn/learn.hpp"
#include "support.hpp"

using namespace margsyn;

namespace {

EncodedData random_encoded(std::size_t rows, std::size_t features, Rng& rng) {
  EncodedData e;
  e.rows = rows;
  e.features = features;
  for (std::size_t i = 0; i < rows * features; ++i) e.x.push_back(2.0 * rng.uniform() - 1.0);
  for (std::size_t i = 0; i < rows; ++i) e.y.push_back(rng.uniform() < 0.5 ? -1.0 : 1.0);
  return e;
}

// Risk computed from scratch with the textbook logistic formula.
double logistic_risk_direct(const std::vector<double>& w, const EncodedData& d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.rows; ++i) {
    double m = 0.0;
    for (std::size_t k = 0; k < d.features; ++k) m += w[k] * d.x[i * d.features + k];
    s += std::log(1.0 + std::exp(-d.y[i] * m));
  }
  return s / static_cast<double>(d.rows);
}

}  // namespace

TEST_CASE("logistic loss values") {
  const LossSpec s = LossSpec::logistic();
  CHECK(loss_value(s, 0.0) == doctest::Approx(std::log(2.0)));
  CHECK(s.value_at_zero == doctest::Approx(std::log(2.0)));
  CHECK(s.lipschitz_K == 1.0);
  CHECK(loss_value(s, 800.0) >= 0.0);
  CHECK(loss_value(s, -800.0) == doctest::Approx(800.0));
  CHECK(loss_derivative(s, 0.0) == doctest::Approx(-0.5));
  CHECK(std::isfinite(loss_derivative(s, -800.0)));
}

TEST_CASE("phi_gamma closed form") {
  for (double g : {0.1, 0.5, 0.9}) {
    const LossSpec s = LossSpec::phi_gamma(g);
    CHECK(loss_value(s, 0.0) == doctest::Approx(9.0 * g / 8.0));
    CHECK(s.value_at_zero == doctest::Approx(9.0 * g / 8.0));
    CHECK(loss_value(s, g) == doctest::Approx(g * (1.0 - g) * (1.0 - g) / 8.0));
    CHECK(loss_value(s, 1.0) == doctest::Approx(0.0));
    CHECK(loss_value(s, -1.0) == doctest::Approx(1.5 * g + 2.0));
    // Steepest slope sits at t = -1.
    CHECK(std::abs(loss_derivative(s, -1.0)) == doctest::Approx(2.0 + g / 2.0));
    CHECK(s.lipschitz_K == doctest::Approx(2.0 + g / 2.0));
    for (int i = 0; i <= 200; ++i) {
      const double t = -1.0 + i / 100.0;
      CHECK(std::abs(loss_derivative(s, t)) <= s.lipschitz_K + 1e-12);
    }
  }
  CHECK_THROWS_AS(LossSpec::phi_gamma(0.0), InvalidArgument);
  CHECK_THROWS_AS(LossSpec::phi_gamma(1.0), InvalidArgument);
  CHECK_THROWS_AS(loss_value(LossSpec::phi_gamma(0.5), 1.5), DomainError);
}

TEST_CASE("loss derivatives match finite differences") {
  const LossSpec table = LossSpec::piecewise_linear({{-1.0, 2.0}, {0.0, 1.0}, {1.0, 0.0}, {2.0, 0.0}});
  for (const LossSpec& s : {LossSpec::logistic(), LossSpec::phi_gamma(0.3), table}) {
    for (double t : {-0.73, -0.2, 0.05, 0.61, 0.97}) {
      const double h = 1e-6;
      const double fd = (loss_value(s, t + h) - loss_value(s, t - h)) / (2 * h);
      CHECK(loss_derivative(s, t) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("piecewise linear table") {
  const LossSpec s = LossSpec::piecewise_linear({{-1.0, 3.0}, {0.0, 1.0}, {2.0, 0.0}});
  CHECK(s.lipschitz_K == 2.0);
  CHECK(loss_value(s, -2.0) == doctest::Approx(5.0));  // extrapolated
  CHECK(loss_value(s, 1.0) == doctest::Approx(0.5));
  CHECK(loss_derivative(s, 0.0) == doctest::Approx(-0.5));  // right slope at the kink
  CHECK_THROWS_AS(LossSpec::piecewise_linear({{0.0, 1.0}}), InvalidArgument);
  CHECK_THROWS_AS(LossSpec::piecewise_linear({{1.0, 1.0}, {0.0, 1.0}}), InvalidArgument);
}

TEST_CASE("risk and gradient") {
  Rng rng(5);
  const EncodedData d = random_encoded(40, 3, rng);
  const std::vector<double> w = {0.3, -1.2, 0.7};
  CHECK(empirical_risk(LossSpec::logistic(), w, d) == doctest::Approx(logistic_risk_direct(w, d)).epsilon(1e-12));
  const auto g = risk_gradient(LossSpec::logistic(), w, d);
  for (std::size_t k = 0; k < 3; ++k) {
    auto wp = w, wm = w;
    wp[k] += 1e-6;
    wm[k] -= 1e-6;
    const double fd = (logistic_risk_direct(wp, d) - logistic_risk_direct(wm, d)) / 2e-6;
    CHECK(g[k] == doctest::Approx(fd).epsilon(1e-6));
  }
  const std::vector<double> bad = {1.0};
  CHECK_THROWS_AS(empirical_risk(LossSpec::logistic(), bad, d), InvalidArgument);
}

TEST_CASE("projection and prediction") {
  std::vector<double> w = {3.0, 4.0};
  project_to_ball(w, 1.0);
  CHECK(w[0] == doctest::Approx(0.6));
  CHECK(w[1] == doctest::Approx(0.8));
  project_to_ball(w, kUnbounded);
  CHECK(w[0] == doctest::Approx(0.6));
  const LinearModel m{{1.0, -1.0}, kUnbounded, LossSpec::logistic()};
  const std::vector<double> x0 = {0.5, 0.5}, x1 = {-1.0, 0.0}, bad = {1.0};
  CHECK(predict(m, x0).label == 1);  // ties go to +1
  CHECK(predict(m, x1).label == -1);
  CHECK_THROWS_AS(predict(m, bad), InvalidArgument);
}

TEST_CASE("constrained training matches a one-dimensional grid search") {
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const EncodedData d = random_encoded(30, 1, rng);
    const double tau = 0.25 + 2.0 * rng.uniform();
    const TrainResult r = train_projected(d, LossSpec::logistic(), tau);
    double best = INFINITY;
    for (double w = -tau; w <= tau + 1e-12; w += 1e-4) best = std::min(best, logistic_risk_direct({w}, d));
    CHECK(r.objective <= best + 1e-4);
    CHECK(r.objective >= best - 1e-4);
    CHECK(std::abs(r.model.w[0]) <= tau + 1e-12);
  }
}

TEST_CASE("training history is monotone and tau zero is trivial") {
  Rng rng(9);
  const EncodedData d = random_encoded(50, 3, rng);
  const TrainResult r = train_projected(d, LossSpec::logistic(), 1.0);
  for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
  const TrainResult z = train_projected(d, LossSpec::logistic(), 0.0);
  CHECK(z.model.w == std::vector<double>(3, 0.0));
  CHECK(z.objective == doctest::Approx(std::log(2.0)));
  TrainConfig bad;
  bad.step_size = 0.0;
  CHECK_THROWS_AS(train_projected(d, LossSpec::logistic(), 1.0, bad), InvalidArgument);
  CHECK_THROWS_AS(train_projected(d, LossSpec::logistic(), -1.0), InvalidArgument);
}

TEST_CASE("dp-sgd noise scale") {
  const double s = dp_sgd_sigma(1.0, 100, 1000, 1.0, 1e-5);
  CHECK(s * s == doctest::Approx(16.0 * 100.0 * std::log(1e5) / 1e6).epsilon(1e-14));
  CHECK_THROWS_AS(dp_sgd_sigma(1.0, 100, 0, 1.0, 1e-5), InvalidArgument);
  CHECK_THROWS_AS(dp_sgd_sigma(1.0, 100, 10, 0.0, 1e-5), InvalidArgument);
}

TEST_CASE("gradient clipping") {
  std::vector<double> g = {3.0, 4.0};
  clip_gradient(g, 1.0);
  CHECK(g[0] == doctest::Approx(0.6));
  CHECK(g[1] == doctest::Approx(0.8));
  std::vector<double> small = {0.1, 0.2};
  clip_gradient(small, 1.0);
  CHECK(small[0] == 0.1);
  CHECK(small[1] == 0.2);
}

TEST_CASE("dp-sgd zero-noise hook and validation") {
  Rng rng(10);
  const EncodedData d = random_encoded(64, 3, rng);
  DpSgdConfig cfg;
  cfg.T = 25;
  cfg.B = 8;
  cfg.C = 1e9;
  cfg.zero_noise = true;
  cfg.record_trajectory = true;
  const SgdResult a = dp_sgd(d, LossSpec::logistic(), cfg, 77);
  const SgdResult b = plain_sgd(d, LossSpec::logistic(), 25, 8, cfg.eta, 77, true);
  CHECK(a.trajectory == b.trajectory);
  cfg.zero_noise = false;
  const SgdResult noisy = dp_sgd(d, LossSpec::logistic(), cfg, 77);
  CHECK(noisy.model.w != a.model.w);
  CHECK(noisy.sigma == doctest::Approx(dp_sgd_sigma(1.0, 25, 64, 1.0, 1e-5)));
  cfg.B = 65;
  CHECK_THROWS_AS(dp_sgd(d, LossSpec::logistic(), cfg, 1), InvalidArgument);
}

TEST_CASE("model files round trip") {
  const Schema s = testing::binary_schema(2);
  const LinearModel m{{0.25, -1.5}, 0.75, LossSpec::phi_gamma(0.4)};
  const auto path = std::filesystem::temp_directory_path() / "margsyn_model_test.json";
  save_model(path, m, s.fingerprint());
  const LinearModel back = load_model(path, s.fingerprint());
  CHECK(back.w == m.w);
  CHECK(back.tau == m.tau);
  CHECK(back.loss.kind == LossKind::phi_gamma);
  CHECK(back.loss.gamma == doctest::Approx(0.4));
  CHECK_THROWS_AS(load_model(path, s.fingerprint() + 1), InvalidArgument);
  const LinearModel inf{{1.0, 2.0}, kUnbounded, LossSpec::logistic()};
  CHECK(std::isinf(parse_model_json(model_json(inf, 7), 7).tau));
  CHECK_THROWS_AS(parse_model_json("{", 7), ParseError);
  CHECK_THROWS_AS(parse_model_json(R"({"format":"other"})", 7), ParseError);
  std::filesystem::remove(path);
}
