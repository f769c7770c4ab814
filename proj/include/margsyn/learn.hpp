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

#ifndef MARGSYN_LEARN_HPP_
#define MARGSYN_LEARN_HPP_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "margsyn/dataset.hpp"

namespace margsyn {

enum class LossKind { logistic, phi_gamma, piecewise_linear };

/// Margin loss t -> phi(t), t = <w,x> y.
struct LossSpec {
  LossKind kind = LossKind::logistic;
  double gamma = 0.5;                               // phi_gamma only
  std::vector<std::pair<double, double>> knots;     // piecewise_linear: (t, value), t increasing
  double lipschitz_K = 1.0;
  double value_at_zero = 0.0;

  static LossSpec logistic();
  /// gamma * phi_gamma, defined on [-1, 1].
  static LossSpec phi_gamma(double gamma);
  /// Linear interpolation between knots, linear extrapolation outside.
  static LossSpec piecewise_linear(std::vector<std::pair<double, double>> knots);

  void validate() const;
  std::string describe() const;
};

double loss_value(const LossSpec& spec, double t);
/// Derivative; at a kink of a piecewise-linear table, the right slope.
double loss_derivative(const LossSpec& spec, double t);

constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct LinearModel {
  std::vector<double> w;
  double tau = kUnbounded;
  LossSpec loss;
};

struct Prediction {
  int label = 1;  // -1 or +1
  double score = 0.0;
};

Prediction predict(const LinearModel& model, std::span<const double> x);

double empirical_risk(const LossSpec& spec, std::span<const double> w, const EncodedData& data);
std::vector<double> risk_gradient(const LossSpec& spec, std::span<const double> w, const EncodedData& data);
double empirical_risk(const LinearModel& model, const EncodedData& data);

/// w * min(1, tau / |w|).
void project_to_ball(std::vector<double>& w, double tau);

struct TrainConfig {
  std::size_t max_iters = 5000;
  double step_size = 1.0;   // initial step; backtracking halves it
  double decay = 1.0;       // per-iteration factor on the step ceiling
  double tolerance = 1e-12;
  std::uint64_t seed = 0;   // solver is deterministic; kept for provenance
  void validate() const;
};

struct TrainResult {
  LinearModel model;
  double objective = 0.0;
  std::size_t iterations = 0;
  std::vector<double> history;  // objective after each accepted step, index 0 = start
};

TrainResult train_projected(const EncodedData& data, const LossSpec& spec, double tau, const TrainConfig& cfg = {});
TrainResult train_projected(const Dataset& ds, const LossSpec& spec, double tau, const TrainConfig& cfg = {});

struct DpSgdConfig {
  std::size_t T = 100;
  std::size_t B = 32;
  double eta = 0.1;
  double C = 1.0;
  double L = 1.0;
  double epsilon = 1.0;
  double delta = 1e-5;
  bool zero_noise = false;         // test hook: skip the Gaussian draw
  bool record_trajectory = false;
  void validate(std::size_t n) const;
};

/// sigma = sqrt(16 L^2 T ln(1/delta) / (n^2 eps^2)).
double dp_sgd_sigma(double L, std::size_t T, std::size_t n, double epsilon, double delta);

/// Scales g to norm at most C.
void clip_gradient(std::span<double> g, double C);

struct SgdResult {
  LinearModel model;
  double sigma = 0.0;
  std::vector<std::vector<double>> trajectory;  // w after each step, if recorded
};

SgdResult dp_sgd(const EncodedData& data, const LossSpec& spec, const DpSgdConfig& cfg, std::uint64_t seed);

/// Minibatch SGD without clipping or noise; same batch stream as dp_sgd.
SgdResult plain_sgd(const EncodedData& data, const LossSpec& spec, std::size_t T, std::size_t B, double eta,
                    std::uint64_t seed, bool record_trajectory = false);

std::string model_json(const LinearModel& model, std::uint64_t schema_fingerprint);
/// Throws ParseError on malformed input and InvalidArgument on a schema mismatch.
LinearModel parse_model_json(std::string_view text, std::uint64_t expected_fingerprint);
void save_model(const std::filesystem::path& path, const LinearModel& model, std::uint64_t schema_fingerprint);
LinearModel load_model(const std::filesystem::path& path, std::uint64_t expected_fingerprint);

std::string loss_to_string(LossKind kind);
LossSpec loss_from_json_text(std::string_view text);
std::string loss_to_json_text(const LossSpec& spec);

}  // namespace margsyn

#endif  // MARGSYN_LEARN_HPP_
