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

#include "margsyn/privacy.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "margsyn/error.hpp"

namespace margsyn {

void PrivacyParams::validate() const {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (epsilon > 1.0 && !allow_large_epsilon)
    throw InvalidArgument("epsilon > 1 is outside the calibrated range; pass allow_large_epsilon to override");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
}

std::string_view to_string(SensitivityMode mode) {
  return mode == SensitivityMode::exact ? "exact" : "paper";
}

SensitivityMode sensitivity_mode_from_string(std::string_view s) {
  if (s == "exact") return SensitivityMode::exact;
  if (s == "paper" || s == "paper_bound") return SensitivityMode::paper_bound;
  throw InvalidArgument("unknown sensitivity mode '" + std::string(s) + "'");
}

double gaussian_sigma(double epsilon, double delta, double sensitivity) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  if (!(sensitivity > 0.0)) throw InvalidArgument("sensitivity must be positive");
  return sensitivity * std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

double marginal_set_sensitivity(std::size_t m, std::size_t d, SensitivityMode mode) {
  if (m < 1 || d < 1) throw InvalidArgument("sensitivity needs m >= 1 and d >= 1");
  if (mode == SensitivityMode::exact) return std::sqrt(2.0 * static_cast<double>(query_count(m, d)));
  return std::sqrt(2.0 * std::pow(static_cast<double>(m), static_cast<double>(d)));
}

NoiseCalibration calibrate(std::size_t m, std::size_t d, const PrivacyParams& params, SensitivityMode mode) {
  params.validate();
  NoiseCalibration cal;
  cal.mode = mode;
  cal.m = m;
  cal.d = d;
  cal.query_count = query_count(m, d);
  cal.sensitivity = marginal_set_sensitivity(m, d, mode);
  cal.sigma = gaussian_sigma(params.epsilon, params.delta, cal.sensitivity);
  return cal;
}

Marginal add_noise(const Marginal& h, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw InvalidArgument("sigma must be non-negative");
  Marginal out = h;
  for (double& c : out.counts) c += rng.gaussian(sigma);
  out.exact = false;
  return out;
}

double l1_deviation_bound(double sigma, std::size_t d, std::size_t m, std::size_t l, double lambda) {
  if (sigma < 0.0 || d < 1 || m < 1 || l < 1 || lambda < 0.0)
    throw InvalidArgument("l1 deviation bound needs sigma >= 0 and positive d, m, l");
  const double dd = static_cast<double>(d);
  const double ml = static_cast<double>(m) * static_cast<double>(l);
  const double radius = std::sqrt(2.0 * (std::numbers::ln2 * (1.0 + lambda) + dd * std::log(ml)));
  return 2.0 * std::pow(static_cast<double>(l), dd) * radius * sigma;
}

}  // namespace margsyn
