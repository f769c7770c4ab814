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

#ifndef MARGSYN_PRIVACY_HPP_
#define MARGSYN_PRIVACY_HPP_

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "margsyn/marginals.hpp"
#include "margsyn/rng.hpp"

namespace margsyn {

/// (epsilon, delta) plus the failure exponent lambda of the l1 bound.
/// Epsilon is restricted to (0, 1] unless allow_large_epsilon is set, since
/// the Gaussian-mechanism calibration below is only proven for that range.
struct PrivacyParams {
  double epsilon = 1.0;
  double delta = 1e-5;
  double lambda = 3.0;
  bool allow_large_epsilon = false;

  void validate() const;
};

enum class SensitivityMode {
  exact,       // sqrt(2 |Q|)
  paper_bound  // sqrt(2 m^d)
};

std::string_view to_string(SensitivityMode mode);
SensitivityMode sensitivity_mode_from_string(std::string_view s);

struct NoiseCalibration {
  double sigma = 0.0;
  double sensitivity = 0.0;
  SensitivityMode mode = SensitivityMode::exact;
  std::size_t d = 0;
  std::size_t m = 0;
  std::size_t query_count = 0;
};

/// sigma = sensitivity * sqrt(2 ln(1.25/delta)) / epsilon.
double gaussian_sigma(double epsilon, double delta, double sensitivity);

/// l2 sensitivity of the concatenated marginal vector under record
/// replacement. Each marginal changes by 1 in two cells.
double marginal_set_sensitivity(std::size_t m, std::size_t d, SensitivityMode mode);

/// Noise scale for releasing all marginals of order <= d.
NoiseCalibration calibrate(std::size_t m, std::size_t d, const PrivacyParams& params, SensitivityMode mode);

/// Independent N(0, sigma^2) per entry; clears the exactness flag.
Marginal add_noise(const Marginal& h, double sigma, Rng& rng);

/// High-probability l1 radius: 2 l^d sqrt(2 (ln2 (1+lambda) + d ln(m l))) sigma.
/// Holds for every query of order <= d with probability 1 - 2^-lambda.
double l1_deviation_bound(double sigma, std::size_t d, std::size_t m, std::size_t l, double lambda);

}  // namespace margsyn

#endif  // MARGSYN_PRIVACY_HPP_
