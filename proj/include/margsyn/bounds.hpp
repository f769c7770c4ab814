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

#ifndef MARGSYN_BOUNDS_HPP_
#define MARGSYN_BOUNDS_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace margsyn {

/// Inputs to the excess-risk calculators. Unused fields are ignored by
/// each calculator.
struct BoundInputs {
  std::size_t n = 1;
  std::size_t m = 1;
  std::size_t d = 2;
  std::size_t l = 2;       // max attribute domain size
  double tau = 1.0;
  double K = 1.0;          // Lipschitz constant of the loss
  double phi0 = 0.0;       // loss value at 0
  double nu = 0.0;         // max l1 gap between real and synthetic marginals
  double sigma = 0.0;
  double lambda = 3.0;
  double epsilon = 1.0;
  double delta = 1e-5;
};

enum class ConstantsMode { explicit_constants, asymptotic_shape };
std::string_view to_string(ConstantsMode mode);
ConstantsMode constants_mode_from_string(std::string_view s);

/// A bound and every multiplier that went into it.
struct BoundReport {
  double approx_term = 0.0;
  double marginal_term = 0.0;
  double total = 0.0;
  ConstantsMode mode = ConstantsMode::explicit_constants;
  std::string loss;  // "generic" or "logistic"
  double nu = 0.0;
  // explicit-mode ingredients
  double half_width = 0.0;           // R; margins lie in [-R, R]
  double per_hop_approx = 0.0;       // polynomial approximation error on [-R, R]
  double per_hop_marginal = 0.0;     // one marginal substitution
  double approx_hops = 4.0;
  double marginal_hops = 2.0;
  double loss_sup = 0.0;             // sup |phi| on [-R, R]
  double base = 0.0;                 // 3 m max(1, tau)
  double tight_base_factor = 0.0;    // 1 + 2/(b-a), bounded by 3 in `base`
  std::vector<std::string> notes;
};

/// Generic K-Lipschitz loss.
BoundReport generic_excess_risk_bound(const BoundInputs& in,
                                      ConstantsMode mode = ConstantsMode::explicit_constants);

/// Logistic loss; uses the smoothness of the sigmoid.
BoundReport logistic_excess_risk_bound(const BoundInputs& in,
                                       ConstantsMode mode = ConstantsMode::explicit_constants);

enum class BoundLoss { generic, logistic };

/// nu replaced by the high-probability l1 deviation of the Gaussian
/// mechanism at (sigma, d, m, l, lambda).
BoundReport private_excess_risk_bound(const BoundInputs& in, BoundLoss loss,
                                      ConstantsMode mode = ConstantsMode::explicit_constants);

struct LowerBoundParams {
  double r = 5.0 / 6.0;
  double m = 0.0;
  double gamma = 0.0;
  double n = 0.0;
  double tau = 0.0;
  // d = c' * d_per_cprime; c' = min(1/5, c/8) with c unknown.
  double d_per_cprime = 0.0;
  double gamma_limit = 0.0;  // 2^(-1/(1-r))
  bool gamma_in_range = false;
};

LowerBoundParams lower_bound_schedule(std::size_t m);

std::string bound_report_json(const BoundReport& report);
std::string lower_bound_json(const LowerBoundParams& params);

}  // namespace margsyn

#endif  // MARGSYN_BOUNDS_HPP_
