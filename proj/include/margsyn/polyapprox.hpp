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

#ifndef MARGSYN_POLYAPPROX_HPP_
#define MARGSYN_POLYAPPROX_HPP_

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "margsyn/error.hpp"

namespace margsyn {

using RealFunction = std::function<double(double)>;

/// Bernstein degrees above this are rejected; the power-basis conversion
/// loses too much to cancellation beyond it.
inline constexpr int kMaxBernsteinDegree = 30;

struct Interval {
  double a = 0.0;
  double b = 1.0;

  Interval() = default;
  Interval(double lo, double hi);

  double width() const noexcept { return b - a; }
};

/// Power-basis polynomial sum_k coeffs[k] x^k attached to the interval it
/// approximates on.
class Polynomial {
 public:
  Polynomial(std::vector<double> coeffs, Interval interval);

  int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  const std::vector<double>& coeffs() const noexcept { return coeffs_; }
  const Interval& interval() const noexcept { return interval_; }

  /// Horner evaluation carried in long double.
  double operator()(double x) const;

  double coeff_abs_sum() const;

 private:
  std::vector<double> coeffs_;
  Interval interval_;
};

struct ApproxReport {
  double max_abs_error = 0.0;
  double argmax = 0.0;
  double coeff_abs_sum = 0.0;
  std::size_t grid_points = 0;
};

/// Degree-d Bernstein approximation of f on iv, expanded to the power basis
/// in quad precision.
Polynomial bernstein(const RealFunction& f, int degree, Interval iv);

/// Residual-corrected Bernstein operator: Q_1 = B f, Q_{j+1} = Q_j + B(f - Q_j).
Polynomial iterated_bernstein(const RealFunction& f, int degree, int iterations, Interval iv);

/// Value of the degree-d Bernstein operator at x by de Casteljau's scheme.
/// Independent of the power-basis path; used for cross-checks.
double bernstein_form(const RealFunction& f, int degree, Interval iv, double x);

struct MinimaxResult {
  explicit MinimaxResult(Polynomial p) : poly(std::move(p)) {}

  Polynomial poly;
  double levelled_error = 0.0;  // |E| from the last reference solve
  double max_error = 0.0;       // sup |f - p| over the search grid
  std::vector<double> reference;
  int exchanges = 0;
  bool converged = false;
};

/// Thrown when the exchange loop runs out of iterations; carries the best
/// iterate seen.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, MinimaxResult best) : Error(what), best_(std::move(best)) {}
  const MinimaxResult& best() const noexcept { return best_; }

 private:
  MinimaxResult best_;
};

/// Best uniform approximation of degree d by the Remez exchange algorithm.
/// Converged when the d+2 reference errors agree to within tol.
MinimaxResult remez_minimax(const RealFunction& f, int degree, Interval iv, double tol = 1e-10,
                            int max_exchanges = 100);

/// Sup-norm error over a uniform grid of grid_points (endpoints included),
/// plus the coefficient absolute sum.
ApproxReport approx_report(const Polynomial& p, const RealFunction& f, std::size_t grid_points = 4097);

}  // namespace margsyn

#endif  // MARGSYN_POLYAPPROX_HPP_
