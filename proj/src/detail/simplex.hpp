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

#ifndef MARGSYN_DETAIL_SIMPLEX_HPP_
#define MARGSYN_DETAIL_SIMPLEX_HPP_

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace margsyn::detail {

enum class RowSense { le, eq, ge };

struct LpRow {
  std::vector<double> coeffs;  // dense, one entry per structural variable
  RowSense sense = RowSense::le;
  double rhs = 0.0;
};

/// minimize cost . x  subject to rows, x >= 0.
struct LinearProgram {
  std::size_t num_vars = 0;
  std::vector<double> cost;
  std::vector<LpRow> rows;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  double objective = 0.0;
  std::vector<double> x;
};

/// Dense simplex tableau. Built by a two-phase primal solve (Dantzig
/// pricing, Bland's rule after a run of degenerate pivots); once optimal it
/// accepts extra <= rows and restores optimality with dual simplex pivots,
/// which is what branch and bound needs. Copyable, so a search can keep one
/// per open node. Sized for the few-hundred-column programs built by the
/// synthesizer.
class WarmLp {
 public:
  explicit WarmLp(const LinearProgram& lp, std::size_t max_pivots = 100000);

  LpStatus status() const noexcept { return status_; }
  double objective() const noexcept { return -z_; }
  /// Structural variable values; meaningful when status() is optimal.
  std::vector<double> solution() const;

  /// Appends sum coeff * x_var <= rhs and re-optimizes. Only valid while
  /// the tableau is optimal.
  LpStatus add_row(std::span<const std::pair<std::size_t, double>> terms, double rhs,
                   std::size_t max_pivots = 100000);

 private:
  double* row(std::size_t r) { return a_.data() + r * stride_; }
  const double* row(std::size_t r) const { return a_.data() + r * stride_; }
  void pivot(std::size_t r, std::size_t c);
  LpStatus primal(std::size_t& pivots_left);
  LpStatus dual(std::size_t& pivots_left);
  void widen(std::size_t min_cols);

  std::size_t n_ = 0;       // structural variables
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;    // columns in use
  std::size_t stride_ = 0;  // allocated columns per row
  std::vector<double> a_;
  std::vector<double> b_;
  std::vector<double> d_;   // reduced costs
  double z_ = 0.0;          // minus the objective value
  std::vector<std::size_t> basis_;
  std::vector<char> allowed_;
  std::vector<std::size_t> nz_;
  LpStatus status_ = LpStatus::infeasible;
};

/// One-shot solve through WarmLp.
LpResult solve_lp(const LinearProgram& lp, std::size_t max_pivots = 100000);

}  // namespace margsyn::detail

#endif  // MARGSYN_DETAIL_SIMPLEX_HPP_
