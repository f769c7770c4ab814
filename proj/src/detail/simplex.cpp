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

#include "detail/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace margsyn::detail {

namespace {

constexpr double kPivotEps = 1e-9;
constexpr double kCostEps = 1e-9;
constexpr double kFeasEps = 1e-9;
constexpr std::size_t kBlandAfter = 64;

}  // namespace

void WarmLp::pivot(std::size_t r, std::size_t c) {
  double* pr = row(r);
  const double inv = 1.0 / pr[c];
  nz_.clear();
  for (std::size_t j = 0; j < cols_; ++j) {
    if (pr[j] == 0.0) continue;
    pr[j] *= inv;
    nz_.push_back(j);
  }
  pr[c] = 1.0;
  b_[r] *= inv;
  // Pivot rows are sparse here, so only their nonzeros are swept.
  for (std::size_t i = 0; i < rows_; ++i) {
    if (i == r) continue;
    double* pi = row(i);
    const double f = pi[c];
    if (f == 0.0) continue;
    for (std::size_t j : nz_) pi[j] -= f * pr[j];
    pi[c] = 0.0;
    b_[i] -= f * b_[r];
  }
  const double f = d_[c];
  if (f != 0.0) {
    for (std::size_t j : nz_) d_[j] -= f * pr[j];
    d_[c] = 0.0;
    z_ -= f * b_[r];
  }
  basis_[r] = c;
}

LpStatus WarmLp::primal(std::size_t& pivots_left) {
  std::size_t degenerate = 0;
  while (true) {
    const bool bland = degenerate >= kBlandAfter;
    std::size_t enter = cols_;
    double best = -kCostEps;
    for (std::size_t j = 0; j < cols_; ++j) {
      if (!allowed_[j]) continue;
      if (d_[j] < best) {
        enter = j;
        if (bland) break;
        best = d_[j];
      }
    }
    if (enter == cols_) return LpStatus::optimal;
    if (pivots_left-- == 0) return LpStatus::iteration_limit;

    std::size_t leave = rows_;
    double ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rows_; ++i) {
      const double a = row(i)[enter];
      if (a <= kPivotEps) continue;
      const double r = std::max(b_[i], 0.0) / a;
      if (r < ratio - 1e-12 || (r <= ratio + 1e-12 && leave < rows_ && basis_[i] < basis_[leave])) {
        ratio = std::min(ratio, r);
        leave = i;
      }
    }
    if (leave == rows_) return LpStatus::unbounded;
    degenerate = ratio <= 1e-12 ? degenerate + 1 : 0;
    pivot(leave, enter);
  }
}

LpStatus WarmLp::dual(std::size_t& pivots_left) {
  std::size_t degenerate = 0;
  while (true) {
    // Most infeasible row; Bland's rule (smallest basic index) after a run
    // of degenerate pivots.
    const bool bland = degenerate >= kBlandAfter;
    std::size_t leave = rows_;
    double worst = -kFeasEps;
    for (std::size_t i = 0; i < rows_; ++i) {
      if (bland) {
        if (b_[i] < -kFeasEps && (leave == rows_ || basis_[i] < basis_[leave])) leave = i;
      } else if (b_[i] < worst) {
        worst = b_[i];
        leave = i;
      }
    }
    if (leave == rows_) return LpStatus::optimal;
    if (pivots_left-- == 0) return LpStatus::iteration_limit;

    const double* pr = row(leave);
    std::size_t enter = cols_;
    double ratio = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cols_; ++j) {
      if (!allowed_[j] || pr[j] >= -kPivotEps) continue;
      const double r = std::max(d_[j], 0.0) / -pr[j];
      if (r < ratio - 1e-12) {
        ratio = r;
        enter = j;
      }
    }
    if (enter == cols_) return LpStatus::infeasible;
    degenerate = ratio <= 1e-12 ? degenerate + 1 : 0;
    pivot(leave, enter);
  }
}

void WarmLp::widen(std::size_t min_cols) {
  const std::size_t stride = std::max(min_cols, 2 * stride_);
  std::vector<double> a(rows_ * stride, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) std::copy(row(i), row(i) + cols_, a.data() + i * stride);
  a_ = std::move(a);
  stride_ = stride;
  d_.resize(stride, 0.0);
  allowed_.resize(stride, 0);
}

WarmLp::WarmLp(const LinearProgram& lp, std::size_t max_pivots) : n_(lp.num_vars), rows_(lp.rows.size()) {
  const std::size_t m = rows_;
  std::size_t n_slack = 0, n_art = 0;
  std::vector<RowSense> sense(m);
  std::vector<double> sign(m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    sense[i] = lp.rows[i].sense;
    if (lp.rows[i].rhs < 0) {
      sign[i] = -1.0;
      if (sense[i] == RowSense::le)
        sense[i] = RowSense::ge;
      else if (sense[i] == RowSense::ge)
        sense[i] = RowSense::le;
    }
    if (sense[i] != RowSense::eq) ++n_slack;
    if (sense[i] != RowSense::le) ++n_art;
  }
  const std::size_t art0 = n_ + n_slack;
  cols_ = art0 + n_art;
  stride_ = cols_ + 32;  // room for branching rows
  a_.assign(m * stride_, 0.0);
  b_.assign(m, 0.0);
  d_.assign(stride_, 0.0);
  basis_.assign(m, 0);
  allowed_.assign(stride_, 0);
  std::fill(allowed_.begin(), allowed_.begin() + static_cast<std::ptrdiff_t>(cols_), 1);

  std::size_t next_slack = n_, next_art = art0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& r = lp.rows[i];
    double* ai = row(i);
    for (std::size_t j = 0; j < n_; ++j) ai[j] = sign[i] * r.coeffs[j];
    b_[i] = sign[i] * r.rhs;
    if (sense[i] == RowSense::le) {
      ai[next_slack] = 1.0;
      basis_[i] = next_slack++;
    } else {
      if (sense[i] == RowSense::ge) ai[next_slack++] = -1.0;
      ai[next_art] = 1.0;
      basis_[i] = next_art++;
    }
  }

  std::size_t pivots_left = max_pivots;

  // phase 1: minimize the sum of artificials
  if (n_art > 0) {
    for (std::size_t i = 0; i < m; ++i) {
      if (basis_[i] < art0) continue;
      const double* ai = row(i);
      for (std::size_t j = 0; j < cols_; ++j) d_[j] -= ai[j];
      z_ -= b_[i];
    }
    for (std::size_t j = art0; j < cols_; ++j) d_[j] = 0.0;
    const LpStatus s = primal(pivots_left);
    if (s == LpStatus::iteration_limit) {
      status_ = s;
      return;
    }
    double scale = 1.0;
    for (const auto& r : lp.rows) scale = std::max(scale, std::abs(r.rhs));
    if (-z_ > 1e-7 * scale) {
      status_ = LpStatus::infeasible;
      return;
    }
    // drive remaining artificials out of the basis
    for (std::size_t i = 0; i < m; ++i) {
      if (basis_[i] < art0) continue;
      const double* ai = row(i);
      for (std::size_t j = 0; j < art0; ++j) {
        if (std::abs(ai[j]) > kPivotEps) {
          pivot(i, j);
          break;
        }
      }
    }
    for (std::size_t j = art0; j < cols_; ++j) allowed_[j] = 0;
  }

  // phase 2
  std::fill(d_.begin(), d_.end(), 0.0);
  z_ = 0.0;
  for (std::size_t j = 0; j < n_; ++j) d_[j] = lp.cost[j];
  for (std::size_t i = 0; i < m; ++i) {
    const double c = basis_[i] < n_ ? lp.cost[basis_[i]] : 0.0;
    if (c == 0.0) continue;
    const double* ai = row(i);
    for (std::size_t j = 0; j < cols_; ++j) d_[j] -= c * ai[j];
    z_ -= c * b_[i];
  }
  status_ = primal(pivots_left);
}

std::vector<double> WarmLp::solution() const {
  std::vector<double> x(n_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i)
    if (basis_[i] < n_) x[basis_[i]] = std::max(b_[i], 0.0);
  return x;
}

LpStatus WarmLp::add_row(std::span<const std::pair<std::size_t, double>> terms, double rhs,
                         std::size_t max_pivots) {
  if (status_ != LpStatus::optimal) return status_;
  if (cols_ + 1 > stride_) widen(cols_ + 1);
  const std::size_t slack = cols_++;
  allowed_[slack] = 1;
  d_[slack] = 0.0;

  std::vector<double> r(stride_, 0.0);
  for (const auto& [var, coeff] : terms) r[var] += coeff;
  r[slack] = 1.0;
  double b = rhs;
  // Express the row in the current basis.
  for (std::size_t i = 0; i < rows_; ++i) {
    const double f = r[basis_[i]];
    if (f == 0.0) continue;
    const double* ai = row(i);
    for (std::size_t j = 0; j < cols_; ++j) r[j] -= f * ai[j];
    r[basis_[i]] = 0.0;
    b -= f * b_[i];
  }
  a_.insert(a_.end(), r.begin(), r.end());
  b_.push_back(b);
  basis_.push_back(slack);
  ++rows_;

  std::size_t pivots_left = max_pivots;
  status_ = dual(pivots_left);
  return status_;
}

LpResult solve_lp(const LinearProgram& lp, std::size_t max_pivots) {
  const WarmLp w(lp, max_pivots);
  LpResult result;
  result.status = w.status();
  if (result.status != LpStatus::optimal) return result;
  result.x = w.solution();
  result.objective = 0.0;
  for (std::size_t j = 0; j < lp.num_vars; ++j) result.objective += lp.cost[j] * result.x[j];
  return result;
}

}  // namespace margsyn::detail
