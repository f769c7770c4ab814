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

#include "margsyn/polyapprox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace margsyn {

namespace {

using quad = boost::multiprecision::cpp_bin_float_quad;

void check_degree(int degree) {
  if (degree < 1) throw InvalidArgument("polynomial degree must be >= 1");
  if (degree > kMaxBernsteinDegree)
    throw InvalidArgument("Bernstein degree capped at " + std::to_string(kMaxBernsteinDegree));
}

std::vector<std::vector<quad>> binomials(int n) {
  std::vector<std::vector<quad>> c(n + 1);
  for (int i = 0; i <= n; ++i) {
    c[i].assign(i + 1, quad(1));
    for (int k = 1; k < i; ++k) c[i][k] = c[i - 1][k - 1] + c[i - 1][k];
  }
  return c;
}

std::vector<quad> node_samples(const RealFunction& f, int degree, Interval iv) {
  std::vector<quad> s(degree + 1);
  for (int i = 0; i <= degree; ++i) {
    const double x = i == degree ? iv.b : iv.a + iv.width() * static_cast<double>(i) / degree;
    const double v = f(x);
    if (!std::isfinite(v)) throw NumericalError("function is not finite at x = " + std::to_string(x));
    s[i] = v;
  }
  return s;
}

// Bernstein coefficients (control values) on iv -> power basis in x.
std::vector<double> bernstein_to_power(const std::vector<quad>& ctrl, Interval iv) {
  const int d = static_cast<int>(ctrl.size()) - 1;
  const auto C = binomials(d);
  // power basis in u = (x - a) / (b - a)
  std::vector<quad> in_u(d + 1, quad(0));
  for (int k = 0; k <= d; ++k) {
    quad acc = 0;
    for (int i = 0; i <= k; ++i) acc += ((k - i) % 2 ? -C[k][i] : C[k][i]) * ctrl[i];
    in_u[k] = C[d][k] * acc;
  }
  const quad width = quad(iv.b) - quad(iv.a);
  const quad alpha = quad(1) / width;
  const quad beta = -quad(iv.a) / width;
  std::vector<quad> alpha_pow(d + 1), beta_pow(d + 1);
  alpha_pow[0] = beta_pow[0] = 1;
  for (int k = 1; k <= d; ++k) {
    alpha_pow[k] = alpha_pow[k - 1] * alpha;
    beta_pow[k] = beta_pow[k - 1] * beta;
  }
  std::vector<double> out(d + 1);
  for (int r = 0; r <= d; ++r) {
    quad acc = 0;
    for (int k = r; k <= d; ++k) acc += in_u[k] * C[k][r] * alpha_pow[r] * beta_pow[k - r];
    out[r] = static_cast<double>(acc);
  }
  return out;
}

long double clenshaw(const std::vector<long double>& cheb, long double t) {
  long double b1 = 0, b2 = 0;
  for (std::size_t k = cheb.size(); k-- > 1;) {
    const long double b0 = 2 * t * b1 - b2 + cheb[k];
    b2 = b1;
    b1 = b0;
  }
  return t * b1 - b2 + cheb[0];
}

// Chebyshev series in t = (2x - a - b)/(b - a) -> power basis in x.
std::vector<double> chebyshev_to_power(const std::vector<long double>& cheb, Interval iv) {
  const int d = static_cast<int>(cheb.size()) - 1;
  // power coefficients of T_k(t)
  std::vector<std::vector<quad>> T(d + 1, std::vector<quad>(d + 1, quad(0)));
  T[0][0] = 1;
  if (d >= 1) T[1][1] = 1;
  for (int k = 2; k <= d; ++k)
    for (int j = 0; j <= k; ++j) T[k][j] = (j ? 2 * T[k - 1][j - 1] : quad(0)) - T[k - 2][j];
  std::vector<quad> in_t(d + 1, quad(0));
  for (int k = 0; k <= d; ++k)
    for (int j = 0; j <= k; ++j) in_t[j] += quad(cheb[k]) * T[k][j];
  const auto C = binomials(d);
  const quad width = quad(iv.b) - quad(iv.a);
  const quad gamma = quad(2) / width;
  const quad eta = -(quad(iv.a) + quad(iv.b)) / width;
  std::vector<double> out(d + 1);
  for (int r = 0; r <= d; ++r) {
    quad acc = 0;
    for (int k = r; k <= d; ++k) acc += in_t[k] * C[k][r] * pow(gamma, r) * pow(eta, k - r);
    out[r] = static_cast<double>(acc);
  }
  return out;
}

}  // namespace

Interval::Interval(double lo, double hi) : a(lo), b(hi) {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) throw InvalidArgument("interval needs a < b");
}

Polynomial::Polynomial(std::vector<double> coeffs, Interval interval)
    : coeffs_(std::move(coeffs)), interval_(interval) {
  if (coeffs_.empty()) throw InvalidArgument("polynomial needs at least one coefficient");
}

double Polynomial::operator()(double x) const {
  long double acc = 0;
  for (std::size_t k = coeffs_.size(); k-- > 0;) acc = acc * x + coeffs_[k];
  return static_cast<double>(acc);
}

double Polynomial::coeff_abs_sum() const {
  double s = 0.0;
  for (double c : coeffs_) s += std::abs(c);
  return s;
}

Polynomial bernstein(const RealFunction& f, int degree, Interval iv) {
  check_degree(degree);
  return Polynomial(bernstein_to_power(node_samples(f, degree, iv), iv), iv);
}

Polynomial iterated_bernstein(const RealFunction& f, int degree, int iterations, Interval iv) {
  check_degree(degree);
  if (iterations < 1) throw InvalidArgument("iteration count must be >= 1");
  const auto samples = node_samples(f, degree, iv);
  const auto C = binomials(degree);
  // collocation matrix M[i][k] = B_{d,k}(u_i) at the nodes u_i = i/d
  std::vector<std::vector<quad>> M(degree + 1, std::vector<quad>(degree + 1));
  for (int i = 0; i <= degree; ++i) {
    const quad u = quad(i) / degree;
    for (int k = 0; k <= degree; ++k) M[i][k] = C[degree][k] * pow(u, k) * pow(1 - u, degree - k);
  }
  std::vector<quad> ctrl = samples;
  for (int it = 1; it < iterations; ++it) {
    std::vector<quad> next = ctrl;
    for (int i = 0; i <= degree; ++i) {
      quad q = 0;
      for (int k = 0; k <= degree; ++k) q += M[i][k] * ctrl[k];
      next[i] += samples[i] - q;
    }
    ctrl = std::move(next);
  }
  return Polynomial(bernstein_to_power(ctrl, iv), iv);
}

double bernstein_form(const RealFunction& f, int degree, Interval iv, double x) {
  check_degree(degree);
  std::vector<long double> b(degree + 1);
  for (int i = 0; i <= degree; ++i) b[i] = f(iv.a + iv.width() * static_cast<double>(i) / degree);
  const long double u = (static_cast<long double>(x) - iv.a) / iv.width();
  for (int r = 1; r <= degree; ++r)
    for (int i = 0; i <= degree - r; ++i) b[i] = (1 - u) * b[i] + u * b[i + 1];
  return static_cast<double>(b[0]);
}

MinimaxResult remez_minimax(const RealFunction& f, int degree, Interval iv, double tol, int max_exchanges) {
  if (degree < 0) throw InvalidArgument("polynomial degree must be >= 0");
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  const int n_ref = degree + 2;
  const auto to_x = [&iv](long double t) { return static_cast<double>(iv.a + (t + 1) / 2 * iv.width()); };
  const auto fx = [&f](double x) {
    const double v = f(x);
    if (!std::isfinite(v)) throw NumericalError("function is not finite at x = " + std::to_string(x));
    return static_cast<long double>(v);
  };

  std::vector<long double> ref(n_ref);
  for (int i = 0; i < n_ref; ++i) ref[i] = -std::cos(std::numbers::pi_v<long double> * i / (n_ref - 1));

  const int grid_n = std::max(4097, 128 * n_ref);
  std::vector<long double> grid(grid_n);
  std::vector<long double> fgrid(grid_n);
  for (int g = 0; g < grid_n; ++g) {
    grid[g] = -1 + 2 * static_cast<long double>(g) / (grid_n - 1);
    fgrid[g] = fx(to_x(grid[g]));
  }

  MinimaxResult best(Polynomial({0.0}, iv));
  best.max_error = std::numeric_limits<double>::infinity();

  using Mat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

  for (int exchange = 1; exchange <= max_exchanges; ++exchange) {
    Mat A(n_ref, n_ref);
    Vec rhs(n_ref);
    for (int i = 0; i < n_ref; ++i) {
      long double tkm1 = 1, tk = ref[i];
      A(i, 0) = 1;
      if (degree >= 1) A(i, 1) = ref[i];
      for (int k = 2; k <= degree; ++k) {
        const long double tn = 2 * ref[i] * tk - tkm1;
        tkm1 = tk;
        tk = tn;
        A(i, k) = tn;
      }
      A(i, n_ref - 1) = (i % 2) ? -1 : 1;
      rhs(i) = fx(to_x(ref[i]));
    }
    const Vec sol = A.partialPivLu().solve(rhs);
    std::vector<long double> cheb(sol.data(), sol.data() + degree + 1);
    const long double levelled = std::abs(sol(n_ref - 1));
    const auto err = [&](long double t) { return fx(to_x(t)) - clenshaw(cheb, t); };

    std::vector<long double> egrid(grid_n);
    long double grid_max = 0;
    for (int g = 0; g < grid_n; ++g) {
      egrid[g] = fgrid[g] - clenshaw(cheb, grid[g]);
      grid_max = std::max(grid_max, std::abs(egrid[g]));
    }

    MinimaxResult current(Polynomial(chebyshev_to_power(cheb, iv), iv));
    current.levelled_error = static_cast<double>(levelled);
    current.exchanges = exchange;

    if (grid_max <= tol) {  // f is (numerically) a polynomial of degree <= d
      current.max_error = static_cast<double>(grid_max);
      current.reference.assign(ref.begin(), ref.end());
      for (auto& r : current.reference) r = to_x(r);
      current.converged = true;
      return current;
    }

    // one extremum per run of constant sign, refined by Brent's method
    std::vector<long double> ext_t, ext_e;
    int start = 0;
    auto sign_of = [](long double v) { return v >= 0 ? 1 : -1; };
    for (int g = 1; g <= grid_n; ++g) {
      if (g < grid_n && sign_of(egrid[g]) == sign_of(egrid[start])) continue;
      int arg = start;
      for (int h = start; h < g; ++h)
        if (std::abs(egrid[h]) > std::abs(egrid[arg])) arg = h;
      long double t_best = grid[arg], e_best = egrid[arg];
      const long double lo = grid[std::max(arg - 1, 0)], hi = grid[std::min(arg + 1, grid_n - 1)];
      const auto neg_abs = [&](long double t) { return -std::abs(err(t)); };
      const auto [t_ref, v_ref] = boost::math::tools::brent_find_minima(neg_abs, lo, hi, 50);
      if (-v_ref > std::abs(e_best) && sign_of(err(t_ref)) == sign_of(e_best)) {
        t_best = t_ref;
        e_best = err(t_ref);
      }
      ext_t.push_back(t_best);
      ext_e.push_back(e_best);
      start = g;
    }
    long double all_max = 0;
    for (long double e : ext_e) all_max = std::max(all_max, std::abs(e));
    current.max_error = static_cast<double>(std::max(all_max, grid_max));
    if (current.max_error < best.max_error) best = current;

    if (static_cast<int>(ext_t.size()) < n_ref) {
      throw ConvergenceError("error curve has only " + std::to_string(ext_t.size()) + " alternations; need " +
                                 std::to_string(n_ref),
                             best);
    }
    // keep d+2 alternating extrema, dropping the smaller end each time
    std::size_t first = 0, last = ext_t.size();
    while (last - first > static_cast<std::size_t>(n_ref)) {
      if (std::abs(ext_e[first]) < std::abs(ext_e[last - 1]))
        ++first;
      else
        --last;
    }
    long double ref_min = std::numeric_limits<long double>::infinity();
    for (std::size_t i = first; i < last; ++i) {
      ref[i - first] = ext_t[i];
      ref_min = std::min(ref_min, std::abs(ext_e[i]));
    }
    current.reference.clear();
    for (long double t : ref) current.reference.push_back(to_x(t));

    if (current.max_error - static_cast<double>(ref_min) <= tol) {
      current.converged = true;
      return current;
    }
    if (current.max_error <= best.max_error) best = current;
  }
  throw ConvergenceError("Remez exchange did not converge in " + std::to_string(max_exchanges) + " exchanges",
                         best);
}

ApproxReport approx_report(const Polynomial& p, const RealFunction& f, std::size_t grid_points) {
  if (grid_points < 2) throw InvalidArgument("grid needs at least 2 points");
  const Interval& iv = p.interval();
  ApproxReport r;
  r.grid_points = grid_points;
  r.coeff_abs_sum = p.coeff_abs_sum();
  for (std::size_t g = 0; g < grid_points; ++g) {
    const double x = g + 1 == grid_points ? iv.b
                                          : iv.a + iv.width() * static_cast<double>(g) / (grid_points - 1);
    const double e = std::abs(f(x) - p(x));
    if (!std::isfinite(e)) throw NumericalError("non-finite approximation error");
    if (e > r.max_abs_error) {
      r.max_abs_error = e;
      r.argmax = x;
    }
  }
  return r;
}

}  // namespace margsyn
