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

// Shared fixtures for the unit and acceptance tests.

#ifndef MARGSYN_TESTS_SUPPORT_HPP_
#define MARGSYN_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "margsyn/dataset.hpp"
#include "margsyn/rng.hpp"

namespace margsyn::testing {

inline Schema binary_schema(std::size_t features) {
  std::vector<Attribute> attrs;
  for (std::size_t j = 0; j < features; ++j) attrs.push_back({"x" + std::to_string(j), 2});
  attrs.push_back({"y", 2});
  return Schema(attrs);
}

inline Schema schema_of(const std::vector<int>& feature_domains) {
  std::vector<Attribute> attrs;
  for (std::size_t j = 0; j < feature_domains.size(); ++j)
    attrs.push_back({"x" + std::to_string(j), feature_domains[j]});
  attrs.push_back({"y", 2});
  return Schema(attrs);
}

/// Uniform random codes for every attribute.
inline Dataset random_dataset(const Schema& schema, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Code> codes;
  codes.reserve(n * schema.num_attributes());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < schema.num_attributes(); ++j)
      codes.push_back(static_cast<Code>(rng.index(static_cast<std::size_t>(schema.domain_size(j)))));
  return Dataset(schema, std::move(codes));
}

/// Features uniform; label = [sum of encoded features + noise > 0].
inline Dataset labelled_dataset(const Schema& schema, std::size_t n, double flip, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t m = schema.num_features();
  std::vector<Code> codes;
  codes.reserve(n * (m + 1));
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const int l = schema.domain_size(j);
      const auto c = static_cast<Code>(rng.index(static_cast<std::size_t>(l)));
      s += encode_feature(c, l);
      codes.push_back(c);
    }
    Code y = s > 0.0 || (s == 0.0 && rng.uniform() < 0.5) ? 1 : 0;
    if (rng.uniform() < flip) y = 1 - y;
    codes.push_back(y);
  }
  return Dataset(schema, std::move(codes));
}

/// Continuous piecewise-linear function through (xs[i], ys[i]); constant
/// outside the knot range.
struct PiecewiseLinear {
  std::vector<double> xs;
  std::vector<double> ys;

  double operator()(double x) const {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    std::size_t i = 1;
    while (xs[i] < x) ++i;
    const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] + t * (ys[i] - ys[i - 1]);
  }

  double lipschitz() const {
    double k = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i)
      k = std::max(k, std::abs((ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1])));
    return k;
  }
};

/// Random knots on [a, b] (endpoints included) with slopes in [-k_max, k_max].
inline PiecewiseLinear random_piecewise_linear(double a, double b, double k_max, Rng& rng) {
  PiecewiseLinear f;
  const std::size_t inner = 1 + rng.index(8);
  f.xs.push_back(a);
  for (std::size_t i = 0; i < inner; ++i) f.xs.push_back(a + (b - a) * rng.uniform());
  f.xs.push_back(b);
  std::sort(f.xs.begin(), f.xs.end());
  f.xs.erase(std::unique(f.xs.begin(), f.xs.end()), f.xs.end());
  f.ys.push_back(2.0 * rng.uniform() - 1.0);
  for (std::size_t i = 1; i < f.xs.size(); ++i)
    f.ys.push_back(f.ys.back() + (2.0 * rng.uniform() - 1.0) * k_max * (f.xs[i] - f.xs[i - 1]));
  return f;
}

}  // namespace margsyn::testing

#endif  // MARGSYN_TESTS_SUPPORT_HPP_
