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

#ifndef MARGSYN_MARGINALS_HPP_
#define MARGSYN_MARGINALS_HPP_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "margsyn/dataset.hpp"

namespace margsyn {

/// Non-empty, strictly increasing set of 0-based attribute indices.
class MarginalQuery {
 public:
  MarginalQuery() = default;
  explicit MarginalQuery(std::vector<std::size_t> attributes);

  std::span<const std::size_t> attributes() const noexcept { return attrs_; }
  std::size_t size() const noexcept { return attrs_.size(); }
  bool contains(std::size_t attr) const;
  bool is_subset_of(const MarginalQuery& other) const;
  std::string to_string() const;

  friend bool operator==(const MarginalQuery&, const MarginalQuery&) = default;

  // Orders by size first, then lexicographically.
  friend std::strong_ordering operator<=>(const MarginalQuery& a, const MarginalQuery& b);

 private:
  std::vector<std::size_t> attrs_;
};

/// Number of queries of size 1..d over m+1 attributes: sum_k C(m+1, k).
std::size_t query_count(std::size_t m, std::size_t d);

/// All subsets of {0..m} of size 1..d in (size, lexicographic) order.
std::vector<MarginalQuery> enumerate_queries(std::size_t m, std::size_t d);

/// Count vector over Omega_q, flattened row-major with the last attribute of
/// the query varying fastest. Noisy marginals may hold negative reals.
struct Marginal {
  MarginalQuery query;
  std::vector<std::size_t> shape;
  std::vector<double> counts;
  bool exact = true;

  double total() const;
  std::size_t cell_count() const noexcept { return counts.size(); }
};

std::vector<std::size_t> marginal_shape(const Schema& schema, const MarginalQuery& q);

/// Flat index of a full record's projection onto q.
std::size_t marginal_index(const Schema& schema, const MarginalQuery& q, std::span<const Code> record);

Marginal compute_marginal(const Dataset& ds, const MarginalQuery& q);
std::vector<Marginal> compute_marginals(const Dataset& ds, std::span<const MarginalQuery> queries);

double l1_distance(const Marginal& a, const Marginal& b);
double normalized_l1(const Marginal& a, const Marginal& b, std::size_t n);

/// Sums out the attributes of h.query that are not in sub.
Marginal project_marginal(const Marginal& h, const MarginalQuery& sub);

struct L1Summary {
  double max = 0.0;
  double mean = 0.0;
};

/// Max and mean of per-query l1 distances between two aligned marginal sets.
L1Summary l1_summary(std::span<const Marginal> a, std::span<const Marginal> b);

/// Full joint domain Omega = prod_j Omega_j, indexed row-major with the
/// last attribute fastest.
class JointDomain {
 public:
  explicit JointDomain(const Schema& schema);

  std::size_t size() const noexcept { return size_; }
  const Schema& schema() const noexcept { return schema_; }

  std::size_t encode(std::span<const Code> record) const;
  std::vector<Code> decode(std::size_t cell) const;

  /// For every joint cell, the flat index of its projection onto q.
  std::vector<std::uint32_t> projection(const MarginalQuery& q) const;

 private:
  Schema schema_;
  std::size_t size_ = 0;
  std::vector<std::size_t> strides_;
};

// Marginal sets serialize as <dir>/marginals.csv (query_id,index,count) plus
// <dir>/manifest.json listing each query's attributes and shape.
void save_marginal_set(const std::filesystem::path& dir, std::span<const Marginal> marginals);
std::vector<Marginal> load_marginal_set(const std::filesystem::path& dir);

}  // namespace margsyn

#endif  // MARGSYN_MARGINALS_HPP_
