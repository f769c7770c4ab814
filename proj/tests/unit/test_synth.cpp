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

#include <doctest.h>

#include <cmath>
#include <functional>

#include <nlohmann/json.hpp>

#include "margsyn/error.hpp"
#include "margsyn/synth.hpp"
#include "support.hpp"

using namespace margsyn;

namespace {

NoisyMarginalSet noisy_set(const Dataset& real, std::size_t d, double sigma, std::uint64_t seed) {
  NoisyMarginalSet nm;
  nm.schema = real.schema();
  nm.sigma = sigma;
  nm.seed = seed;
  nm.records = real.size();
  Rng rng(seed);
  for (const auto& q : enumerate_queries(real.schema().num_features(), d)) {
    Marginal h = compute_marginal(real, q);
    for (double& c : h.counts) c += rng.gaussian(sigma);
    h.exact = sigma == 0.0;
    nm.marginals.push_back(std::move(h));
  }
  return nm;
}

// Exhaustive oracle over multisets written as non-decreasing record
// sequences; keeps the first (lexicographically smallest) minimizer.
struct Oracle {
  double best = INFINITY;
  std::vector<std::size_t> best_seq;
  std::size_t visited = 0;
};

Oracle exhaustive(std::size_t n, const NoisyMarginalSet& nm) {
  const JointDomain dom(nm.schema);
  Oracle o;
  std::vector<std::size_t> seq;
  std::function<void(std::size_t)> rec = [&](std::size_t from) {
    if (seq.size() == n) {
      ++o.visited;
      double worst = 0.0;
      for (const auto& h : nm.marginals) {
        std::vector<double> m(h.counts.size(), 0.0);
        for (std::size_t c : seq) {
          const auto r = dom.decode(c);
          std::size_t idx = 0;
          for (std::size_t a : h.query.attributes())
            idx = idx * static_cast<std::size_t>(nm.schema.domain_size(a)) + static_cast<std::size_t>(r[a]);
          m[idx] += 1.0;
        }
        double l1 = 0.0;
        for (std::size_t s = 0; s < m.size(); ++s) l1 += std::abs(h.counts[s] - m[s]);
        worst = std::max(worst, l1);
      }
      if (o.best_seq.empty() || worst < o.best - 1e-9 * (1.0 + o.best)) {
        o.best = worst;
        o.best_seq = seq;
      }
      return;
    }
    for (std::size_t c = from; c < dom.size(); ++c) {
      seq.push_back(c);
      rec(c);
      seq.pop_back();
    }
  };
  rec(0);
  return o;
}

std::vector<std::size_t> counts_of(const std::vector<std::size_t>& seq, std::size_t cells) {
  std::vector<std::size_t> c(cells, 0);
  for (auto s : seq) ++c[s];
  return c;
}

}  // namespace

TEST_CASE("multiset counting") {
  CHECK(multiset_count(4, 2, 1e9) == 10.0);
  CHECK(multiset_count(16, 50, 1e30) == doctest::Approx(207374699821536.0));
  CHECK(multiset_count(16, 50, 1e7) == doctest::Approx(1e7 + 1.0));
  CHECK(multiset_count(1, 9, 1e9) == 1.0);
}

TEST_CASE("noisy set validation") {
  const Schema s = testing::binary_schema(1);
  const Dataset ds = testing::random_dataset(s, 5, 1);
  NoisyMarginalSet nm = noisy_set(ds, 2, 0.0, 1);
  CHECK_NOTHROW(nm.validate());
  NoisyMarginalSet empty = nm;
  empty.marginals.clear();
  CHECK_THROWS_AS(empty.validate(), InvalidArgument);
  NoisyMarginalSet dup = nm;
  dup.marginals.push_back(dup.marginals.front());
  CHECK_THROWS_AS(dup.validate(), InvalidArgument);
  NoisyMarginalSet nan = nm;
  nan.marginals[0].counts[0] = NAN;
  CHECK_THROWS_AS(nan.validate(), InvalidArgument);
  CHECK_THROWS_AS(brute_force_synth(3, empty), InvalidArgument);
}

TEST_CASE("two-row example recovers the marginals") {
  const Schema s = testing::binary_schema(1);
  const Dataset real(s, {0, 1, 1, 0});
  const NoisyMarginalSet nm = noisy_set(real, 2, 0.0, 0);
  const BruteForceResult r = brute_force_search(2, nm);
  CHECK(r.enumerated);
  CHECK(r.candidates == 10);
  CHECK(r.objective == 0.0);
  const Dataset out = brute_force_synth(2, nm);
  for (const auto& h : nm.marginals) CHECK(compute_marginal(out, h.query).counts == h.counts);
}

TEST_CASE("zero noise gives objective zero") {
  const Schema s = testing::binary_schema(2);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset real = testing::random_dataset(s, 5, seed);
    const NoisyMarginalSet nm = noisy_set(real, 2, 0.0, seed);
    CHECK(brute_force_search(5, nm).objective == 0.0);
  }
}

TEST_CASE("enumeration agrees with the exhaustive oracle") {
  const Schema s = testing::binary_schema(1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 1 + seed % 6;
    const Dataset real = testing::random_dataset(s, n, seed);
    const NoisyMarginalSet nm = noisy_set(real, 2, 1.5, 100 + seed);
    const Oracle o = exhaustive(n, nm);
    REQUIRE(o.visited <= 500);
    const BruteForceResult r = brute_force_search(n, nm);
    CHECK(r.enumerated);
    CHECK(r.objective == doctest::Approx(o.best).epsilon(1e-12));
    CHECK(r.cell_counts == counts_of(o.best_seq, 4));
  }
}

TEST_CASE("search agrees with enumeration") {
  BruteForceOptions search_only;
  search_only.enumeration_cap = 0.0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Schema s = testing::schema_of(seed % 3 == 0 ? std::vector<int>{3} : std::vector<int>{2, 2});
    const std::size_t n = 2 + seed % 5;
    const Dataset real = testing::random_dataset(s, n, seed);
    const std::size_t d = 1 + seed % 2;
    const NoisyMarginalSet nm = noisy_set(real, d, seed % 4 == 0 ? 0.0 : 2.0, 200 + seed);
    const BruteForceResult e = brute_force_search(n, nm);
    const BruteForceResult r = brute_force_search(n, nm, search_only);
    REQUIRE(e.enumerated);
    CHECK_FALSE(r.enumerated);
    CHECK(r.objective == doctest::Approx(e.objective).epsilon(1e-12));
    CHECK(r.cell_counts == e.cell_counts);
  }
}

TEST_CASE("cap handling") {
  const Schema s = testing::binary_schema(3);
  const Dataset real = testing::random_dataset(s, 30, 4);
  const NoisyMarginalSet nm = noisy_set(real, 2, 3.0, 9);
  BruteForceOptions no_search;
  no_search.allow_search = false;
  CHECK_THROWS_AS(brute_force_search(30, nm, no_search), CapacityError);
  BruteForceOptions tiny_budget;
  tiny_budget.max_search_nodes = 1;
  CHECK_THROWS_AS(brute_force_search(30, nm, tiny_budget), CapacityError);
  const BruteForceResult r = brute_force_search(30, nm);
  CHECK_FALSE(r.enumerated);
  std::size_t total = 0;
  for (auto c : r.cell_counts) total += c;
  CHECK(total == 30);
  // Minimality against the real data.
  std::vector<std::size_t> real_counts(16, 0);
  const JointDomain dom(s);
  for (std::size_t i = 0; i < real.size(); ++i) ++real_counts[dom.encode(real.row(i))];
  CHECK(r.objective <= max_l1_objective(nm, real_counts) + 1e-9);
}

TEST_CASE("dataset from counts") {
  const Schema s = testing::binary_schema(1);
  const std::vector<std::size_t> counts = {2, 0, 1, 0};
  const Dataset ds = dataset_from_counts(s, counts);
  CHECK(std::vector<Code>(ds.codes().begin(), ds.codes().end()) == std::vector<Code>{0, 0, 0, 0, 1, 0});
}

TEST_CASE("fitting recovers consistent marginals") {
  const Schema s = testing::binary_schema(2);
  const Dataset real = testing::random_dataset(s, 200, 6);
  const NoisyMarginalSet nm = noisy_set(real, 2, 0.0, 0);
  const DistributionEstimate est = fit_distribution(nm);
  double sum = 0.0;
  for (double p : est.probs) {
    CHECK(p >= 0.0);
    sum += p;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  const JointDomain dom(s);
  for (const auto& h : nm.marginals) {
    std::vector<double> fitted(h.counts.size(), 0.0);
    const auto proj = dom.projection(h.query);
    for (std::size_t c = 0; c < dom.size(); ++c) fitted[proj[c]] += 200.0 * est.probs[c];
    double l1 = 0.0;
    for (std::size_t t = 0; t < fitted.size(); ++t) l1 += std::abs(fitted[t] - h.counts[t]);
    CHECK(l1 <= 1e-3 * 200.0);
  }
  for (std::size_t i = 1; i < est.objective_history.size(); ++i)
    CHECK(est.objective_history[i] <= est.objective_history[i - 1]);
}

TEST_CASE("fitting a full query is exact") {
  const Schema s = testing::binary_schema(1);
  const Dataset real(s, {0, 0, 0, 1, 1, 1, 1, 1});
  NoisyMarginalSet nm;
  nm.schema = s;
  nm.records = 4;
  nm.marginals.push_back(compute_marginal(real, MarginalQuery({0, 1})));
  const DistributionEstimate est = fit_distribution(nm);
  CHECK(est.probs[0] == doctest::Approx(0.25));
  CHECK(est.probs[1] == doctest::Approx(0.25));
  CHECK(est.probs[2] == doctest::Approx(0.0));
  CHECK(est.probs[3] == doctest::Approx(0.5));
}

TEST_CASE("fitting handles negative targets") {
  const Schema s = testing::binary_schema(2);
  const Dataset real = testing::random_dataset(s, 10, 2);
  const NoisyMarginalSet nm = noisy_set(real, 2, 20.0, 3);
  bool any_negative = false;
  for (const auto& h : nm.marginals)
    for (double c : h.counts) any_negative = any_negative || c < 0.0;
  CHECK(any_negative);
  const DistributionEstimate est = fit_distribution(nm);
  double sum = 0.0;
  for (double p : est.probs) {
    CHECK(p >= 0.0);
    sum += p;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  FitOptions small;
  small.max_cells = 4;
  CHECK_THROWS_AS(fit_distribution(nm, small), CapacityError);
}

TEST_CASE("sample_column examples") {
  Rng rng(1);
  const std::vector<double> a = {1.5, 2.5};
  int two_two = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto col = sample_column(a, 4, rng);
    REQUIRE(col.size() == 4);
    const auto ones = std::count(col.begin(), col.end(), 1);
    CHECK((ones == 2 || ones == 3));
    two_two += ones == 2;
  }
  CHECK(two_two / 10000.0 == doctest::Approx(0.5).epsilon(0.04));
  const std::vector<double> b = {3.0, 1.0};
  const auto col = sample_column(b, 4, rng);
  CHECK(std::count(col.begin(), col.end(), 0) == 3);
  const std::vector<double> zero = {0.0, 0.0};
  CHECK_THROWS_AS(sample_column(zero, 2, rng), InvalidArgument);
  const std::vector<double> negative = {-1.0, 2.0};
  CHECK_THROWS_AS(sample_column(negative, 1, rng), InvalidArgument);
}

TEST_CASE("sample_dataset examples") {
  const Schema s = testing::binary_schema(2);
  DistributionEstimate point;
  point.schema = s;
  point.probs.assign(8, 0.0);
  point.probs[5] = 1.0;
  Rng rng(3);
  const Dataset same = sample_dataset(point, 7, rng);
  for (std::size_t i = 0; i < 7; ++i) CHECK(JointDomain(s).encode(same.row(i)) == 5);

  DistributionEstimate half = point;
  half.probs.assign(8, 0.0);
  half.probs[1] = half.probs[6] = 0.5;
  const Dataset h = sample_dataset(half, 100, rng);
  std::size_t c1 = 0;
  for (std::size_t i = 0; i < 100; ++i) c1 += JointDomain(s).encode(h.row(i)) == 1;
  CHECK(c1 == 50);

  DistributionEstimate rand = point;
  Rng prng(5);
  double tot = 0.0;
  for (double& p : rand.probs) tot += (p = prng.uniform());
  for (double& p : rand.probs) p /= tot;
  const Dataset big = sample_dataset(rand, 10000, rng);
  const JointDomain dom(s);
  for (const auto& q : enumerate_queries(2, 3)) {
    const Marginal got = compute_marginal(big, q);
    std::vector<double> want(got.counts.size(), 0.0);
    const auto proj = dom.projection(q);
    for (std::size_t c = 0; c < dom.size(); ++c) want[proj[c]] += 10000.0 * rand.probs[c];
    double l1 = 0.0;
    for (std::size_t t = 0; t < want.size(); ++t) l1 += std::abs(want[t] - got.counts[t]);
    CHECK(l1 / 10000.0 <= 0.05);
  }
}

TEST_CASE("mechanism end to end") {
  const Schema s = testing::binary_schema(2);
  const Dataset real = testing::labelled_dataset(s, 12, 0.1, 3);
  MechanismConfig cfg;
  cfg.synth.mode = GeneratorMode::brute;
  cfg.sigma_override = 0.0;
  cfg.seed = 4;
  const MechanismOutput out = generate_private_synthetic(real, cfg);
  CHECK(out.synthetic.schema() == real.schema());
  CHECK(out.synthetic.size() == real.size());
  for (const auto& q : enumerate_queries(2, 2))
    CHECK(compute_marginal(out.synthetic, q).counts == compute_marginal(real, q).counts);
  CHECK(out.report.achieved_vs_noisy.max == 0.0);

  cfg.sigma_override.reset();
  cfg.synth.mode = GeneratorMode::fitted;
  const MechanismOutput a = generate_private_synthetic(real, cfg);
  const MechanismOutput b = generate_private_synthetic(real, cfg);
  CHECK(std::equal(a.synthetic.codes().begin(), a.synthetic.codes().end(), b.synthetic.codes().begin()));
  CHECK(a.report.sigma == doctest::Approx(calibrate(2, 2, cfg.privacy, SensitivityMode::exact).sigma));
  CHECK(a.report.query_count == 6);
  CHECK_FALSE(a.report.non_private_vs_real.has_value());

  const auto j = nlohmann::json::parse(provenance_json(a.report));
  CHECK(j.at("mode") == "fitted");
  CHECK(j.contains("sigma"));
}

TEST_CASE("generator mode strings") {
  CHECK(generator_mode_from_string("brute") == GeneratorMode::brute);
  CHECK(to_string(GeneratorMode::fitted) == "fitted");
  CHECK_THROWS_AS(generator_mode_from_string("pgm"), InvalidArgument);
}
