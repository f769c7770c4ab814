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
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "margsyn/error.hpp"
#include "margsyn/eval.hpp"
#include "support.hpp"

using namespace margsyn;

namespace {

// Pair counting: P(score_pos > score_neg) + 0.5 P(tie).
double auc_by_pairs(const std::vector<ScoredLabel>& s) {
  double wins = 0.0, pairs = 0.0;
  for (const auto& a : s)
    for (const auto& b : s)
      if (a.y > 0 && b.y < 0) {
        pairs += 1.0;
        wins += a.score > b.score ? 1.0 : (a.score == b.score ? 0.5 : 0.0);
      }
  return wins / pairs;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("margsyn_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("accuracy on a hand example") {
  EncodedData d;
  d.rows = 4;
  d.features = 1;
  d.x = {1.0, -1.0, 0.5, -0.5};
  d.y = {1.0, -1.0, -1.0, -1.0};
  LinearModel m;
  m.w = {1.0};
  CHECK(accuracy(m, d) == doctest::Approx(0.75));
}

TEST_CASE("roc auc matches pair counting") {
  Rng rng(8);
  for (int t = 0; t < 40; ++t) {
    std::vector<ScoredLabel> s;
    const std::size_t n = 2 + rng.index(40);
    for (std::size_t i = 0; i < n; ++i)
      s.push_back({std::round(rng.gaussian(2.0)), i == 0 ? 1 : (i == 1 ? -1 : (rng.uniform() < 0.5 ? 1 : -1))});
    CHECK(roc_auc(s) == doctest::Approx(auc_by_pairs(s)).epsilon(1e-12));
  }
  const std::vector<ScoredLabel> one_class = {{0.1, 1}, {0.3, 1}};
  CHECK_THROWS_AS(roc_auc(one_class), InvalidArgument);
}

TEST_CASE("ranks and spearman") {
  const std::vector<double> v = {3.0, 1.0, 3.0, 2.0};
  CHECK(average_ranks(v) == std::vector<double>{3.5, 1.0, 3.5, 2.0});
  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> down = {10, 8, 7, 3, 1};
  const std::vector<double> up = {1, 4, 9, 16, 25};
  CHECK(spearman(x, down) == doctest::Approx(-1.0));
  CHECK(spearman(x, up) == doctest::Approx(1.0));
  // Pearson on ranks with a tie.
  const std::vector<double> a = {1, 2, 3, 4};
  const std::vector<double> b = {1, 3, 2, 2};
  // ranks b = {1, 4, 2.5, 2.5}; centered a = {-1.5,-.5,.5,1.5}, b = {-1.5,1.5,0,0}
  const double want = (2.25 - 0.75) / std::sqrt(5.0 * 4.5);
  CHECK(spearman(a, b) == doctest::Approx(want));
  const std::vector<double> shorter = {1};
  CHECK_THROWS_AS(spearman(shorter, shorter), InvalidArgument);
}

TEST_CASE("normalized marginal error") {
  const Schema s = testing::binary_schema(2);
  const Dataset a = testing::random_dataset(s, 40, 1);
  CHECK(normalized_marginal_error(a, a, 2).max == 0.0);
  const Dataset b = testing::random_dataset(s, 40, 2);
  const L1Summary e = normalized_marginal_error(a, b, 2);
  double worst = 0.0, sum = 0.0;
  const auto qs = enumerate_queries(2, 2);
  for (const auto& q : qs) {
    const double v = l1_distance(compute_marginal(a, q), compute_marginal(b, q)) / 40.0;
    worst = std::max(worst, v);
    sum += v;
  }
  CHECK(e.max == doctest::Approx(worst));
  CHECK(e.mean == doctest::Approx(sum / static_cast<double>(qs.size())));
}

TEST_CASE("csv writers") {
  const auto dir = scratch("csv");
  RunRow ok;
  ok.epsilon = 1.0;
  ok.seed = 7;
  ok.sigma = 2.0;
  ok.ok = true;
  ok.status = "ok";
  ok.metrics.accuracy = 0.5;
  RunRow failed = ok;
  failed.ok = false;
  failed.repeat = 1;
  failed.status = "capacity, exceeded";
  const std::vector<RunRow> runs = {ok, failed};
  write_runs_csv(dir / "runs.csv", runs);
  const std::string text = slurp(dir / "runs.csv");
  CHECK(text.rfind("epsilon,repeat,seed,sigma,", 0) == 0);
  CHECK(text.find("capacity; exceeded") != std::string::npos);
  std::istringstream lines(text);
  std::string header, row1, row2;
  std::getline(lines, header);
  std::getline(lines, row1);
  std::getline(lines, row2);
  const auto commas = [](const std::string& s) { return std::count(s.begin(), s.end(), ','); };
  CHECK(commas(row1) == commas(header));
  CHECK(commas(row2) == commas(header));

  AggregateRow agg;
  agg.epsilon = 0.5;
  agg.completed = 3;
  const std::vector<AggregateRow> aggs = {agg};
  write_aggregates_csv(dir / "agg.csv", aggs);
  CHECK(slurp(dir / "agg.csv").rfind("epsilon,completed,accuracy_mean,accuracy_std", 0) == 0);
}

TEST_CASE("small experiment") {
  const Schema s = testing::binary_schema(3);
  const Dataset real = testing::labelled_dataset(s, 300, 0.1, 11);
  ExperimentConfig cfg;
  cfg.epsilons = {0.5, 2.0, 8.0};
  cfg.repeats = 2;
  cfg.allow_large_epsilon = true;
  cfg.seed = 5;
  cfg.train.max_iters = 300;
  cfg.output_dir = scratch("experiment");
  const ExperimentResult r = run_experiment(real, cfg);
  CHECK(r.all_completed);
  CHECK(r.runs.size() == 6);
  CHECK(r.aggregates.size() == 3);
  for (const auto& run : r.runs) {
    CHECK(run.ok);
    CHECK(run.metrics.excess_empirical_risk >= -1e-6);
    CHECK(run.metrics.accuracy >= 0.0);
    CHECK(run.metrics.accuracy <= 1.0);
  }
  CHECK(r.real_baseline.accuracy > 0.7);
  CHECK(std::filesystem::exists(cfg.output_dir / "runs.csv"));
  CHECK(std::filesystem::exists(cfg.output_dir / "aggregates.csv"));
  const auto j = nlohmann::json::parse(slurp(cfg.output_dir / "report.json"));
  CHECK(j.at("repeats") == 2);
  CHECK(j.at("aggregates").size() == 3);

  // Same seed, same numbers.
  cfg.output_dir.clear();
  const ExperimentResult again = run_experiment(real, cfg);
  for (std::size_t i = 0; i < r.runs.size(); ++i)
    CHECK(again.runs[i].metrics.empirical_risk == r.runs[i].metrics.empirical_risk);

  ExperimentConfig bad = cfg;
  bad.epsilons.clear();
  CHECK_THROWS_AS(run_experiment(real, bad), InvalidArgument);
}
