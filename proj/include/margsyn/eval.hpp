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

#ifndef MARGSYN_EVAL_HPP_
#define MARGSYN_EVAL_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "margsyn/dataset.hpp"
#include "margsyn/learn.hpp"
#include "margsyn/privacy.hpp"
#include "margsyn/synth.hpp"

namespace margsyn {

double accuracy(const LinearModel& model, const EncodedData& test);

struct ScoredLabel {
  double score = 0.0;
  int y = 1;  // -1 or +1
};

/// P(score+ > score-) + P(tie)/2 via rank sums with average ranks.
double roc_auc(std::span<const ScoredLabel> scores);
double roc_auc(const LinearModel& model, const EncodedData& test);

/// Average ranks (1-based) with ties sharing the mean rank.
std::vector<double> average_ranks(std::span<const double> v);
/// Pearson correlation of average ranks; NaN when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

struct MetricsReport {
  double accuracy = 0.0;
  double roc_auc = 0.0;
  double empirical_risk = 0.0;         // L(w_s, D_train)
  double reference_risk = 0.0;         // L(w_r, D_train)
  double excess_empirical_risk = 0.0;  // L(w_s, D_train) - L(w_r, D_train)
  double normalized_l1_mean = 0.0;
  double normalized_l1_max = 0.0;
};

/// Per-query l1 / n between the real and synthetic marginals.
L1Summary normalized_marginal_error(const Dataset& real, const Dataset& synthetic, std::size_t d);

struct ExperimentConfig {
  std::vector<double> epsilons;
  std::size_t repeats = 10;
  std::size_t d = 2;
  double tau = kUnbounded;
  LossSpec loss = LossSpec::logistic();
  SynthOptions synth;
  SensitivityMode sensitivity = SensitivityMode::exact;
  double delta = 1e-5;
  double lambda = 3.0;
  bool allow_large_epsilon = false;
  double train_fraction = 0.8;
  TrainConfig train;
  std::uint64_t seed = 0;
  std::optional<double> sigma_override;  // test hook
  std::filesystem::path output_dir;      // empty: no files written

  void validate() const;
};

struct RunRow {
  double epsilon = 0.0;
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  double sigma = 0.0;
  MetricsReport metrics;
  bool ok = false;
  std::string status;
};

struct AggregateRow {
  double epsilon = 0.0;
  std::size_t completed = 0;
  MetricsReport mean;
  MetricsReport stddev;  // sample standard deviation; NaN for a single run
};

struct ExperimentResult {
  std::vector<RunRow> runs;
  std::vector<AggregateRow> aggregates;
  MetricsReport real_baseline;  // w_r on the test split; l1 fields are 0
  double spearman_l1 = 0.0;     // epsilon vs mean normalized l1
  double spearman_excess = 0.0; // epsilon vs mean excess risk
  bool all_completed = false;
};

/// Train-on-synthetic, test-on-real over the epsilon grid. Writes runs.csv,
/// aggregates.csv and report.json when an output directory is set.
ExperimentResult run_experiment(const Dataset& real, const ExperimentConfig& cfg);

void write_runs_csv(const std::filesystem::path& path, std::span<const RunRow> runs);
void write_aggregates_csv(const std::filesystem::path& path, std::span<const AggregateRow> rows);

}  // namespace margsyn

#endif  // MARGSYN_EVAL_HPP_
