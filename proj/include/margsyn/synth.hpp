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

#ifndef MARGSYN_SYNTH_HPP_
#define MARGSYN_SYNTH_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "margsyn/dataset.hpp"
#include "margsyn/marginals.hpp"
#include "margsyn/privacy.hpp"
#include "margsyn/rng.hpp"

namespace margsyn {

/// Released measurements. `records` is the public dataset size n.
struct NoisyMarginalSet {
  Schema schema;
  std::vector<Marginal> marginals;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::size_t records = 0;

  void validate() const;
};

/// Dense estimate over the full joint domain, row-major like JointDomain.
struct DistributionEstimate {
  Schema schema;
  std::vector<double> probs;
  std::vector<double> objective_history;  // one entry per iteration, index 0 = start
  std::size_t iterations = 0;
};

/// Objective used by the brute-force search: max over queries of the l1
/// gap between target and the marginal of the count vector `cell_counts`.
double max_l1_objective(const NoisyMarginalSet& nm, std::span<const std::size_t> cell_counts);

/// Number of size-n multisets over `cells` items, saturating at `cap + 1`.
double multiset_count(std::size_t cells, std::size_t n, double cap);

struct BruteForceOptions {
  double enumeration_cap = 1e7;
  // Above the cap, run an exact integer-programming search instead of
  // failing. Its node budget bounds the work.
  bool allow_search = true;
  std::size_t max_search_nodes = 200000;
};

struct BruteForceResult {
  std::vector<std::size_t> cell_counts;  // per joint cell
  double objective = 0.0;
  bool enumerated = false;
  std::size_t candidates = 0;  // multisets visited or search nodes solved
};

/// Exact minimizer of max_l1_objective over all size-n multisets. Ties go
/// to the lexicographically smallest sorted cell-index sequence.
BruteForceResult brute_force_search(std::size_t n, const NoisyMarginalSet& nm, const BruteForceOptions& opts = {});

/// Rows in joint-cell order.
Dataset dataset_from_counts(const Schema& schema, std::span<const std::size_t> cell_counts);

Dataset brute_force_synth(std::size_t n, const NoisyMarginalSet& nm, const BruteForceOptions& opts = {});

struct FitOptions {
  std::size_t iters = 2000;
  double tol = 1e-12;
  std::size_t max_cells = 1000000;
};

DistributionEstimate fit_distribution(const NoisyMarginalSet& nm, const FitOptions& opts = {});

/// Floor of each fractional count plus a without-replacement draw of the
/// remainder, shuffled.
std::vector<Code> sample_column(std::span<const double> mu, std::size_t n, Rng& rng);

Dataset sample_dataset(const DistributionEstimate& dist, std::size_t n, Rng& rng);

enum class GeneratorMode { brute, fitted };
std::string_view to_string(GeneratorMode mode);
GeneratorMode generator_mode_from_string(std::string_view s);

struct SynthOptions {
  GeneratorMode mode = GeneratorMode::fitted;
  BruteForceOptions brute;
  FitOptions fit;
};

struct MechanismConfig {
  std::size_t d = 2;
  PrivacyParams privacy;
  SensitivityMode sensitivity = SensitivityMode::exact;
  SynthOptions synth;
  std::uint64_t seed = 0;
  // Test hook: replaces the calibrated noise scale.
  std::optional<double> sigma_override;
};

struct ProvenanceReport {
  NoiseCalibration calibration;
  double sigma = 0.0;
  PrivacyParams privacy;
  std::uint64_t seed = 0;
  GeneratorMode mode = GeneratorMode::fitted;
  std::size_t query_count = 0;
  std::size_t records = 0;
  L1Summary achieved_vs_noisy;
  std::size_t search_candidates = 0;
  bool enumerated = false;
  std::size_t fit_iterations = 0;
  // Filled only by evaluation code that holds the real data. Not private.
  std::optional<L1Summary> non_private_vs_real;
};

/// The only step that reads the real data.
NoisyMarginalSet measure(const Dataset& real, const MechanismConfig& cfg);

struct SynthesisOutput {
  Dataset synthetic;
  BruteForceResult brute;  // empty in fitted mode
  std::size_t fit_iterations = 0;
};

/// Post-processing of the measurements; sampling seed derives from nm.seed.
SynthesisOutput synthesize(std::size_t n, const NoisyMarginalSet& nm, const SynthOptions& opts);

struct MechanismOutput {
  Dataset synthetic;
  NoisyMarginalSet measurements;
  ProvenanceReport report;
};

MechanismOutput generate_private_synthetic(const Dataset& real, const MechanismConfig& cfg);

/// Non-private evaluation of a synthetic dataset against the real one on
/// the measured queries.
L1Summary real_marginal_gap(const Dataset& real, const Dataset& synthetic, std::span<const Marginal> measured);

std::string provenance_json(const ProvenanceReport& report);

}  // namespace margsyn

#endif  // MARGSYN_SYNTH_HPP_
