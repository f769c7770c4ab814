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

#include "margsyn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "margsyn/error.hpp"
#include "margsyn/rng.hpp"

namespace margsyn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

// Field order shared by runs.csv, aggregates.csv and the JSON report.
struct MetricField {
  const char* name;
  double MetricsReport::*member;
};

constexpr MetricField kFields[] = {
    {"accuracy", &MetricsReport::accuracy},
    {"roc_auc", &MetricsReport::roc_auc},
    {"empirical_risk", &MetricsReport::empirical_risk},
    {"reference_risk", &MetricsReport::reference_risk},
    {"excess_empirical_risk", &MetricsReport::excess_empirical_risk},
    {"normalized_l1_mean", &MetricsReport::normalized_l1_mean},
    {"normalized_l1_max", &MetricsReport::normalized_l1_max},
};

nlohmann::json metrics_json(const MetricsReport& m) {
  nlohmann::json j;
  for (const auto& f : kFields) {
    const double v = m.*(f.member);
    if (std::isfinite(v))
      j[f.name] = v;
    else
      j[f.name] = nullptr;
  }
  return j;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace

double accuracy(const LinearModel& model, const EncodedData& test) {
  if (test.rows == 0) throw InvalidArgument("accuracy of an empty test set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test.rows; ++i)
    if (static_cast<double>(predict(model, test.features_of(i)).label) == test.y[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(test.rows);
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}

double roc_auc(std::span<const ScoredLabel> scores) {
  std::size_t pos = 0, neg = 0;
  std::vector<double> s;
  s.reserve(scores.size());
  for (const auto& e : scores) {
    (e.y > 0 ? pos : neg) += 1;
    s.push_back(e.score);
  }
  if (pos == 0 || neg == 0) throw InvalidArgument("ROC-AUC needs both classes in the test set");
  const auto rank = average_ranks(s);
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i].y > 0) pos_rank_sum += rank[i];
  const double p = static_cast<double>(pos), q = static_cast<double>(neg);
  const double u = pos_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * q);
}

double roc_auc(const LinearModel& model, const EncodedData& test) {
  std::vector<ScoredLabel> s;
  s.reserve(test.rows);
  for (std::size_t i = 0; i < test.rows; ++i)
    s.push_back({predict(model, test.features_of(i)).score, test.y[i] > 0 ? 1 : -1});
  return roc_auc(s);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("Spearman correlation needs two equal-length series");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return kNaN;
  return sxy / std::sqrt(sxx * syy);
}

L1Summary normalized_marginal_error(const Dataset& real, const Dataset& synthetic, std::size_t d) {
  if (real.empty()) throw InvalidArgument("normalized marginal error needs a non-empty real dataset");
  const auto queries = enumerate_queries(real.schema().num_features(), d);
  const auto a = compute_marginals(real, queries);
  const auto b = compute_marginals(synthetic, queries);
  L1Summary s = l1_summary(a, b);
  s.max /= static_cast<double>(real.size());
  s.mean /= static_cast<double>(real.size());
  return s;
}

void ExperimentConfig::validate() const {
  if (epsilons.empty()) throw InvalidArgument("experiment needs a non-empty epsilon grid");
  if (repeats == 0) throw InvalidArgument("experiment needs repeats >= 1");
  for (double e : epsilons) PrivacyParams{e, delta, lambda, allow_large_epsilon}.validate();
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidArgument("train fraction must lie in (0, 1)");
  if (!(tau >= 0.0)) throw InvalidArgument("tau must be non-negative");
  loss.validate();
  train.validate();
}

void write_runs_csv(const std::filesystem::path& path, std::span<const RunRow> runs) {
  std::ostringstream os;
  os << "epsilon,repeat,seed,sigma";
  for (const auto& f : kFields) os << ',' << f.name;
  os << ",status\n";
  for (const auto& r : runs) {
    os << fmt(r.epsilon) << ',' << r.repeat << ',' << r.seed << ',' << fmt(r.sigma);
    for (const auto& f : kFields) os << ',' << (r.ok ? fmt(r.metrics.*(f.member)) : std::string());
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    os << ',' << status << '\n';
  }
  write_text(path, os.str());
}

void write_aggregates_csv(const std::filesystem::path& path, std::span<const AggregateRow> rows) {
  std::ostringstream os;
  os << "epsilon,completed";
  for (const auto& f : kFields) os << ',' << f.name << "_mean," << f.name << "_std";
  os << '\n';
  for (const auto& a : rows) {
    os << fmt(a.epsilon) << ',' << a.completed;
    for (const auto& f : kFields) os << ',' << fmt(a.mean.*(f.member)) << ',' << fmt(a.stddev.*(f.member));
    os << '\n';
  }
  write_text(path, os.str());
}

ExperimentResult run_experiment(const Dataset& real, const ExperimentConfig& cfg) {
  cfg.validate();
  const bool write = !cfg.output_dir.empty();
  if (write) ensure_dir(cfg.output_dir / "provenance");

  const auto [train, test] = split(real, SplitSpec{cfg.train_fraction, derive_seed(cfg.seed, {0x5e11})});
  if (train.empty() || test.empty()) throw InvalidArgument("split left an empty train or test part");
  const EncodedData etrain = encode(train);
  const EncodedData etest = encode(test);
  const TrainResult reference = train_projected(etrain, cfg.loss, cfg.tau, cfg.train);

  ExperimentResult res;
  res.real_baseline.accuracy = accuracy(reference.model, etest);
  res.real_baseline.roc_auc = roc_auc(reference.model, etest);
  res.real_baseline.empirical_risk = reference.objective;
  res.real_baseline.reference_risk = reference.objective;

  for (std::size_t ei = 0; ei < cfg.epsilons.size(); ++ei) {
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
      RunRow row;
      row.epsilon = cfg.epsilons[ei];
      row.repeat = r;
      row.seed = derive_seed(cfg.seed, {ei + 1, r});
      try {
        MechanismConfig mc;
        mc.d = cfg.d;
        mc.privacy = PrivacyParams{row.epsilon, cfg.delta, cfg.lambda, cfg.allow_large_epsilon};
        mc.sensitivity = cfg.sensitivity;
        mc.synth = cfg.synth;
        mc.seed = row.seed;
        mc.sigma_override = cfg.sigma_override;
        MechanismOutput out = generate_private_synthetic(train, mc);
        row.sigma = out.report.sigma;
        const TrainResult syn = train_projected(encode(out.synthetic), cfg.loss, cfg.tau, cfg.train);
        MetricsReport& m = row.metrics;
        m.accuracy = accuracy(syn.model, etest);
        m.roc_auc = roc_auc(syn.model, etest);
        m.empirical_risk = empirical_risk(syn.model, etrain);
        m.reference_risk = reference.objective;
        m.excess_empirical_risk = m.empirical_risk - m.reference_risk;
        const L1Summary l1 = normalized_marginal_error(train, out.synthetic, cfg.d);
        m.normalized_l1_mean = l1.mean;
        m.normalized_l1_max = l1.max;
        row.ok = true;
        row.status = "ok";
        if (write) {
          out.report.non_private_vs_real = real_marginal_gap(train, out.synthetic, out.measurements.marginals);
          write_text(cfg.output_dir / "provenance" / ("eps" + std::to_string(ei) + "_rep" + std::to_string(r) + ".json"),
                     provenance_json(out.report) + "\n");
        }
      } catch (const std::exception& e) {
        row.ok = false;
        row.status = std::string("failed: ") + e.what();
      }
      res.runs.push_back(std::move(row));
      if (write) write_runs_csv(cfg.output_dir / "runs.csv", res.runs);
    }
  }

  std::vector<double> grid, l1_means, excess_means;
  for (std::size_t ei = 0; ei < cfg.epsilons.size(); ++ei) {
    AggregateRow agg;
    agg.epsilon = cfg.epsilons[ei];
    std::vector<const RunRow*> done;
    for (std::size_t r = 0; r < cfg.repeats; ++r)
      if (res.runs[ei * cfg.repeats + r].ok) done.push_back(&res.runs[ei * cfg.repeats + r]);
    agg.completed = done.size();
    for (const auto& f : kFields) {
      if (done.empty()) {
        agg.mean.*(f.member) = kNaN;
        agg.stddev.*(f.member) = kNaN;
        continue;
      }
      double sum = 0.0;
      for (const RunRow* r : done) sum += r->metrics.*(f.member);
      const double mean = sum / static_cast<double>(done.size());
      double ss = 0.0;
      for (const RunRow* r : done) ss += (r->metrics.*(f.member) - mean) * (r->metrics.*(f.member) - mean);
      agg.mean.*(f.member) = mean;
      agg.stddev.*(f.member) = done.size() > 1 ? std::sqrt(ss / static_cast<double>(done.size() - 1)) : kNaN;
    }
    if (agg.completed > 0) {
      grid.push_back(agg.epsilon);
      l1_means.push_back(agg.mean.normalized_l1_mean);
      excess_means.push_back(agg.mean.excess_empirical_risk);
    }
    res.aggregates.push_back(agg);
  }
  res.all_completed = std::all_of(res.runs.begin(), res.runs.end(), [](const RunRow& r) { return r.ok; });
  res.spearman_l1 = grid.size() >= 2 ? spearman(grid, l1_means) : kNaN;
  res.spearman_excess = grid.size() >= 2 ? spearman(grid, excess_means) : kNaN;

  if (write) {
    write_aggregates_csv(cfg.output_dir / "aggregates.csv", res.aggregates);
    nlohmann::json j;
    j["epsilons"] = cfg.epsilons;
    j["repeats"] = cfg.repeats;
    j["d"] = cfg.d;
    if (std::isinf(cfg.tau))
      j["tau"] = "inf";
    else
      j["tau"] = cfg.tau;
    j["loss"] = cfg.loss.describe();
    j["mode"] = std::string(to_string(cfg.synth.mode));
    j["sensitivity"] = std::string(to_string(cfg.sensitivity));
    j["delta"] = cfg.delta;
    j["seed"] = cfg.seed;
    j["train_rows"] = train.size();
    j["test_rows"] = test.size();
    j["real_baseline"] = metrics_json(res.real_baseline);
    j["excess_risk_split"] = "train";
    j["accuracy_split"] = "test";
    nlohmann::json aggs = nlohmann::json::array();
    for (const auto& a : res.aggregates)
      aggs.push_back({{"epsilon", a.epsilon},
                      {"completed", a.completed},
                      {"mean", metrics_json(a.mean)},
                      {"std", metrics_json(a.stddev)}});
    j["aggregates"] = aggs;
    j["spearman_epsilon_vs_l1"] = std::isfinite(res.spearman_l1) ? nlohmann::json(res.spearman_l1) : nlohmann::json();
    j["spearman_epsilon_vs_excess_risk"] =
        std::isfinite(res.spearman_excess) ? nlohmann::json(res.spearman_excess) : nlohmann::json();
    j["all_completed"] = res.all_completed;
    write_text(cfg.output_dir / "report.json", j.dump(2) + "\n");
  }
  return res;
}

}  // namespace margsyn
