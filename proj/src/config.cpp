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

#include "margsyn/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "margsyn/error.hpp"

namespace margsyn {

namespace {

using nlohmann::json;

json parse(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed ") + what + ": " + e.what());
  }
}

ColumnKind column_kind(const std::string& s) {
  if (s == "integer") return ColumnKind::integer;
  if (s == "categorical") return ColumnKind::categorical;
  if (s == "continuous") return ColumnKind::continuous;
  throw ParseError("unknown column kind '" + s + "'");
}

double tau_from(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kUnbounded;
    throw ParseError("tau must be a number or \"inf\"");
  }
  return j.get<double>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Schema parse_schema_json(std::string_view text) {
  const json j = parse(text, "schema");
  try {
    std::vector<Attribute> attrs;
    for (const auto& a : j.at("attributes")) attrs.push_back({a.at("name").get<std::string>(), a.at("domain_size").get<int>()});
    return Schema(std::move(attrs));
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad schema: ") + e.what());
  }
}

std::string schema_json(const Schema& schema) {
  json j;
  j["attributes"] = json::array();
  for (const auto& a : schema.attributes()) j["attributes"].push_back({{"name", a.name}, {"domain_size", a.domain_size}});
  return j.dump(2);
}

Schema load_schema(const std::filesystem::path& path) { return parse_schema_json(read_text_file(path)); }

void save_schema(const std::filesystem::path& path, const Schema& schema) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << schema_json(schema) << '\n';
}

PreprocessRules parse_rules_json(std::string_view text) {
  const json j = parse(text, "preprocessing rules");
  try {
    PreprocessRules rules;
    for (const auto& c : j.at("columns")) {
      ColumnRule r;
      r.name = c.at("name").get<std::string>();
      r.kind = column_kind(c.value("kind", std::string("integer")));
      if (c.contains("levels")) r.levels = c.at("levels").get<std::vector<std::string>>();
      r.buckets = c.value("buckets", 0);
      if (c.contains("lower")) r.lower = c.at("lower").get<double>();
      if (c.contains("upper")) r.upper = c.at("upper").get<double>();
      if (c.contains("domain_size")) r.domain_size = c.at("domain_size").get<int>();
      rules.columns.push_back(std::move(r));
    }
    if (j.contains("missing_tokens")) rules.missing_tokens = j.at("missing_tokens").get<std::vector<std::string>>();
    return rules;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad preprocessing rules: ") + e.what());
  }
}

PreprocessRules load_rules(const std::filesystem::path& path) { return parse_rules_json(read_text_file(path)); }

ExperimentSpec parse_experiment_json(std::string_view text, const std::filesystem::path& base_dir) {
  const json j = parse(text, "experiment config");
  ExperimentSpec spec;
  ExperimentConfig& c = spec.config;
  try {
    spec.data = resolve(base_dir, j.at("data").get<std::string>());
    spec.schema = resolve(base_dir, j.at("schema").get<std::string>());
    c.epsilons = j.at("epsilons").get<std::vector<double>>();
    c.repeats = j.value("repeats", c.repeats);
    c.d = j.value("d", c.d);
    if (j.contains("tau")) c.tau = tau_from(j.at("tau"));
    if (j.contains("loss")) c.loss = loss_from_json_text(j.at("loss").dump());
    c.synth.mode = generator_mode_from_string(j.value("mode", std::string("fitted")));
    c.sensitivity = sensitivity_mode_from_string(j.value("sensitivity", std::string("exact")));
    c.delta = j.value("delta", c.delta);
    c.lambda = j.value("lambda", c.lambda);
    c.allow_large_epsilon = j.value("allow_large_epsilon", c.allow_large_epsilon);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.seed = j.value("seed", c.seed);
    if (j.contains("sigma_override")) c.sigma_override = j.at("sigma_override").get<double>();
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
    if (j.contains("fit")) {
      const auto& f = j.at("fit");
      c.synth.fit.iters = f.value("iters", c.synth.fit.iters);
      c.synth.fit.tol = f.value("tol", c.synth.fit.tol);
      c.synth.fit.max_cells = f.value("max_cells", c.synth.fit.max_cells);
    }
    if (j.contains("brute")) {
      const auto& b = j.at("brute");
      c.synth.brute.enumeration_cap = b.value("enumeration_cap", c.synth.brute.enumeration_cap);
      c.synth.brute.allow_search = b.value("allow_search", c.synth.brute.allow_search);
      c.synth.brute.max_search_nodes = b.value("max_search_nodes", c.synth.brute.max_search_nodes);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      c.train.max_iters = t.value("max_iters", c.train.max_iters);
      c.train.step_size = t.value("step_size", c.train.step_size);
      c.train.decay = t.value("decay", c.train.decay);
      c.train.tolerance = t.value("tolerance", c.train.tolerance);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad experiment config: ") + e.what());
  }
  return spec;
}

ExperimentSpec load_experiment(const std::filesystem::path& path) {
  return parse_experiment_json(read_text_file(path), path.parent_path());
}

}  // namespace margsyn
