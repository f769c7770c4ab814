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

#include <filesystem>

#include "margsyn/config.hpp"
#include "margsyn/error.hpp"

using namespace margsyn;

TEST_CASE("schema json round trip") {
  const Schema s = parse_schema_json(R"({"attributes": [{"name": "a", "domain_size": 3}, {"name": "y", "domain_size": 2}]})");
  CHECK(s.num_features() == 1);
  CHECK(s.domain_size(0) == 3);
  CHECK(parse_schema_json(schema_json(s)) == s);
  const auto p = std::filesystem::temp_directory_path() / "margsyn_test_schema.json";
  save_schema(p, s);
  CHECK(load_schema(p) == s);
}

TEST_CASE("schema json errors") {
  CHECK_THROWS_AS(parse_schema_json("{"), ParseError);
  CHECK_THROWS_AS(parse_schema_json(R"({"attrs": []})"), ParseError);
  CHECK_THROWS_AS(parse_schema_json(R"({"attributes": [{"name": "a"}]})"), ParseError);
  CHECK_THROWS_AS(load_schema("/nonexistent/margsyn.json"), Error);
}

TEST_CASE("rules json") {
  const PreprocessRules r = parse_rules_json(R"({
    "columns": [
      {"name": "age", "kind": "continuous", "buckets": 4, "lower": 0, "upper": 100},
      {"name": "color", "kind": "categorical", "levels": ["r", "g"]},
      {"name": "n", "domain_size": 5}
    ],
    "missing_tokens": ["?"]
  })");
  REQUIRE(r.columns.size() == 3);
  CHECK(r.columns[0].kind == ColumnKind::continuous);
  CHECK(r.columns[0].buckets == 4);
  CHECK(r.columns[1].levels == std::vector<std::string>{"r", "g"});
  CHECK(r.columns[2].kind == ColumnKind::integer);
  CHECK(r.missing_tokens == std::vector<std::string>{"?"});
  CHECK_THROWS_AS(parse_rules_json(R"({"columns": [{"name": "a", "kind": "fuzzy"}]})"), ParseError);
  CHECK_THROWS_AS(parse_rules_json("[1,"), ParseError);
}

TEST_CASE("experiment json") {
  const ExperimentSpec spec = parse_experiment_json(R"({
    "data": "train.csv", "schema": "/abs/schema.json",
    "epsilons": [0.1, 1.0], "repeats": 3, "d": 3, "tau": "inf",
    "loss": {"kind": "phi_gamma", "gamma": 0.25},
    "mode": "brute", "sensitivity": "paper", "seed": 9,
    "fit": {"iters": 10}, "brute": {"enumeration_cap": 5}, "train": {"max_iters": 7}
  })", "/base");
  CHECK(spec.data == std::filesystem::path("/base/train.csv"));
  CHECK(spec.schema == std::filesystem::path("/abs/schema.json"));
  const ExperimentConfig& c = spec.config;
  CHECK(c.epsilons == std::vector<double>{0.1, 1.0});
  CHECK(c.repeats == 3);
  CHECK(c.d == 3);
  CHECK(std::isinf(c.tau));
  CHECK(c.loss.kind == LossKind::phi_gamma);
  CHECK(c.loss.gamma == 0.25);
  CHECK(c.synth.mode == GeneratorMode::brute);
  CHECK(c.sensitivity == SensitivityMode::paper_bound);
  CHECK(c.seed == 9);
  CHECK(c.synth.fit.iters == 10);
  CHECK(c.synth.brute.enumeration_cap == 5.0);
  CHECK(c.train.max_iters == 7);

  CHECK_THROWS_AS(parse_experiment_json(R"({"data": "x", "schema": "y"})", ""), ParseError);
  CHECK_THROWS_AS(parse_experiment_json(R"({"data": "x", "schema": "y", "epsilons": [1], "tau": "big"})", ""), ParseError);
  CHECK_THROWS(parse_experiment_json(R"({"data": "x", "schema": "y", "epsilons": [1], "mode": "pgm"})", ""));
}
