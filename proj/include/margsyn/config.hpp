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

#ifndef MARGSYN_CONFIG_HPP_
#define MARGSYN_CONFIG_HPP_

#include <filesystem>
#include <string>
#include <string_view>

#include "margsyn/dataset.hpp"
#include "margsyn/eval.hpp"

namespace margsyn {

/// {"attributes": [{"name": ..., "domain_size": ...}, ...]}, label last.
Schema parse_schema_json(std::string_view text);
std::string schema_json(const Schema& schema);
Schema load_schema(const std::filesystem::path& path);
void save_schema(const std::filesystem::path& path, const Schema& schema);

/// {"columns": [{"name", "kind", "levels", "buckets", "lower", "upper",
/// "domain_size"}, ...], "missing_tokens": [...]}, label last.
PreprocessRules parse_rules_json(std::string_view text);
PreprocessRules load_rules(const std::filesystem::path& path);

/// Experiment settings plus the data location. Relative paths resolve
/// against `base_dir`.
struct ExperimentSpec {
  ExperimentConfig config;
  std::filesystem::path data;
  std::filesystem::path schema;
};

ExperimentSpec parse_experiment_json(std::string_view text, const std::filesystem::path& base_dir);
ExperimentSpec load_experiment(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace margsyn

#endif  // MARGSYN_CONFIG_HPP_
