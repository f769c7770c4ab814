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

#ifndef MARGSYN_DATASET_HPP_
#define MARGSYN_DATASET_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace margsyn {

using Code = std::int32_t;

struct Attribute {
  std::string name;
  int domain_size = 2;

  friend bool operator==(const Attribute&, const Attribute&) = default;
};

/// Ordered attribute list with finite domains. The last attribute is the
/// binary label; the others are the m features. Attribute indices are
/// 0-based, so the label sits at index m.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<Attribute> attributes);

  std::size_t num_attributes() const noexcept { return attributes_.size(); }
  std::size_t num_features() const noexcept { return attributes_.empty() ? 0 : attributes_.size() - 1; }
  std::size_t label_index() const noexcept { return num_features(); }

  const std::vector<Attribute>& attributes() const noexcept { return attributes_; }
  const Attribute& attribute(std::size_t i) const;
  int domain_size(std::size_t i) const { return attribute(i).domain_size; }

  /// max_j l_j over all attributes, label included.
  int max_domain_size() const noexcept { return max_domain_size_; }

  /// Size of the full joint domain, prod_j l_j.
  std::size_t joint_domain_size() const;

  std::optional<std::size_t> find(std::string_view name) const;

  /// Stable 64-bit FNV-1a digest of names and domain sizes.
  std::uint64_t fingerprint() const;

  friend bool operator==(const Schema& a, const Schema& b) { return a.attributes_ == b.attributes_; }

 private:
  std::vector<Attribute> attributes_;
  int max_domain_size_ = 0;
};

/// Multiset of discrete records stored row-major (n x (m+1) codes).
/// Immutable after construction.
class Dataset {
 public:
  explicit Dataset(Schema schema);
  Dataset(Schema schema, std::vector<Code> codes);

  const Schema& schema() const noexcept { return schema_; }
  std::size_t size() const noexcept { return n_; }
  bool empty() const noexcept { return n_ == 0; }

  std::span<const Code> row(std::size_t i) const;
  Code at(std::size_t row, std::size_t attr) const { return codes_[row * width_ + attr]; }
  std::span<const Code> codes() const noexcept { return codes_; }

  Dataset subset(std::span<const std::size_t> rows) const;

 private:
  Schema schema_;
  std::size_t width_ = 0;
  std::size_t n_ = 0;
  std::vector<Code> codes_;
};

// ---- CSV -------------------------------------------------------------------

/// Reads a header row followed by integer code rows. The header must list
/// the schema's attribute names in order.
Dataset read_csv(std::istream& in, const Schema& schema);
Dataset load_csv(const std::filesystem::path& path, const Schema& schema);

void write_csv(std::ostream& out, const Dataset& ds);
void save_csv(const std::filesystem::path& path, const Dataset& ds);

// ---- numeric encoding ------------------------------------------------------

/// c -> 2c/(l-1) - 1, mapping codes 0..l-1 onto [-1, 1].
double encode_feature(Code code, int domain_size);

/// {0 -> -1, 1 -> +1}.
double encode_label(Code code);

/// Row-major numeric view: per row x in [-1,1]^m and y in {-1,+1}.
struct EncodedData {
  std::size_t rows = 0;
  std::size_t features = 0;
  std::vector<double> x;
  std::vector<double> y;

  std::span<const double> features_of(std::size_t i) const {
    return {x.data() + i * features, features};
  }
};

EncodedData encode(const Dataset& ds);

// ---- splitting -------------------------------------------------------------

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

/// Seeded random partition; |train| = round(train_fraction * n). Rows keep
/// their original relative order inside each part.
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

// ---- preprocessing ---------------------------------------------------------

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

RawTable read_raw_csv(std::istream& in);
RawTable load_raw_csv(const std::filesystem::path& path);

enum class ColumnKind {
  integer,      // already integer coded; rebased so the minimum code is 0
  categorical,  // text levels mapped to 0..k-1
  continuous,   // equal-width, left-closed buckets
};

struct ColumnRule {
  std::string name;
  ColumnKind kind = ColumnKind::integer;
  // categorical: explicit level order; empty means sorted distinct values.
  std::vector<std::string> levels;
  // continuous: bucket count and range; the range defaults to the observed
  // min/max after missing rows are dropped.
  int buckets = 0;
  std::optional<double> lower;
  std::optional<double> upper;
  // integer: fixed domain size; defaults to max - min + 1.
  std::optional<int> domain_size;
};

/// One rule per attribute, in output order; the last rule is the label.
struct PreprocessRules {
  std::vector<ColumnRule> columns;
  std::vector<std::string> missing_tokens = {"", "?", "NA", "NaN"};
};

/// Drops rows with missing cells, codes categoricals, buckets continuous
/// columns preserving order, and rebases integer columns to start at 0.
Dataset preprocess(const RawTable& raw, const PreprocessRules& rules);

/// Bucket index of value in [lower, upper] split into `buckets` equal-width
/// left-closed intervals; the upper endpoint falls into the last bucket.
int bucket_of(double value, double lower, double upper, int buckets);

}  // namespace margsyn

#endif  // MARGSYN_DATASET_HPP_
