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

#include "margsyn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "margsyn/error.hpp"
#include "margsyn/rng.hpp"

namespace margsyn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

// Plain comma splitting; quoted fields with embedded commas are not supported.
std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    std::string_view cell = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    cells.emplace_back(trim(cell));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

bool blank(std::string_view line) { return trim(line).empty(); }

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

}  // namespace

// ---- Schema ----------------------------------------------------------------

Schema::Schema(std::vector<Attribute> attributes) : attributes_(std::move(attributes)) {
  if (attributes_.size() < 2) throw InvalidArgument("schema needs at least one feature and a label");
  std::unordered_set<std::string> seen;
  for (const auto& a : attributes_) {
    if (a.name.empty()) throw InvalidArgument("attribute names must be non-empty");
    if (!seen.insert(a.name).second) throw InvalidArgument("duplicate attribute name '" + a.name + "'");
    if (a.domain_size < 2) throw InvalidArgument("attribute '" + a.name + "' needs domain size >= 2");
    max_domain_size_ = std::max(max_domain_size_, a.domain_size);
  }
  if (attributes_.back().domain_size != 2) throw InvalidArgument("label attribute must be binary");
}

const Attribute& Schema::attribute(std::size_t i) const {
  if (i >= attributes_.size()) throw InvalidArgument("attribute index out of range");
  return attributes_[i];
}

std::size_t Schema::joint_domain_size() const {
  std::size_t total = 1;
  for (const auto& a : attributes_) {
    if (total > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(a.domain_size))
      throw CapacityError("joint domain size overflows");
    total *= static_cast<std::size_t>(a.domain_size);
  }
  return total;
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t i = 0; i < attributes_.size(); ++i)
    if (attributes_[i].name == name) return i;
  return std::nullopt;
}

std::uint64_t Schema::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (const auto& a : attributes_) {
    for (char c : a.name) feed(static_cast<unsigned char>(c));
    feed(0);
    for (int k = 0; k < 4; ++k) feed(static_cast<unsigned char>((a.domain_size >> (8 * k)) & 0xff));
  }
  return h;
}

// ---- Dataset ---------------------------------------------------------------

Dataset::Dataset(Schema schema) : schema_(std::move(schema)), width_(schema_.num_attributes()) {}

Dataset::Dataset(Schema schema, std::vector<Code> codes)
    : schema_(std::move(schema)), width_(schema_.num_attributes()), codes_(std::move(codes)) {
  if (width_ == 0) throw InvalidArgument("dataset needs a non-empty schema");
  if (codes_.size() % width_ != 0) throw InvalidArgument("code buffer is not a whole number of rows");
  n_ = codes_.size() / width_;
  for (std::size_t i = 0; i < codes_.size(); ++i) {
    const int l = schema_.attributes()[i % width_].domain_size;
    if (codes_[i] < 0 || codes_[i] >= l)
      throw DomainError("code " + std::to_string(codes_[i]) + " out of range for attribute '" +
                        schema_.attributes()[i % width_].name + "'");
  }
}

std::span<const Code> Dataset::row(std::size_t i) const {
  if (i >= n_) throw InvalidArgument("row index out of range");
  return {codes_.data() + i * width_, width_};
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<Code> out;
  out.reserve(rows.size() * width_);
  for (std::size_t r : rows) {
    auto src = row(r);
    out.insert(out.end(), src.begin(), src.end());
  }
  return Dataset(schema_, std::move(out));
}

// ---- CSV -------------------------------------------------------------------

Dataset read_csv(std::istream& in, const Schema& schema) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    have_header = true;
    break;
  }
  if (!have_header) throw ParseError("missing header row");
  const auto header = split_line(line);
  if (header.size() != schema.num_attributes()) throw ParseError("header has wrong number of columns");
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] != schema.attributes()[j].name)
      throw ParseError("header column " + std::to_string(j) + " is '" + header[j] + "', expected '" +
                       schema.attributes()[j].name + "'");

  std::vector<Code> codes;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                       " cells, got " + std::to_string(cells.size()));
    for (std::size_t j = 0; j < cells.size(); ++j) {
      Code value = 0;
      const auto& c = cells[j];
      auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), value);
      if (ec != std::errc() || ptr != c.data() + c.size() || c.empty())
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse '" + c + "' as an integer code");
      if (value < 0 || value >= schema.attributes()[j].domain_size)
        throw DomainError("line " + std::to_string(line_no) + ": code " + c + " outside domain of '" +
                          schema.attributes()[j].name + "'");
      codes.push_back(value);
    }
  }
  return Dataset(schema, std::move(codes));
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  auto in = open_input(path);
  return read_csv(in, schema);
}

void write_csv(std::ostream& out, const Dataset& ds) {
  const auto& attrs = ds.schema().attributes();
  for (std::size_t j = 0; j < attrs.size(); ++j) out << (j ? "," : "") << attrs[j].name;
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto r = ds.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << r[j];
    out << '\n';
  }
}

void save_csv(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  write_csv(out, ds);
}

// ---- encoding --------------------------------------------------------------

double encode_feature(Code code, int domain_size) {
  if (domain_size < 2) throw InvalidArgument("domain size must be >= 2");
  if (code < 0 || code >= domain_size) throw DomainError("code outside domain");
  return 2.0 * static_cast<double>(code) / static_cast<double>(domain_size - 1) - 1.0;
}

double encode_label(Code code) {
  if (code != 0 && code != 1) throw DomainError("label code must be 0 or 1");
  return code == 1 ? 1.0 : -1.0;
}

EncodedData encode(const Dataset& ds) {
  EncodedData e;
  e.rows = ds.size();
  e.features = ds.schema().num_features();
  e.x.reserve(e.rows * e.features);
  e.y.reserve(e.rows);
  const auto& attrs = ds.schema().attributes();
  for (std::size_t i = 0; i < e.rows; ++i) {
    auto r = ds.row(i);
    for (std::size_t j = 0; j < e.features; ++j) e.x.push_back(encode_feature(r[j], attrs[j].domain_size));
    e.y.push_back(encode_label(r[e.features]));
  }
  return e;
}

// ---- split -----------------------------------------------------------------

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw InvalidArgument("train_fraction must lie in (0, 1)");
  const std::size_t n = ds.size();
  if (n < 2) throw InvalidArgument("need at least 2 rows to split");
  const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train == n) throw InvalidArgument("split leaves one side empty");

  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(derive_seed(spec.seed, {0x5b1174}));
  for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);

  std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {ds.subset(train), ds.subset(test)};
}

// ---- preprocessing ---------------------------------------------------------

RawTable read_raw_csv(std::istream& in) {
  RawTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    if (!have_header) {
      t.header = split_line(line);
      have_header = true;
      continue;
    }
    auto cells = split_line(line);
    if (cells.size() != t.header.size())
      throw ParseError("raw row has " + std::to_string(cells.size()) + " cells, header has " +
                       std::to_string(t.header.size()));
    t.rows.push_back(std::move(cells));
  }
  if (!have_header) throw ParseError("missing header row");
  return t;
}

RawTable load_raw_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_raw_csv(in);
}

int bucket_of(double value, double lower, double upper, int buckets) {
  if (buckets < 1) throw InvalidArgument("bucket count must be positive");
  if (!(upper > lower)) return 0;
  if (value < lower || value > upper) throw DomainError("value outside bucketing range");
  const double width = (upper - lower) / buckets;
  int b = static_cast<int>(std::floor((value - lower) / width));
  return std::clamp(b, 0, buckets - 1);
}

namespace {

double parse_real(const std::string& s, const std::string& column) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError("column '" + column + "': cannot parse '" + s + "' as a number");
  return v;
}

long long parse_integer(const std::string& s, const std::string& column) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError("column '" + column + "': cannot parse '" + s + "' as an integer");
  return v;
}

}  // namespace

Dataset preprocess(const RawTable& raw, const PreprocessRules& rules) {
  if (rules.columns.size() < 2) throw InvalidArgument("rules need at least one feature and a label");

  std::map<std::string, std::size_t> column_of;
  for (std::size_t j = 0; j < raw.header.size(); ++j) column_of[raw.header[j]] = j;
  std::vector<std::size_t> source;
  for (const auto& rule : rules.columns) {
    auto it = column_of.find(rule.name);
    if (it == column_of.end()) throw InvalidArgument("rule names unknown attribute '" + rule.name + "'");
    source.push_back(it->second);
  }
  if (rules.columns.size() != raw.header.size()) {
    std::set<std::string> named;
    for (const auto& r : rules.columns) named.insert(r.name);
    for (const auto& h : raw.header)
      if (!named.count(h)) throw InvalidArgument("no rule for attribute '" + h + "'");
  }

  // 1. drop rows with a missing cell
  const std::set<std::string> missing(rules.missing_tokens.begin(), rules.missing_tokens.end());
  std::vector<const std::vector<std::string>*> kept;
  for (const auto& row : raw.rows) {
    bool ok = true;
    for (std::size_t s : source)
      if (missing.count(row[s])) {
        ok = false;
        break;
      }
    if (ok) kept.push_back(&row);
  }
  if (kept.empty()) throw InvalidArgument("preprocessing dropped every row");

  const std::size_t width = rules.columns.size();
  std::vector<Code> codes(kept.size() * width);
  std::vector<Attribute> attrs;

  for (std::size_t j = 0; j < width; ++j) {
    const auto& rule = rules.columns[j];
    const std::size_t src = source[j];
    int domain = 0;
    switch (rule.kind) {
      case ColumnKind::categorical: {
        std::vector<std::string> levels = rule.levels;
        if (levels.empty()) {
          std::set<std::string> distinct;
          for (auto* row : kept) distinct.insert((*row)[src]);
          levels.assign(distinct.begin(), distinct.end());
        }
        std::map<std::string, int> index;
        for (std::size_t k = 0; k < levels.size(); ++k) index.emplace(levels[k], static_cast<int>(k));
        for (std::size_t i = 0; i < kept.size(); ++i) {
          auto it = index.find((*kept[i])[src]);
          if (it == index.end())
            throw DomainError("column '" + rule.name + "': unlisted level '" + (*kept[i])[src] + "'");
          codes[i * width + j] = it->second;
        }
        domain = std::max<int>(2, static_cast<int>(levels.size()));
        break;
      }
      case ColumnKind::continuous: {
        if (rule.buckets < 2) throw InvalidArgument("column '" + rule.name + "': need at least 2 buckets");
        std::vector<double> values(kept.size());
        for (std::size_t i = 0; i < kept.size(); ++i) values[i] = parse_real((*kept[i])[src], rule.name);
        const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
        const double lo = rule.lower.value_or(*mn);
        const double hi = rule.upper.value_or(*mx);
        for (std::size_t i = 0; i < kept.size(); ++i)
          codes[i * width + j] = bucket_of(values[i], lo, hi, rule.buckets);
        domain = rule.buckets;
        break;
      }
      case ColumnKind::integer: {
        std::vector<long long> values(kept.size());
        for (std::size_t i = 0; i < kept.size(); ++i) values[i] = parse_integer((*kept[i])[src], rule.name);
        const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
        // 4. rebase so the smallest code is 0; columns given with a fixed
        // domain are taken as already 0-based.
        const long long base = rule.domain_size ? 0 : *mn;
        domain = rule.domain_size ? *rule.domain_size : std::max<int>(2, static_cast<int>(*mx - *mn + 1));
        for (std::size_t i = 0; i < kept.size(); ++i) {
          const long long c = values[i] - base;
          if (c < 0 || c >= domain) throw DomainError("column '" + rule.name + "': value outside its domain");
          codes[i * width + j] = static_cast<Code>(c);
        }
        break;
      }
    }
    if (rule.domain_size && rule.kind != ColumnKind::integer && *rule.domain_size != domain)
      throw InvalidArgument("column '" + rule.name + "': declared domain size disagrees with rule");
    attrs.push_back({rule.name, domain});
  }
  return Dataset(Schema(std::move(attrs)), std::move(codes));
}

}  // namespace margsyn
