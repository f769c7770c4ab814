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

#include "margsyn/marginals.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "margsyn/error.hpp"

namespace margsyn {

MarginalQuery::MarginalQuery(std::vector<std::size_t> attributes) : attrs_(std::move(attributes)) {
  if (attrs_.empty()) throw InvalidArgument("marginal query must name at least one attribute");
  for (std::size_t i = 1; i < attrs_.size(); ++i)
    if (attrs_[i] <= attrs_[i - 1]) throw InvalidArgument("marginal query indices must be strictly increasing");
}

bool MarginalQuery::contains(std::size_t attr) const {
  return std::binary_search(attrs_.begin(), attrs_.end(), attr);
}

bool MarginalQuery::is_subset_of(const MarginalQuery& other) const {
  return std::includes(other.attrs_.begin(), other.attrs_.end(), attrs_.begin(), attrs_.end());
}

std::string MarginalQuery::to_string() const {
  std::string s = "{";
  for (std::size_t i = 0; i < attrs_.size(); ++i) s += (i ? "," : "") + std::to_string(attrs_[i]);
  return s + "}";
}

std::strong_ordering operator<=>(const MarginalQuery& a, const MarginalQuery& b) {
  if (auto c = a.attrs_.size() <=> b.attrs_.size(); c != 0) return c;
  return std::lexicographical_compare_three_way(a.attrs_.begin(), a.attrs_.end(), b.attrs_.begin(),
                                                b.attrs_.end());
}

std::size_t query_count(std::size_t m, std::size_t d) {
  std::size_t total = 0;
  std::size_t binom = 1;  // C(m+1, 0)
  for (std::size_t k = 1; k <= d && k <= m + 1; ++k) {
    binom = binom * (m + 2 - k) / k;
    total += binom;
  }
  return total;
}

std::vector<MarginalQuery> enumerate_queries(std::size_t m, std::size_t d) {
  if (d < 1 || d > m + 1) throw InvalidArgument("marginal order d must lie in [1, m+1]");
  std::vector<MarginalQuery> out;
  out.reserve(query_count(m, d));
  const std::size_t attrs = m + 1;
  for (std::size_t k = 1; k <= d; ++k) {
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
      out.emplace_back(idx);
      // next k-combination in lexicographic order
      std::size_t i = k;
      while (i > 0 && idx[i - 1] == attrs - k + (i - 1)) --i;
      if (i == 0) break;
      ++idx[i - 1];
      for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return out;
}

double Marginal::total() const {
  double s = 0.0;
  for (double c : counts) s += c;
  return s;
}

std::vector<std::size_t> marginal_shape(const Schema& schema, const MarginalQuery& q) {
  std::vector<std::size_t> shape;
  shape.reserve(q.size());
  for (std::size_t a : q.attributes()) {
    if (a >= schema.num_attributes())
      throw InvalidArgument("query " + q.to_string() + " names attribute outside the schema");
    shape.push_back(static_cast<std::size_t>(schema.domain_size(a)));
  }
  return shape;
}

std::size_t marginal_index(const Schema& schema, const MarginalQuery& q, std::span<const Code> record) {
  std::size_t idx = 0;
  for (std::size_t a : q.attributes()) idx = idx * static_cast<std::size_t>(schema.domain_size(a)) +
                                             static_cast<std::size_t>(record[a]);
  return idx;
}

Marginal compute_marginal(const Dataset& ds, const MarginalQuery& q) {
  Marginal h;
  h.query = q;
  h.shape = marginal_shape(ds.schema(), q);
  std::size_t cells = 1;
  for (std::size_t s : h.shape) cells *= s;
  std::vector<std::uint64_t> tally(cells, 0);
  for (std::size_t i = 0; i < ds.size(); ++i) ++tally[marginal_index(ds.schema(), q, ds.row(i))];
  h.counts.assign(tally.begin(), tally.end());
  h.exact = true;
  return h;
}

std::vector<Marginal> compute_marginals(const Dataset& ds, std::span<const MarginalQuery> queries) {
  std::vector<Marginal> out;
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(compute_marginal(ds, q));
  return out;
}

double l1_distance(const Marginal& a, const Marginal& b) {
  if (a.query != b.query || a.counts.size() != b.counts.size())
    throw InvalidArgument("l1 distance needs marginals of the same query");
  double s = 0.0;
  for (std::size_t t = 0; t < a.counts.size(); ++t) s += std::abs(a.counts[t] - b.counts[t]);
  return s;
}

double normalized_l1(const Marginal& a, const Marginal& b, std::size_t n) {
  if (n == 0) throw InvalidArgument("normalized l1 needs n > 0");
  return l1_distance(a, b) / static_cast<double>(n);
}

Marginal project_marginal(const Marginal& h, const MarginalQuery& sub) {
  if (!sub.is_subset_of(h.query))
    throw InvalidArgument("query " + sub.to_string() + " is not a subset of " + h.query.to_string());
  const auto attrs = h.query.attributes();
  std::vector<std::size_t> keep;  // positions in h.query kept by sub
  for (std::size_t p = 0; p < attrs.size(); ++p)
    if (sub.contains(attrs[p])) keep.push_back(p);

  Marginal out;
  out.query = sub;
  for (std::size_t p : keep) out.shape.push_back(h.shape[p]);
  std::size_t cells = 1;
  for (std::size_t s : out.shape) cells *= s;
  out.counts.assign(cells, 0.0);
  out.exact = h.exact;

  std::vector<std::size_t> digit(attrs.size(), 0);
  for (std::size_t flat = 0; flat < h.counts.size(); ++flat) {
    std::size_t target = 0;
    for (std::size_t p : keep) target = target * h.shape[p] + digit[p];
    out.counts[target] += h.counts[flat];
    for (std::size_t p = attrs.size(); p-- > 0;) {  // odometer, last fastest
      if (++digit[p] < h.shape[p]) break;
      digit[p] = 0;
    }
  }
  return out;
}

L1Summary l1_summary(std::span<const Marginal> a, std::span<const Marginal> b) {
  if (a.size() != b.size()) throw InvalidArgument("marginal sets differ in length");
  L1Summary s;
  if (a.empty()) return s;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = l1_distance(a[i], b[i]);
    s.max = std::max(s.max, d);
    sum += d;
  }
  s.mean = sum / static_cast<double>(a.size());
  return s;
}

// ---- JointDomain -----------------------------------------------------------

JointDomain::JointDomain(const Schema& schema) : schema_(schema), size_(schema.joint_domain_size()) {
  const std::size_t k = schema.num_attributes();
  strides_.assign(k, 1);
  for (std::size_t j = k - 1; j-- > 0;)
    strides_[j] = strides_[j + 1] * static_cast<std::size_t>(schema.domain_size(j + 1));
}

std::size_t JointDomain::encode(std::span<const Code> record) const {
  std::size_t cell = 0;
  for (std::size_t j = 0; j < strides_.size(); ++j) cell += strides_[j] * static_cast<std::size_t>(record[j]);
  return cell;
}

std::vector<Code> JointDomain::decode(std::size_t cell) const {
  std::vector<Code> record(strides_.size());
  for (std::size_t j = 0; j < strides_.size(); ++j) {
    record[j] = static_cast<Code>(cell / strides_[j]);
    cell %= strides_[j];
  }
  return record;
}

std::vector<std::uint32_t> JointDomain::projection(const MarginalQuery& q) const {
  marginal_shape(schema_, q);  // validates indices
  std::vector<std::uint32_t> out(size_);
  for (std::size_t cell = 0; cell < size_; ++cell)
    out[cell] = static_cast<std::uint32_t>(marginal_index(schema_, q, decode(cell)));
  return out;
}

// ---- serialization ---------------------------------------------------------

void save_marginal_set(const std::filesystem::path& dir, std::span<const Marginal> marginals) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["queries"] = nlohmann::json::array();
  std::ofstream csv(dir / "marginals.csv");
  if (!csv) throw ParseError("cannot write " + (dir / "marginals.csv").string());
  csv.precision(std::numeric_limits<double>::max_digits10);
  csv << "query_id,index,count\n";
  for (std::size_t id = 0; id < marginals.size(); ++id) {
    const auto& h = marginals[id];
    std::vector<std::size_t> attrs(h.query.attributes().begin(), h.query.attributes().end());
    manifest["queries"].push_back({{"id", id}, {"attributes", attrs}, {"shape", h.shape}, {"exact", h.exact}});
    for (std::size_t t = 0; t < h.counts.size(); ++t) csv << id << ',' << t << ',' << h.counts[t] << '\n';
  }
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

std::vector<Marginal> load_marginal_set(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw ParseError("cannot open " + (dir / "manifest.json").string());
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad marginal manifest: ") + e.what());
  }
  std::vector<Marginal> out;
  for (const auto& q : manifest.at("queries")) {
    Marginal h;
    h.query = MarginalQuery(q.at("attributes").get<std::vector<std::size_t>>());
    h.shape = q.at("shape").get<std::vector<std::size_t>>();
    h.exact = q.value("exact", false);
    std::size_t cells = 1;
    for (std::size_t s : h.shape) cells *= s;
    h.counts.assign(cells, std::numeric_limits<double>::quiet_NaN());
    out.push_back(std::move(h));
  }
  std::ifstream csv(dir / "marginals.csv");
  if (!csv) throw ParseError("cannot open " + (dir / "marginals.csv").string());
  std::string line;
  std::getline(csv, line);
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::size_t id = 0, idx = 0;
    double count = 0.0;
    char c1 = 0, c2 = 0;
    if (!(ls >> id >> c1 >> idx >> c2 >> count) || c1 != ',' || c2 != ',')
      throw ParseError("bad marginal row: " + line);
    if (id >= out.size() || idx >= out[id].counts.size()) throw ParseError("marginal row out of range: " + line);
    out[id].counts[idx] = count;
  }
  for (const auto& h : out)
    for (double c : h.counts)
      if (std::isnan(c)) throw ParseError("marginal set is missing entries for " + h.query.to_string());
  return out;
}

}  // namespace margsyn
