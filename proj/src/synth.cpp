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

#include "margsyn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "detail/simplex.hpp"
#include "margsyn/error.hpp"

namespace margsyn {

namespace {

// Per-query map from joint cell to marginal cell, plus the target.
struct QueryLayout {
  std::vector<std::uint32_t> proj;
  const std::vector<double>* target = nullptr;
  std::size_t cells = 0;
};

std::vector<QueryLayout> build_layouts(const NoisyMarginalSet& nm) {
  const JointDomain dom(nm.schema);
  std::vector<QueryLayout> out;
  out.reserve(nm.marginals.size());
  for (const auto& h : nm.marginals) {
    QueryLayout l;
    l.proj = dom.projection(h.query);
    l.target = &h.counts;
    l.cells = h.counts.size();
    out.push_back(std::move(l));
  }
  return out;
}

double objective_of(const std::vector<QueryLayout>& layouts, std::span<const std::size_t> counts,
                    std::vector<double>& scratch) {
  double worst = 0.0;
  for (const auto& l : layouts) {
    scratch.assign(l.cells, 0.0);
    for (std::size_t j = 0; j < counts.size(); ++j) scratch[l.proj[j]] += static_cast<double>(counts[j]);
    double s = 0.0;
    for (std::size_t t = 0; t < l.cells; ++t) s += std::abs((*l.target)[t] - scratch[t]);
    worst = std::max(worst, s);
  }
  return worst;
}

double tie_tolerance(double objective) { return 1e-9 * (1.0 + std::abs(objective)); }

// ---- exhaustive enumeration ------------------------------------------------

class Enumerator {
 public:
  Enumerator(const std::vector<QueryLayout>& layouts, std::size_t cells, std::size_t n)
      : layouts_(layouts), counts_(cells, 0), n_(n) {
    for (const auto& l : layouts_) partial_.emplace_back(l.cells, 0.0);
  }

  BruteForceResult run() {
    recurse(0, n_);
    BruteForceResult r;
    r.cell_counts = best_counts_;
    r.objective = best_;
    r.enumerated = true;
    r.candidates = visited_;
    return r;
  }

 private:
  void add(std::size_t cell, double v) {
    for (std::size_t q = 0; q < layouts_.size(); ++q) partial_[q][layouts_[q].proj[cell]] += v;
  }

  void recurse(std::size_t j, std::size_t remaining) {
    const std::size_t last = counts_.size() - 1;
    if (j == last) {
      counts_[j] = remaining;
      add(j, static_cast<double>(remaining));
      leaf();
      add(j, -static_cast<double>(remaining));
      return;
    }
    for (std::size_t v = remaining + 1; v-- > 0;) {
      counts_[j] = v;
      add(j, static_cast<double>(v));
      recurse(j + 1, remaining - v);
      add(j, -static_cast<double>(v));
    }
    counts_[j] = 0;
  }

  void leaf() {
    ++visited_;
    double worst = 0.0;
    for (std::size_t q = 0; q < layouts_.size(); ++q) {
      const auto& target = *layouts_[q].target;
      double s = 0.0;
      for (std::size_t t = 0; t < target.size(); ++t) s += std::abs(target[t] - partial_[q][t]);
      worst = std::max(worst, s);
    }
    // Visiting order is lexicographic, so only strict improvements replace.
    if (best_counts_.empty() || worst < best_ - tie_tolerance(best_)) {
      best_ = worst;
      best_counts_ = counts_;
    }
  }

  const std::vector<QueryLayout>& layouts_;
  std::vector<std::vector<double>> partial_;
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> best_counts_;
  double best_ = 0.0;
  std::size_t n_;
  std::size_t visited_ = 0;
};

// ---- integer-programming search --------------------------------------------
//
// Variables: c_j (joint cell counts), e+ / e- per marginal cell, t. Rows:
//   sum_{j->s} c_j - e+_s + e-_s = h_s
//   e+_s + e-_s >= chord of |h_s - M| between floor(h_s) and ceil(h_s)
//   sum_s (e+_s + e-_s) - t <= 0            per query
//   sum_j c_j = n
//   c_j = v_j                                for cells fixed by the caller
// Minimizing t gives the relaxation of the max-l1 objective. The objective
// depends on c only through the marginal sums, so branching splits those
// first and falls back to single cells once they are all integral. Each
// child inherits the parent's optimal tableau plus one branching row, and
// the split is chosen by strong branching.

class Searcher {
 public:
  Searcher(const std::vector<QueryLayout>& layouts, std::size_t cells, std::size_t n, const BruteForceOptions& opts)
      : layouts_(layouts), cells_(cells), n_(n), opts_(opts) {
    for (const auto& l : layouts_) {
      offset_.push_back(total_marg_cells_);
      total_marg_cells_ += l.cells;
    }
    nv_ = cells_ + 2 * total_marg_cells_ + 1;
  }

  BruteForceResult run() {
    std::vector<std::size_t> fixed;
    Found cur = optimize(fixed, Goal{}, Found{{}, std::numeric_limits<double>::infinity()});
    if (cur.counts.empty()) throw NumericalError("search found no feasible point");
    double best = cur.value;

    // Among all optima, take the lexicographically largest count vector:
    // maximize c_0, fix it, maximize c_1, and so on.
    for (std::size_t j = 0; j + 1 < cells_; ++j) {
      const Goal g{false, j, best + 1e-7 * (1.0 + best), best + tie_tolerance(best)};
      improved_.reset();
      Found f = optimize(fixed, g, Found{cur.counts, static_cast<double>(cur.counts[j])});
      if (improved_) {  // relaxation tolerance hid a strictly better point
        best = improved_->second;
        cur = Found{improved_->first, best};
        fixed.clear();
        j = static_cast<std::size_t>(-1);
        continue;
      }
      cur.counts = std::move(f.counts);
      fixed.push_back(cur.counts[j]);
    }

    BruteForceResult res;
    res.cell_counts = cur.counts;
    res.objective = objective_of(layouts_, cur.counts, scratch_);
    res.enumerated = false;
    res.candidates = solves_;
    return res;
  }

 private:
  struct Branch {
    enum Kind { none, marginal, cell } kind = none;
    std::size_t index = 0;
    std::size_t floor = 0;
  };

  // Minimize t, or maximize c_cell subject to t <= cap.
  struct Goal {
    bool minimize_t = true;
    std::size_t cell = 0;
    double cap = 0.0;        // relaxation cap
    double exact_cap = 0.0;  // acceptance cap for integer points
  };

  struct Found {
    std::vector<std::size_t> counts;
    double value = 0.0;  // objective (min) or c_cell (max)
  };

  // Branching row: a marginal cell sum or a joint cell bounded above
  // (upper) or below by `bound`.
  struct Cut {
    bool marginal = false;
    bool upper = false;
    std::size_t index = 0;
    double bound = 0.0;
  };

  static constexpr std::size_t kStoredTableaus = 512;

  static bool respects(const std::vector<std::size_t>& fixed, const std::vector<std::size_t>& c) {
    for (std::size_t j = 0; j < fixed.size(); ++j)
      if (c[j] != fixed[j]) return false;
    return true;
  }

  // Branch and bound over the cells not in `fixed`, seeded with `inc`.
  Found optimize(const std::vector<std::size_t>& fixed, const Goal& goal, Found inc) {
    // Lower score is better; nodes whose score cannot beat the incumbent go.
    auto score = [&](const detail::WarmLp& lp, const std::vector<double>& x) {
      if (goal.minimize_t) return lp.objective();
      return -x[goal.cell];
    };
    auto hopeless = [&](double sc) {
      if (goal.minimize_t) return sc >= inc.value - tie_tolerance(inc.value);
      return std::floor(-sc + 1e-6) <= inc.value;
    };
    auto offer = [&](std::vector<std::size_t> counts) {
      if (counts.empty() || !respects(fixed, counts)) return;
      const double obj = objective_of(layouts_, counts, scratch_);
      if (goal.minimize_t) {
        if (obj >= inc.value) return;
        improve_locally(counts);
        inc.value = objective_of(layouts_, counts, scratch_);
        inc.counts = std::move(counts);
        return;
      }
      if (obj > goal.exact_cap) return;
      if (obj < goal.exact_cap - 2.0 * tie_tolerance(goal.exact_cap)) {
        if (!improved_ || obj < improved_->second) improved_.emplace(counts, obj);
      }
      const auto v = static_cast<double>(counts[goal.cell]);
      if (v > inc.value) inc = Found{std::move(counts), v};
    };

    // Best-first over relaxation bounds, deepest first among ties. Open
    // nodes keep their tableau while memory allows; the rest keep only
    // their branching rows and are replayed from the root when popped.
    struct Node {
      double score;
      std::size_t id;
      std::vector<Cut> path;
      std::unique_ptr<detail::WarmLp> lp;
      std::vector<double> x;
    };
    auto worse = [](const Node& a, const Node& b) {
      return a.score > b.score || (a.score == b.score && a.id > b.id);
    };
    std::vector<Node> open;
    std::size_t stored = 0, next_id = 0;
    auto push = [&](Node node) {
      if (node.lp) ++stored;
      open.push_back(std::move(node));
      std::push_heap(open.begin(), open.end(), worse);
    };

    charge();
    const detail::WarmLp root(base_program(fixed, goal));
    if (root.status() == detail::LpStatus::infeasible) return inc;
    if (root.status() != detail::LpStatus::optimal)
      throw NumericalError("search relaxation did not solve at the root");
    {
      auto x = root.solution();
      offer(round_counts(x));
      const double sc = score(root, x);
      if (!hopeless(sc)) push(Node{sc, next_id++, {}, std::make_unique<detail::WarmLp>(root), std::move(x)});
    }
    std::vector<std::pair<std::size_t, double>> terms;
    auto apply = [&](detail::WarmLp& lp, const Cut& cut, bool fresh) {
      terms.clear();
      const double sign = cut.upper ? 1.0 : -1.0;
      if (cut.marginal) {
        const auto q = static_cast<std::size_t>(
            std::upper_bound(offset_.begin(), offset_.end(), cut.index) - offset_.begin() - 1);
        const std::size_t s = cut.index - offset_[q];
        for (std::size_t j = 0; j < cells_; ++j)
          if (layouts_[q].proj[j] == s) terms.emplace_back(j, sign);
      } else {
        terms.emplace_back(cut.index, sign);
      }
      if (fresh) charge();
      const auto st = lp.add_row(terms, sign * cut.bound);
      if (st != detail::LpStatus::optimal && st != detail::LpStatus::infeasible)
        throw NumericalError("search relaxation did not solve");
      return st == detail::LpStatus::optimal;
    };

    while (!open.empty()) {
      std::pop_heap(open.begin(), open.end(), worse);
      Node node = std::move(open.back());
      open.pop_back();
      if (node.lp) --stored;
      if (hopeless(node.score)) break;
      if (improved_) break;

      const auto cands = branch_candidates(node.x, goal.minimize_t ? node.score : goal.cap);
      if (cands.empty()) {
        offer(round_counts(node.x));
        continue;
      }
      if (!node.lp) {
        node.lp = std::make_unique<detail::WarmLp>(root);
        for (const Cut& c : node.path)
          if (!apply(*node.lp, c, false)) throw NumericalError("search replay lost feasibility");
      }
      // Strong branching: solve both children of each candidate and keep
      // the split whose weaker child moves the bound the most.
      constexpr double kDead = std::numeric_limits<double>::infinity();
      std::vector<Node> kids;
      double best_gain = -1.0, best_other = -1.0;
      for (const Branch& br : cands) {
        std::vector<Node> trial;
        double sc_side[2] = {kDead, kDead};
        for (int side = 0; side < 2; ++side) {
          const Cut cut{br.kind == Branch::marginal, side == 0, br.index,
                        static_cast<double>(side == 0 ? br.floor : br.floor + 1)};
          auto lp = std::make_unique<detail::WarmLp>(*node.lp);
          if (!apply(*lp, cut, true)) continue;
          auto x = lp->solution();
          offer(round_counts(x));
          const double sc = score(*lp, x);
          if (hopeless(sc)) continue;
          sc_side[side] = sc;
          auto path = node.path;
          path.push_back(cut);
          trial.push_back(Node{sc, 0, std::move(path), std::move(lp), std::move(x)});
        }
        const double gain = std::min(sc_side[0], sc_side[1]) - node.score;
        const double other = std::max(sc_side[0], sc_side[1]) - node.score;
        if (gain > best_gain || (gain == best_gain && other > best_other)) {
          best_gain = gain;
          best_other = other;
          kids = std::move(trial);
        }
        if (kids.size() < 2) break;  // a pruned side is as good as it gets
      }
      if (kids.size() == 2 && kids[1].score < kids[0].score) std::swap(kids[0], kids[1]);
      // Only the more promising child keeps its tableau once memory is tight.
      for (std::size_t k = 1; k < kids.size(); ++k)
        if (stored + 1 >= kStoredTableaus) kids[k].lp.reset();
      // The better child gets the later id so it wins score ties.
      for (std::size_t k = kids.size(); k-- > 0;) {
        kids[k].id = next_id++;
        push(std::move(kids[k]));
      }
    }
    return inc;
  }

  detail::LinearProgram base_program(const std::vector<std::size_t>& fixed, const Goal& goal) const {
    detail::LinearProgram lp;
    lp.num_vars = nv_;
    lp.cost.assign(nv_, 0.0);
    if (goal.minimize_t)
      lp.cost[nv_ - 1] = 1.0;
    else
      lp.cost[goal.cell] = -1.0;
    auto blank = [&] {
      detail::LpRow r;
      r.coeffs.assign(nv_, 0.0);
      return r;
    };
    std::size_t e = cells_;
    for (const auto& l : layouts_) {
      const std::size_t e_begin = e;
      for (std::size_t s = 0; s < l.cells; ++s) {
        auto row = blank();
        for (std::size_t j = 0; j < cells_; ++j)
          if (l.proj[j] == s) row.coeffs[j] = 1.0;
        // |h - M| is only evaluated at integer M: bound e+ + e- below by the
        // chord between floor(h) and ceil(h).
        const double h = (*l.target)[s];
        const double fl = std::floor(h);
        if (h > 0.0 && h != fl) {
          const double slope = 2.0 * fl + 1.0 - 2.0 * h;
          auto chord = row;
          for (double& c : chord.coeffs) c *= -slope;
          chord.coeffs[e + 2 * s] = 1.0;
          chord.coeffs[e + 2 * s + 1] = 1.0;
          chord.sense = detail::RowSense::ge;
          chord.rhs = (h - fl) - slope * fl;
          lp.rows.push_back(std::move(chord));
        }
        row.coeffs[e + 2 * s] = -1.0;
        row.coeffs[e + 2 * s + 1] = 1.0;
        row.sense = detail::RowSense::eq;
        row.rhs = h;
        lp.rows.push_back(std::move(row));
      }
      e += 2 * l.cells;
      auto budget = blank();
      for (std::size_t k = e_begin; k < e; ++k) budget.coeffs[k] = 1.0;
      budget.coeffs[nv_ - 1] = -1.0;
      budget.sense = detail::RowSense::le;
      lp.rows.push_back(std::move(budget));
    }
    auto total = blank();
    for (std::size_t j = 0; j < cells_; ++j) total.coeffs[j] = 1.0;
    total.sense = detail::RowSense::eq;
    total.rhs = static_cast<double>(n_);
    lp.rows.push_back(std::move(total));
    for (std::size_t j = 0; j < fixed.size(); ++j) {
      auto fix = blank();
      fix.coeffs[j] = 1.0;
      fix.sense = detail::RowSense::eq;
      fix.rhs = static_cast<double>(fixed[j]);
      lp.rows.push_back(std::move(fix));
    }
    if (!goal.minimize_t) {
      auto t_cap = blank();
      t_cap.coeffs[nv_ - 1] = 1.0;
      t_cap.rhs = goal.cap;
      lp.rows.push_back(std::move(t_cap));
    }
    return lp;
  }

  // Fractional marginal cells of queries whose l1 is at the relaxation
  // value, most fractional first; failing that any fractional marginal
  // cell; failing that fractional joint cells. Empty when integral.
  std::vector<Branch> branch_candidates(const std::vector<double>& x, double bound) const {
    constexpr double kIntTol = 1e-7;
    constexpr std::size_t kMaxCandidates = 8;
    std::vector<std::vector<double>> sums(layouts_.size());
    std::vector<double> l1(layouts_.size(), 0.0);
    for (std::size_t q = 0; q < layouts_.size(); ++q) {
      const auto& l = layouts_[q];
      sums[q].assign(l.cells, 0.0);
      for (std::size_t j = 0; j < cells_; ++j) sums[q][l.proj[j]] += x[j];
      for (std::size_t s = 0; s < l.cells; ++s) l1[q] += std::abs((*l.target)[s] - sums[q][s]);
    }
    std::vector<std::pair<double, Branch>> found;
    auto consider = [&](double v, Branch::Kind kind, std::size_t index) {
      const double f = std::min(v - std::floor(v), std::ceil(v) - v);
      if (f > kIntTol) found.emplace_back(f, Branch{kind, index, static_cast<std::size_t>(std::floor(v))});
    };
    for (int pass = 0; pass < 2 && found.empty(); ++pass) {
      for (std::size_t q = 0; q < layouts_.size(); ++q) {
        if (pass == 0 && l1[q] < bound - 1e-6 * (1.0 + bound)) continue;
        for (std::size_t s = 0; s < layouts_[q].cells; ++s) consider(sums[q][s], Branch::marginal, offset_[q] + s);
      }
    }
    if (found.empty())
      for (std::size_t j = 0; j < cells_; ++j) consider(x[j], Branch::cell, j);
    std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<Branch> out;
    for (std::size_t k = 0; k < found.size() && k < kMaxCandidates; ++k) out.push_back(found[k].second);
    return out;
  }

  void charge() {
    if (++solves_ > opts_.max_search_nodes)
      throw CapacityError("brute-force search exceeded its node budget (" + std::to_string(opts_.max_search_nodes) +
                          " relaxations)");
  }

  // Largest-remainder rounding of the cell values to integers summing to n.
  std::vector<std::size_t> round_counts(const std::vector<double>& x) const {
    if (x.size() < cells_) return {};
    std::vector<std::size_t> c(cells_);
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t sum = 0;
    for (std::size_t j = 0; j < cells_; ++j) {
      const double v = std::max(0.0, x[j]);
      const double fl = std::floor(v + 1e-9);
      c[j] = static_cast<std::size_t>(fl);
      sum += c[j];
      rem.emplace_back(v - fl, j);
    }
    if (sum > n_) return {};
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; sum < n_; k = (k + 1) % cells_, ++sum) ++c[rem[k].second];
    return c;
  }

  // Unit moves between cells while they strictly improve the objective.
  void improve_locally(std::vector<std::size_t>& c) {
    double cur = objective_of(layouts_, c, scratch_);
    bool moved = true;
    while (moved) {
      moved = false;
      for (std::size_t a = 0; a < cells_ && !moved; ++a) {
        if (c[a] == 0) continue;
        for (std::size_t b = 0; b < cells_; ++b) {
          if (a == b) continue;
          --c[a];
          ++c[b];
          const double v = objective_of(layouts_, c, scratch_);
          if (v < cur - tie_tolerance(cur)) {
            cur = v;
            moved = true;
            break;
          }
          ++c[a];
          --c[b];
        }
      }
    }
  }

  const std::vector<QueryLayout>& layouts_;
  std::size_t cells_;
  std::size_t n_;
  const BruteForceOptions& opts_;
  std::vector<std::size_t> offset_;
  std::size_t total_marg_cells_ = 0;
  std::size_t nv_ = 0;
  std::size_t solves_ = 0;
  std::optional<std::pair<std::vector<std::size_t>, double>> improved_;
  std::vector<double> scratch_;
};

// ---- fitting helpers -------------------------------------------------------

// Euclidean projection onto {x >= 0, sum x = total}.
void project_scaled_simplex(std::vector<double>& x, double total) {
  std::vector<double> s = x;
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    cum += s[k];
    const double t = (cum - total) / static_cast<double>(k + 1);
    if (s[k] - t > 0.0) theta = t;
  }
  for (double& v : x) v = std::max(v - theta, 0.0);
}

double fit_objective(const std::vector<QueryLayout>& layouts, const std::vector<double>& x,
                     std::vector<double>* grad) {
  double f = 0.0;
  if (grad) grad->assign(x.size(), 0.0);
  std::vector<double> r;
  for (const auto& l : layouts) {
    r.assign(l.cells, 0.0);
    for (std::size_t j = 0; j < x.size(); ++j) r[l.proj[j]] += x[j];
    for (std::size_t t = 0; t < l.cells; ++t) {
      r[t] -= (*l.target)[t];
      f += r[t] * r[t];
    }
    if (grad)
      for (std::size_t j = 0; j < x.size(); ++j) (*grad)[j] += 2.0 * r[l.proj[j]];
  }
  return f;
}

}  // namespace

// ---- NoisyMarginalSet ------------------------------------------------------

void NoisyMarginalSet::validate() const {
  if (marginals.empty()) throw InvalidArgument("noisy marginal set has no queries");
  std::set<MarginalQuery> seen;
  for (const auto& h : marginals) {
    for (std::size_t a : h.query.attributes())
      if (a >= schema.num_attributes())
        throw InvalidArgument("query " + h.query.to_string() + " references a missing attribute");
    if (!seen.insert(h.query).second) throw InvalidArgument("duplicate query " + h.query.to_string());
    const auto shape = marginal_shape(schema, h.query);
    std::size_t cells = 1;
    for (auto s : shape) cells *= s;
    if (h.counts.size() != cells) throw InvalidArgument("marginal " + h.query.to_string() + " has the wrong size");
    for (double c : h.counts)
      if (!std::isfinite(c)) throw InvalidArgument("marginal " + h.query.to_string() + " has a non-finite entry");
  }
}

double max_l1_objective(const NoisyMarginalSet& nm, std::span<const std::size_t> cell_counts) {
  nm.validate();
  if (cell_counts.size() != nm.schema.joint_domain_size())
    throw InvalidArgument("count vector does not match the joint domain");
  const auto layouts = build_layouts(nm);
  std::vector<double> scratch;
  return objective_of(layouts, cell_counts, scratch);
}

double multiset_count(std::size_t cells, std::size_t n, double cap) {
  // C(cells + n - 1, n), built incrementally and stopped above the cap.
  if (cells == 0) return n == 0 ? 1.0 : 0.0;
  long double v = 1.0L;
  const std::size_t k = std::min(n, cells - 1);
  const std::size_t top = cells + n - 1;
  for (std::size_t i = 1; i <= k; ++i) {
    v = v * static_cast<long double>(top - k + i) / static_cast<long double>(i);
    if (v > static_cast<long double>(cap)) return cap + 1.0;
  }
  return static_cast<double>(std::round(v));
}

BruteForceResult brute_force_search(std::size_t n, const NoisyMarginalSet& nm, const BruteForceOptions& opts) {
  nm.validate();
  const std::size_t cells = nm.schema.joint_domain_size();
  const auto layouts = build_layouts(nm);
  if (n == 0) {
    BruteForceResult r;
    r.cell_counts.assign(cells, 0);
    std::vector<double> scratch;
    r.objective = objective_of(layouts, r.cell_counts, scratch);
    r.enumerated = true;
    r.candidates = 1;
    return r;
  }
  const double count = multiset_count(cells, n, opts.enumeration_cap);
  if (count <= opts.enumeration_cap) return Enumerator(layouts, cells, n).run();
  if (!opts.allow_search)
    throw CapacityError("brute-force synthesis over " + std::to_string(cells) + " cells with n=" + std::to_string(n) +
                        " exceeds the enumeration cap");
  return Searcher(layouts, cells, n, opts).run();
}

Dataset dataset_from_counts(const Schema& schema, std::span<const std::size_t> cell_counts) {
  const JointDomain dom(schema);
  if (cell_counts.size() != dom.size()) throw InvalidArgument("count vector does not match the joint domain");
  std::vector<Code> codes;
  for (std::size_t j = 0; j < cell_counts.size(); ++j) {
    if (cell_counts[j] == 0) continue;
    const auto rec = dom.decode(j);
    for (std::size_t k = 0; k < cell_counts[j]; ++k) codes.insert(codes.end(), rec.begin(), rec.end());
  }
  return Dataset(schema, std::move(codes));
}

Dataset brute_force_synth(std::size_t n, const NoisyMarginalSet& nm, const BruteForceOptions& opts) {
  return dataset_from_counts(nm.schema, brute_force_search(n, nm, opts).cell_counts);
}

// ---- fitted mode -----------------------------------------------------------

DistributionEstimate fit_distribution(const NoisyMarginalSet& nm, const FitOptions& opts) {
  nm.validate();
  if (opts.iters == 0 || !(opts.tol >= 0.0)) throw InvalidArgument("fit needs iters > 0 and tol >= 0");
  const std::size_t cells = nm.schema.joint_domain_size();
  if (cells > opts.max_cells)
    throw CapacityError("joint domain of " + std::to_string(cells) + " cells is too large for dense fitting");
  const auto layouts = build_layouts(nm);
  const double total = static_cast<double>(std::max<std::size_t>(nm.records, 1));

  // The gradient's Lipschitz constant: each marginal cell has |Omega|/|Omega_q|
  // preimages, and that is the top eigenvalue of A_q^T A_q.
  double lipschitz = 0.0;
  for (const auto& l : layouts) lipschitz += 2.0 * static_cast<double>(cells) / static_cast<double>(l.cells);
  const double base_step = 1.0 / lipschitz;

  std::vector<double> x(cells, total / static_cast<double>(cells));
  std::vector<double> grad, trial(cells);
  double f = fit_objective(layouts, x, &grad);

  DistributionEstimate est;
  est.schema = nm.schema;
  est.objective_history.push_back(f);
  double step = base_step;
  for (std::size_t it = 0; it < opts.iters; ++it) {
    double s = 2.0 * step;
    double f_new = 0.0;
    while (true) {
      for (std::size_t j = 0; j < cells; ++j) trial[j] = x[j] - s * grad[j];
      project_scaled_simplex(trial, total);
      f_new = fit_objective(layouts, trial, nullptr);
      if (s <= base_step) break;
      double lin = 0.0, sq = 0.0;
      for (std::size_t j = 0; j < cells; ++j) {
        const double dx = trial[j] - x[j];
        lin += grad[j] * dx;
        sq += dx * dx;
      }
      if (f_new <= f + lin + sq / (2.0 * s)) break;
      s = std::max(s / 2.0, base_step);
    }
    step = s;
    est.iterations = it + 1;
    if (f_new > f) {  // only from rounding at the optimum
      est.objective_history.push_back(f);
      break;
    }
    const double gain = f - f_new;
    x.swap(trial);
    f = fit_objective(layouts, x, &grad);
    est.objective_history.push_back(f);
    if (gain <= opts.tol * f_new + std::numeric_limits<double>::min() || f == 0.0) break;
  }

  est.probs.resize(cells);
  const double sum = std::accumulate(x.begin(), x.end(), 0.0);
  for (std::size_t j = 0; j < cells; ++j) est.probs[j] = x[j] / sum;
  return est;
}

std::vector<Code> sample_column(std::span<const double> mu, std::size_t n, Rng& rng) {
  if (mu.empty()) throw InvalidArgument("sample_column needs at least one value");
  double sum = 0.0;
  for (double v : mu) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("sample_column needs finite non-negative counts");
    sum += v;
  }
  if (n == 0) return {};
  if (sum <= 0.0) throw InvalidArgument("sample_column got all-zero counts with n > 0");

  const double nd = static_cast<double>(n);
  std::vector<double> m(mu.begin(), mu.end());
  if (std::abs(sum - nd) >= 1.0)
    for (double& v : m) v *= nd / sum;

  std::vector<std::size_t> count(m.size());
  std::vector<double> frac(m.size());
  std::size_t floors = 0;
  for (std::size_t t = 0; t < m.size(); ++t) {
    const double fl = std::floor(m[t]);
    count[t] = static_cast<std::size_t>(fl);
    frac[t] = m[t] - fl;
    floors += count[t];
  }
  while (floors > n) {  // rounding spill after rescaling
    const auto it = std::max_element(count.begin(), count.end());
    --*it;
    --floors;
  }

  // Remainder: draw without replacement, proportional to fractional parts.
  std::size_t remainder = n - floors;
  std::vector<char> taken(m.size(), 0);
  while (remainder > 0) {
    double wsum = 0.0;
    for (std::size_t t = 0; t < m.size(); ++t)
      if (!taken[t]) wsum += frac[t];
    std::size_t pick = m.size();
    if (wsum > 0.0) {
      double u = rng.uniform() * wsum;
      for (std::size_t t = 0; t < m.size(); ++t) {
        if (taken[t] || frac[t] <= 0.0) continue;
        pick = t;
        u -= frac[t];
        if (u < 0.0) break;
      }
    } else {
      // No fractional mass left: largest untaken count.
      for (std::size_t t = 0; t < m.size(); ++t)
        if (!taken[t] && (pick == m.size() || m[t] > m[pick])) pick = t;
    }
    if (pick == m.size()) throw NumericalError("sample_column ran out of values for the remainder");
    taken[pick] = 1;
    ++count[pick];
    --remainder;
  }

  std::vector<Code> out;
  out.reserve(n);
  for (std::size_t t = 0; t < m.size(); ++t) out.insert(out.end(), count[t], static_cast<Code>(t));
  std::shuffle(out.begin(), out.end(), rng.engine());
  return out;
}

Dataset sample_dataset(const DistributionEstimate& dist, std::size_t n, Rng& rng) {
  const Schema& schema = dist.schema;
  const std::size_t k = schema.num_attributes();
  const std::size_t cells = schema.joint_domain_size();
  if (dist.probs.size() != cells) throw InvalidArgument("distribution does not match its schema");
  double sum = 0.0;
  for (double p : dist.probs) {
    if (!(p >= 0.0)) throw InvalidArgument("distribution has a negative or NaN entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw InvalidArgument("distribution does not sum to 1");

  // prefix[a][i]: mass of the first a+1 attributes taking prefix index i.
  std::vector<std::vector<double>> prefix(k);
  std::size_t block = cells;
  for (std::size_t a = 0; a < k; ++a) {
    block /= static_cast<std::size_t>(schema.domain_size(a));
    prefix[a].assign(cells / block, 0.0);
    for (std::size_t j = 0; j < cells; ++j) prefix[a][j / block] += dist.probs[j];
  }

  std::vector<Code> codes(n * k, 0);
  // groups[i] lists rows whose prefix index (over attributes so far) is i
  std::vector<std::vector<std::size_t>> groups(1);
  groups[0].resize(n);
  std::iota(groups[0].begin(), groups[0].end(), std::size_t{0});
  std::vector<double> mu;
  for (std::size_t a = 0; a < k; ++a) {
    const auto l = static_cast<std::size_t>(schema.domain_size(a));
    std::vector<std::vector<std::size_t>> next(groups.size() * l);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const auto& rows = groups[g];
      if (rows.empty()) continue;
      mu.assign(l, 0.0);
      double parent = 0.0;
      for (std::size_t v = 0; v < l; ++v) {
        mu[v] = prefix[a][g * l + v];
        parent += mu[v];
      }
      if (parent <= 0.0)
        std::fill(mu.begin(), mu.end(), 1.0);  // unreachable prefix; only from rounding
      const double scale = static_cast<double>(rows.size()) / (parent > 0.0 ? parent : static_cast<double>(l));
      for (double& v : mu) v *= scale;
      const auto col = sample_column(mu, rows.size(), rng);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        codes[rows[r] * k + a] = col[r];
        next[g * l + static_cast<std::size_t>(col[r])].push_back(rows[r]);
      }
    }
    groups.swap(next);
  }
  return Dataset(schema, std::move(codes));
}

// ---- mechanism -------------------------------------------------------------

std::string_view to_string(GeneratorMode mode) { return mode == GeneratorMode::brute ? "brute" : "fitted"; }

GeneratorMode generator_mode_from_string(std::string_view s) {
  if (s == "brute") return GeneratorMode::brute;
  if (s == "fitted") return GeneratorMode::fitted;
  throw InvalidArgument("unknown generator mode '" + std::string(s) + "' (expected brute or fitted)");
}

NoisyMarginalSet measure(const Dataset& real, const MechanismConfig& cfg) {
  const Schema& schema = real.schema();
  const std::size_t m = schema.num_features();
  const auto queries = enumerate_queries(m, cfg.d);
  const NoiseCalibration cal = calibrate(m, cfg.d, cfg.privacy, cfg.sensitivity);
  NoisyMarginalSet nm;
  nm.schema = schema;
  nm.sigma = cfg.sigma_override ? *cfg.sigma_override : cal.sigma;
  if (!(nm.sigma >= 0.0)) throw InvalidArgument("sigma override must be non-negative");
  nm.seed = cfg.seed;
  nm.records = real.size();
  const auto exact = compute_marginals(real, queries);
  nm.marginals.reserve(exact.size());
  for (std::size_t i = 0; i < exact.size(); ++i) {
    Rng rng(derive_seed(cfg.seed, {1, i}));
    nm.marginals.push_back(add_noise(exact[i], nm.sigma, rng));
  }
  return nm;
}

SynthesisOutput synthesize(std::size_t n, const NoisyMarginalSet& nm, const SynthOptions& opts) {
  nm.validate();
  if (opts.mode == GeneratorMode::brute) {
    auto res = brute_force_search(n, nm, opts.brute);
    Dataset ds = dataset_from_counts(nm.schema, res.cell_counts);
    return SynthesisOutput{std::move(ds), std::move(res), 0};
  }
  const auto dist = fit_distribution(nm, opts.fit);
  Rng rng(derive_seed(nm.seed, {2}));
  return SynthesisOutput{sample_dataset(dist, n, rng), BruteForceResult{}, dist.iterations};
}

MechanismOutput generate_private_synthetic(const Dataset& real, const MechanismConfig& cfg) {
  NoisyMarginalSet nm = measure(real, cfg);
  SynthesisOutput syn = synthesize(nm.records, nm, cfg.synth);

  ProvenanceReport rep;
  rep.calibration = calibrate(real.schema().num_features(), cfg.d, cfg.privacy, cfg.sensitivity);
  rep.sigma = nm.sigma;
  rep.privacy = cfg.privacy;
  rep.seed = cfg.seed;
  rep.mode = cfg.synth.mode;
  rep.query_count = nm.marginals.size();
  rep.records = nm.records;
  std::vector<MarginalQuery> queries;
  for (const auto& h : nm.marginals) queries.push_back(h.query);
  const auto achieved = compute_marginals(syn.synthetic, queries);
  rep.achieved_vs_noisy = l1_summary(nm.marginals, achieved);
  rep.search_candidates = syn.brute.candidates;
  rep.enumerated = syn.brute.enumerated;
  rep.fit_iterations = syn.fit_iterations;
  return MechanismOutput{std::move(syn.synthetic), std::move(nm), rep};
}

L1Summary real_marginal_gap(const Dataset& real, const Dataset& synthetic, std::span<const Marginal> measured) {
  std::vector<MarginalQuery> queries;
  for (const auto& h : measured) queries.push_back(h.query);
  const auto a = compute_marginals(real, queries);
  const auto b = compute_marginals(synthetic, queries);
  return l1_summary(a, b);
}

std::string provenance_json(const ProvenanceReport& r) {
  nlohmann::json j;
  j["sigma"] = r.sigma;
  j["calibrated_sigma"] = r.calibration.sigma;
  j["sensitivity"] = r.calibration.sensitivity;
  j["sensitivity_mode"] = std::string(to_string(r.calibration.mode));
  j["epsilon"] = r.privacy.epsilon;
  j["delta"] = r.privacy.delta;
  j["d"] = r.calibration.d;
  j["m"] = r.calibration.m;
  j["seed"] = r.seed;
  j["mode"] = std::string(to_string(r.mode));
  j["query_count"] = r.query_count;
  j["records"] = r.records;
  j["achieved_l1_vs_noisy"] = {{"max", r.achieved_vs_noisy.max}, {"mean", r.achieved_vs_noisy.mean}};
  if (r.mode == GeneratorMode::brute) {
    j["brute_force"] = {{"enumerated", r.enumerated}, {"candidates", r.search_candidates}};
  } else {
    j["fit_iterations"] = r.fit_iterations;
  }
  if (r.non_private_vs_real)
    j["non_private_l1_vs_real"] = {{"max", r.non_private_vs_real->max},
                                   {"mean", r.non_private_vs_real->mean},
                                   {"note", "evaluation only; computed from the real data, not private"}};
  return j.dump(2);
}

}  // namespace margsyn
