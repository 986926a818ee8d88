#include "docalc/bn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace docalc {

// ---------------------------------------------------------------------------
// Assignment

Assignment::Assignment(std::initializer_list<std::pair<VariableId, int>> pairs)
    : pairs_(pairs) {
  std::sort(pairs_.begin(), pairs_.end());
  for (std::size_t i = 0; i + 1 < pairs_.size(); ++i)
    if (pairs_[i].first == pairs_[i + 1].first)
      throw ArgumentError("variable assigned twice");
}

void Assignment::set(VariableId v, int value) {
  auto it = std::lower_bound(
      pairs_.begin(), pairs_.end(), v,
      [](const auto& p, VariableId id) { return p.first < id; });
  if (it != pairs_.end() && it->first == v)
    it->second = value;
  else
    pairs_.insert(it, {v, value});
}

std::optional<int> Assignment::get(VariableId v) const {
  auto it = std::lower_bound(
      pairs_.begin(), pairs_.end(), v,
      [](const auto& p, VariableId id) { return p.first < id; });
  if (it != pairs_.end() && it->first == v) return it->second;
  return std::nullopt;
}

bool Assignment::contains(VariableId v) const { return get(v).has_value(); }

NodeSet Assignment::vars() const {
  std::vector<VariableId> out;
  out.reserve(pairs_.size());
  for (const auto& [v, _] : pairs_) out.push_back(v);
  return NodeSet(std::move(out));
}

Assignment Assignment::merged_disjoint(const Assignment& other) const {
  Assignment out = *this;
  for (const auto& [v, value] : other.pairs_) {
    if (out.contains(v))
      throw ArgumentError("assignments overlap");
    out.set(v, value);
  }
  return out;
}

// ---------------------------------------------------------------------------
// JointTable

std::size_t JointTable::index_of(const std::vector<int>& values) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < cards.size(); ++i)
    idx = idx * static_cast<std::size_t>(cards[i]) +
          static_cast<std::size_t>(values[i]);
  return idx;
}

double JointTable::sum() const {
  double s = 0;
  for (double c : cells) s += c;
  return s;
}

namespace {

// Iterate all full configurations of `cards`, calling fn(values, cell_index).
void for_each_cell(const std::vector<int>& cards,
                   const std::function<void(const std::vector<int>&,
                                            std::size_t)>& fn) {
  std::vector<int> values(cards.size(), 0);
  std::size_t total = 1;
  for (int c : cards) total *= static_cast<std::size_t>(c);
  for (std::size_t idx = 0; idx < total; ++idx) {
    fn(values, idx);
    for (std::size_t i = cards.size(); i-- > 0;) {
      if (++values[i] < cards[i]) break;
      values[i] = 0;
    }
  }
}

bool matches(const std::vector<int>& values, const Assignment& a) {
  for (const auto& [v, value] : a.pairs())
    if (values[static_cast<std::size_t>(v.value)] != value) return false;
  return true;
}

}  // namespace

double JointTable::marginal(const Assignment& a) const {
  double s = 0;
  for_each_cell(cards, [&](const std::vector<int>& values, std::size_t idx) {
    if (matches(values, a)) s += cells[idx];
  });
  return s;
}

JointTable JointTable::conditioned(const Assignment& a) const {
  double mass = marginal(a);
  if (mass == 0.0)
    throw UndefinedConditional("conditioning on a zero-probability event");
  JointTable out;
  out.cards = cards;
  out.cells.assign(cells.size(), 0.0);
  for_each_cell(cards, [&](const std::vector<int>& values, std::size_t idx) {
    if (matches(values, a)) out.cells[idx] = cells[idx] / mass;
  });
  return out;
}

// ---------------------------------------------------------------------------
// DiscreteBN

DiscreteBN::DiscreteBN(CausalGraph graph, std::vector<int> cards,
                       std::vector<std::vector<double>> tables)
    : graph_(std::move(graph)),
      cards_(std::move(cards)),
      tables_(std::move(tables)) {
  const std::size_t n = graph_.node_count();
  if (cards_.size() != n || tables_.size() != n)
    throw ArgumentError("cardinalities and tables must cover every node");

  parent_ids_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (cards_[i] < 2)
      throw ArgumentError("every variable needs cardinality >= 2");
    VariableId v{static_cast<std::int32_t>(i)};
    for (VariableId p : graph_.parents(v)) parent_ids_[i].push_back(p.value);

    std::size_t rows = 1;
    for (std::int32_t p : parent_ids_[i])
      rows *= static_cast<std::size_t>(cards_[p]);
    std::size_t expect = rows * static_cast<std::size_t>(cards_[i]);
    if (tables_[i].size() != expect)
      throw ArgumentError("table for " + graph_.name(v) +
                          " has wrong shape: expected " +
                          std::to_string(expect) + " entries, got " +
                          std::to_string(tables_[i].size()));
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0;
      for (int k = 0; k < cards_[i]; ++k) {
        double e = tables_[i][r * cards_[i] + k];
        if (e < 0.0 || e > 1.0 + 1e-12)
          throw ArgumentError("table entry outside [0,1] for " +
                              graph_.name(v));
        s += e;
      }
      if (std::abs(s - 1.0) > 1e-9)
        throw ArgumentError("table row does not sum to 1 for " +
                            graph_.name(v));
      for (int k = 0; k < cards_[i]; ++k) tables_[i][r * cards_[i] + k] /= s;
    }
  }
}

int DiscreteBN::card(VariableId v) const {
  if (!v.valid() || static_cast<std::size_t>(v.value) >= cards_.size())
    throw NameError("variable id out of range");
  return cards_[v.value];
}

const std::vector<double>& DiscreteBN::table(VariableId v) const {
  card(v);  // range check
  return tables_[v.value];
}

double DiscreteBN::cpt_entry(VariableId v,
                             const std::vector<int>& full_values) const {
  std::size_t row = 0;
  for (std::int32_t p : parent_ids_[v.value])
    row = row * static_cast<std::size_t>(cards_[p]) +
          static_cast<std::size_t>(full_values[p]);
  return tables_[v.value][row * cards_[v.value] +
                          static_cast<std::size_t>(full_values[v.value])];
}

JointTable DiscreteBN::joint() const {
  std::size_t total = 1;
  for (int c : cards_) {
    total *= static_cast<std::size_t>(c);
    if (total > JointTable::kMaxCells)
      throw ResourceError("joint state space exceeds 2^24 cells");
  }
  JointTable out;
  out.cards = cards_;
  out.cells.resize(total);
  for_each_cell(cards_, [&](const std::vector<int>& values, std::size_t idx) {
    double w = 1.0;
    for (std::size_t i = 0; i < cards_.size(); ++i)
      w *= cpt_entry(VariableId{static_cast<std::int32_t>(i)}, values);
    out.cells[idx] = w;
  });
  return out;
}

DiscreteBN DiscreteBN::intervene(const Assignment& a) const {
  for (const auto& [v, value] : a.pairs()) {
    if (!graph_.observed(v))
      throw ArgumentError("cannot intervene on non-observed variable " +
                          graph_.name(v));
    if (value < 0 || value >= cards_[v.value])
      throw ArgumentError("intervention value out of range for " +
                          graph_.name(v));
  }
  CausalGraph cut = graph_.cut_incoming(a.vars());
  std::vector<std::vector<double>> tables = tables_;
  for (const auto& [v, value] : a.pairs()) {
    std::vector<double> point(static_cast<std::size_t>(cards_[v.value]), 0.0);
    point[static_cast<std::size_t>(value)] = 1.0;
    tables[v.value] = std::move(point);
  }
  return DiscreteBN(std::move(cut), cards_, std::move(tables));
}

DiscreteBN::AugmentedBn DiscreteBN::augmented(VariableId x,
                                              double prior_idle) const {
  if (prior_idle <= 0.0 || prior_idle >= 1.0)
    throw ArgumentError("idle prior must lie strictly inside (0,1)");
  auto [g2, f] = graph_.augment(x);

  const int cx = cards_[x.value];
  std::vector<int> cards = cards_;
  cards.push_back(cx + 1);

  std::vector<std::vector<double>> tables = tables_;
  // Indicator prior: idle, then each do(value) uniformly.
  std::vector<double> fprior(static_cast<std::size_t>(cx) + 1,
                             (1.0 - prior_idle) / cx);
  fprior[0] = prior_idle;
  tables.push_back(std::move(fprior));

  // New table for x over (old parents, F): F has the largest id so it is
  // the least significant parent coordinate.
  std::size_t old_rows = tables_[x.value].size() / cx;
  std::vector<double> table;
  table.reserve(old_rows * (cx + 1) * cx);
  for (std::size_t r = 0; r < old_rows; ++r) {
    for (int fv = 0; fv <= cx; ++fv) {
      for (int xv = 0; xv < cx; ++xv) {
        double e;
        if (fv == 0)
          e = tables_[x.value][r * cx + xv];  // idle: original mechanism
        else
          e = (xv == fv - 1) ? 1.0 : 0.0;  // do(fv-1): point mass
        table.push_back(e);
      }
    }
  }
  tables[x.value] = std::move(table);
  return AugmentedBn{DiscreteBN(std::move(g2), std::move(cards),
                                std::move(tables)),
                     f};
}

// Total mass of `event` under intervention `dos`, summed over the full
// space with the intervened mechanisms replaced by point masses.
double DiscreteBN::mass(const Assignment& event, const Assignment& dos) const {
  std::size_t total = 1;
  for (int c : cards_) {
    total *= static_cast<std::size_t>(c);
    if (total > JointTable::kMaxCells)
      throw ResourceError("joint state space exceeds 2^24 cells");
  }
  double s = 0;
  for_each_cell(cards_, [&](const std::vector<int>& values, std::size_t) {
    if (!matches(values, event) || !matches(values, dos)) return;
    double w = 1.0;
    for (std::size_t i = 0; i < cards_.size(); ++i) {
      VariableId v{static_cast<std::int32_t>(i)};
      if (dos.contains(v)) continue;  // replaced mechanism contributes 1
      w *= cpt_entry(v, values);
      if (w == 0.0) break;
    }
    s += w;
  });
  return s;
}

double DiscreteBN::prob(const Assignment& targets, const Assignment& obs,
                        const Assignment& dos) const {
  Assignment event = targets.merged_disjoint(obs);
  for (const auto& [v, value] : event.pairs()) {
    if (!graph_.observed(v))
      throw ArgumentError("only observed variables may be queried: " +
                          graph_.name(v));
    if (value < 0 || value >= cards_[v.value])
      throw ArgumentError("value out of range for " + graph_.name(v));
  }
  for (const auto& [v, value] : dos.pairs()) {
    if (!graph_.observed(v))
      throw ArgumentError("cannot intervene on non-observed variable " +
                          graph_.name(v));
    if (event.contains(v))
      throw ArgumentError("intervened variable also appears as target or "
                          "observation: " +
                          graph_.name(v));
    if (value < 0 || value >= cards_[v.value])
      throw ArgumentError("value out of range for " + graph_.name(v));
  }

  double den = obs.empty() ? 1.0 : mass(obs, dos);
  if (den == 0.0)
    throw UndefinedConditional("conditioning on a zero-probability event");
  double num = mass(event, dos);
  return num / den;
}

// ---------------------------------------------------------------------------
// Expression evaluation

namespace {

struct Evaluator {
  const DiscreteBN& bn;
  const Assignment& binding;
  std::vector<int> bound_values;  // innermost binder last

  int resolve(VariableId var, const ValueRef& ref) const {
    switch (ref.kind) {
      case ValueRef::Kind::Fixed:
        return ref.index;
      case ValueRef::Kind::Bound: {
        std::size_t i =
            bound_values.size() - 1 - static_cast<std::size_t>(ref.index);
        if (i >= bound_values.size())
          throw StructureError("bound occurrence without an enclosing sum");
        return bound_values[i];
      }
      case ValueRef::Kind::Free: {
        auto v = binding.get(var);
        if (!v)
          throw ArgumentError("free variable not covered by the binding: " +
                              bn.graph().name(var));
        return *v;
      }
    }
    return 0;
  }

  double term(const ProbTerm& t) const {
    Assignment targets, obs, dos;
    for (const TermVar& tv : t.targets())
      targets.set(tv.var, resolve(tv.var, tv.value));
    for (const TermCond& c : t.conditions()) {
      int v = resolve(c.var, c.value);
      if (c.mode == CondMode::Intervention)
        dos.set(c.var, v);
      else
        obs.set(c.var, v);
    }
    return bn.prob(targets, obs, dos);
  }

  double rec(const Expr& e) {
    if (e.is_one()) return 1.0;
    if (const TermNode* t = e.as_term()) return term(t->term);
    if (const SumNode* s = e.as_sum()) {
      double total = 0;
      int cd = bn.card(s->domain);
      bound_values.push_back(0);
      for (int v = 0; v < cd; ++v) {
        bound_values.back() = v;
        total += rec(*s->body);
      }
      bound_values.pop_back();
      return total;
    }
    if (const ProductNode* p = e.as_product()) {
      double total = 1;
      for (const ExprPtr& f : p->factors) total *= rec(*f);
      return total;
    }
    const QuotientNode* q = e.as_quotient();
    double num = rec(*q->num);
    double den = rec(*q->den);
    if (den == 0.0)
      throw UndefinedConditional("quotient with zero denominator");
    return num / den;
  }
};

}  // namespace

double DiscreteBN::eval(const ExprPtr& e, const Assignment& binding) const {
  Evaluator ev{*this, binding, {}};
  return ev.rec(*e);
}

// ---------------------------------------------------------------------------
// Random tables

namespace {

// Portable 53-bit uniform in (0,1); avoids distribution implementation
// differences across standard libraries.
double uniform01(std::uint64_t raw) {
  return (static_cast<double>(raw >> 11) + 0.5) * 0x1.0p-53;
}

struct SplitMix {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

}  // namespace

DiscreteBN random_bn(const CausalGraph& g, const std::vector<int>& cards,
                     std::uint64_t seed) {
  if (cards.size() != g.node_count())
    throw ArgumentError("one cardinality per node required");
  SplitMix rng{seed ^ 0x6a09e667f3bcc909ULL};
  std::vector<std::vector<double>> tables(g.node_count());
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    VariableId v{static_cast<std::int32_t>(i)};
    std::size_t rows = 1;
    for (VariableId p : g.parents(v))
      rows *= static_cast<std::size_t>(cards[p.value]);
    std::vector<double>& t = tables[i];
    t.resize(rows * static_cast<std::size_t>(cards[i]));
    for (std::size_t r = 0; r < rows; ++r) {
      double total = 0;
      for (int k = 0; k < cards[i]; ++k) {
        // Exp(1) draws normalized over a row sample Dirichlet(1,...,1).
        double e = -std::log(uniform01(rng.next()));
        t[r * cards[i] + k] = e;
        total += e;
      }
      for (int k = 0; k < cards[i]; ++k) t[r * cards[i] + k] /= total;
    }
  }
  return DiscreteBN(g, cards, std::move(tables));
}

DiscreteBN random_binary_bn(const CausalGraph& g, std::uint64_t seed) {
  return random_bn(g, std::vector<int>(g.node_count(), 2), seed);
}

// ---------------------------------------------------------------------------
// Configuration iteration helpers

void for_each_assignment(const DiscreteBN& bn, const NodeSet& vars,
                         const std::function<void(const Assignment&)>& fn) {
  std::vector<VariableId> order(vars.begin(), vars.end());
  std::vector<int> values(order.size(), 0);
  while (true) {
    Assignment a;
    for (std::size_t i = 0; i < order.size(); ++i) a.set(order[i], values[i]);
    fn(a);
    std::size_t i = order.size();
    while (i-- > 0) {
      if (++values[i] < bn.card(order[i])) break;
      values[i] = 0;
      if (i == 0) return;
    }
    if (order.empty()) return;
  }
}

std::size_t config_rank(const DiscreteBN& bn, const NodeSet& vars,
                        const Assignment& a) {
  std::size_t rank = 0;
  for (VariableId v : vars) {
    auto value = a.get(v);
    if (!value) throw ArgumentError("assignment does not cover " +
                                    bn.graph().name(v));
    rank = rank * static_cast<std::size_t>(bn.card(v)) +
           static_cast<std::size_t>(*value);
  }
  return rank;
}

std::size_t config_count(const DiscreteBN& bn, const NodeSet& vars) {
  std::size_t n = 1;
  for (VariableId v : vars) n *= static_cast<std::size_t>(bn.card(v));
  return n;
}

}  // namespace docalc
