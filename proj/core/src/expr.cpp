#include "docalc/expr.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

namespace docalc {

// ---------------------------------------------------------------------------
// ProbTerm

ProbTerm::ProbTerm(std::vector<TermVar> targets,
                   std::vector<TermCond> conditions)
    : targets_(std::move(targets)), conditions_(std::move(conditions)) {
  if (targets_.empty()) throw StructureError("term needs at least one target");
  std::sort(targets_.begin(), targets_.end(),
            [](const TermVar& a, const TermVar& b) { return a.var < b.var; });
  std::sort(conditions_.begin(), conditions_.end(),
            [](const TermCond& a, const TermCond& b) { return a.var < b.var; });

  std::vector<VariableId> all;
  for (const TermVar& t : targets_) all.push_back(t.var);
  for (const TermCond& c : conditions_) all.push_back(c.var);
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end())
    throw StructureError("variable mentioned twice in one term");
}

bool ProbTerm::mentions(VariableId v) const {
  for (const TermVar& t : targets_)
    if (t.var == v) return true;
  for (const TermCond& c : conditions_)
    if (c.var == v) return true;
  return false;
}

NodeSet ProbTerm::target_vars() const {
  std::vector<VariableId> out;
  for (const TermVar& t : targets_) out.push_back(t.var);
  return NodeSet(std::move(out));
}

NodeSet ProbTerm::condition_vars(CondMode mode) const {
  std::vector<VariableId> out;
  for (const TermCond& c : conditions_)
    if (c.mode == mode) out.push_back(c.var);
  return NodeSet(std::move(out));
}

NodeSet ProbTerm::all_vars() const {
  std::vector<VariableId> out;
  for (const TermVar& t : targets_) out.push_back(t.var);
  for (const TermCond& c : conditions_) out.push_back(c.var);
  return NodeSet(std::move(out));
}

bool ProbTerm::hat_free() const {
  for (const TermCond& c : conditions_)
    if (c.mode == CondMode::Intervention) return false;
  return true;
}

int ProbTerm::max_bound_depth() const {
  int depth = -1;
  auto visit = [&](const ValueRef& v) {
    if (v.kind == ValueRef::Kind::Bound) depth = std::max(depth, v.index);
  };
  for (const TermVar& t : targets_) visit(t.value);
  for (const TermCond& c : conditions_) visit(c.value);
  return depth;
}

ProbTerm ProbTerm::shift_bound(int delta, int threshold) const {
  auto shift = [&](ValueRef v) {
    if (v.kind == ValueRef::Kind::Bound && v.index >= threshold)
      v.index += delta;
    return v;
  };
  std::vector<TermVar> ts = targets_;
  std::vector<TermCond> cs = conditions_;
  for (TermVar& t : ts) t.value = shift(t.value);
  for (TermCond& c : cs) c.value = shift(c.value);
  return ProbTerm(std::move(ts), std::move(cs));
}

bool ProbTerm::references_depth(int depth) const {
  auto hits = [&](const ValueRef& v) {
    return v.kind == ValueRef::Kind::Bound && v.index == depth;
  };
  for (const TermVar& t : targets_)
    if (hits(t.value)) return true;
  for (const TermCond& c : conditions_)
    if (hits(c.value)) return true;
  return false;
}

bool ProbTerm::same_shape(const ProbTerm& other) const {
  if (targets_.size() != other.targets_.size() ||
      conditions_.size() != other.conditions_.size())
    return false;
  for (std::size_t i = 0; i < targets_.size(); ++i)
    if (targets_[i].var != other.targets_[i].var) return false;
  for (std::size_t i = 0; i < conditions_.size(); ++i)
    if (conditions_[i].var != other.conditions_[i].var ||
        conditions_[i].mode != other.conditions_[i].mode)
      return false;
  return true;
}

// ---------------------------------------------------------------------------
// Constructors

ExprPtr make_term(ProbTerm term) {
  return std::make_shared<Expr>(TermNode{std::move(term)});
}
ExprPtr make_sum(VariableId domain, ExprPtr body) {
  return std::make_shared<Expr>(SumNode{domain, std::move(body)});
}
ExprPtr make_product(std::vector<ExprPtr> factors) {
  return std::make_shared<Expr>(ProductNode{std::move(factors)});
}
ExprPtr make_quotient(ExprPtr num, ExprPtr den) {
  return std::make_shared<Expr>(QuotientNode{std::move(num), std::move(den)});
}
ExprPtr expr_one() {
  static const ExprPtr one = std::make_shared<Expr>(OneNode{});
  return one;
}

// ---------------------------------------------------------------------------
// Structural order and hashing

namespace {

int kind_rank(const Expr& e) {
  return static_cast<int>(e.node().index());  // variant order fixes ranks
}

}  // namespace

std::strong_ordering compare(const Expr& a, const Expr& b) {
  // Rank order: Term < Sum < Product < Quotient < One is not what we want
  // for rendering; use an explicit rank where One sorts first and terms
  // precede sums so that canonical products read terms-then-sums.
  auto rank = [](const Expr& e) {
    if (e.is_one()) return 0;
    if (e.as_term()) return 1;
    if (e.as_sum()) return 2;
    if (e.as_product()) return 3;
    return 4;
  };
  if (int ra = rank(a), rb = rank(b); ra != rb)
    return ra <=> rb;

  if (a.is_one()) return std::strong_ordering::equal;
  if (const TermNode* ta = a.as_term()) {
    const TermNode* tb = b.as_term();
    return ta->term <=> tb->term;
  }
  if (const SumNode* sa = a.as_sum()) {
    const SumNode* sb = b.as_sum();
    if (auto c = sa->domain <=> sb->domain; c != 0) return c;
    return compare(*sa->body, *sb->body);
  }
  if (const ProductNode* pa = a.as_product()) {
    const ProductNode* pb = b.as_product();
    std::size_t n = std::min(pa->factors.size(), pb->factors.size());
    for (std::size_t i = 0; i < n; ++i)
      if (auto c = compare(*pa->factors[i], *pb->factors[i]); c != 0) return c;
    return pa->factors.size() <=> pb->factors.size();
  }
  const QuotientNode* qa = a.as_quotient();
  const QuotientNode* qb = b.as_quotient();
  if (auto c = compare(*qa->num, *qb->num); c != 0) return c;
  return compare(*qa->den, *qb->den);
}

bool equal(const ExprPtr& a, const ExprPtr& b) {
  if (a.get() == b.get()) return true;
  return compare(*a, *b) == 0;
}

namespace {

void hash_combine(std::size_t& seed, std::size_t v) {
  seed ^= v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
}

std::size_t hash_term(const ProbTerm& t) {
  std::size_t h = 0x51ed270b;
  for (const TermVar& tv : t.targets()) {
    hash_combine(h, static_cast<std::size_t>(tv.var.value));
    hash_combine(h, static_cast<std::size_t>(tv.value.kind));
    hash_combine(h, static_cast<std::size_t>(tv.value.index));
  }
  hash_combine(h, 0xabcd);
  for (const TermCond& c : t.conditions()) {
    hash_combine(h, static_cast<std::size_t>(c.var.value));
    hash_combine(h, static_cast<std::size_t>(c.mode));
    hash_combine(h, static_cast<std::size_t>(c.value.kind));
    hash_combine(h, static_cast<std::size_t>(c.value.index));
  }
  return h;
}

}  // namespace

std::size_t hash_value(const Expr& e) {
  std::size_t h = static_cast<std::size_t>(kind_rank(e)) * 0x9e3779b1;
  if (const TermNode* t = e.as_term()) {
    hash_combine(h, hash_term(t->term));
  } else if (const SumNode* s = e.as_sum()) {
    hash_combine(h, static_cast<std::size_t>(s->domain.value));
    hash_combine(h, hash_value(*s->body));
  } else if (const ProductNode* p = e.as_product()) {
    for (const ExprPtr& f : p->factors) hash_combine(h, hash_value(*f));
  } else if (const QuotientNode* q = e.as_quotient()) {
    hash_combine(h, hash_value(*q->num));
    hash_combine(h, hash_value(*q->den));
  }
  return h;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

// Walk counting binders; record, for each enclosing sum, whether a term
// references it, and check that no term references past the binder stack.
void validate_rec(const Expr& e, int binders, std::vector<char>& used) {
  if (const TermNode* t = e.as_term()) {
    auto check = [&](const ValueRef& v) {
      if (v.kind != ValueRef::Kind::Bound) return;
      if (v.index < 0 || v.index >= binders)
        throw StructureError("bound occurrence without an enclosing sum");
      used[binders - 1 - v.index] = 1;
    };
    for (const TermVar& tv : t->term.targets()) check(tv.value);
    for (const TermCond& c : t->term.conditions()) check(c.value);
  } else if (const SumNode* s = e.as_sum()) {
    used.push_back(0);
    validate_rec(*s->body, binders + 1, used);
    if (!used.back())
      throw StructureError("summation binder is never referenced in its body");
    used.pop_back();
  } else if (const ProductNode* p = e.as_product()) {
    for (const ExprPtr& f : p->factors) validate_rec(*f, binders, used);
  } else if (const QuotientNode* q = e.as_quotient()) {
    validate_rec(*q->num, binders, used);
    validate_rec(*q->den, binders, used);
  }
}

}  // namespace

void validate(const ExprPtr& e) {
  std::vector<char> used;
  validate_rec(*e, 0, used);
}

// ---------------------------------------------------------------------------
// Canonicalization

namespace {

// Remap bound depths inside `e`: an occurrence whose depth, relative to the
// start of the walk, equals r in [0, k) is rewritten to map[r]. `inner`
// counts binders passed since the walk started.
ExprPtr remap_window(const ExprPtr& e, int inner, const std::vector<int>& map) {
  const int k = static_cast<int>(map.size());
  if (const TermNode* t = e.as_term()) {
    auto fix = [&](ValueRef v) {
      if (v.kind == ValueRef::Kind::Bound) {
        int rel = v.index - inner;
        if (rel >= 0 && rel < k) v.index = inner + map[rel];
      }
      return v;
    };
    std::vector<TermVar> ts = t->term.targets();
    std::vector<TermCond> cs = t->term.conditions();
    for (TermVar& tv : ts) tv.value = fix(tv.value);
    for (TermCond& c : cs) c.value = fix(c.value);
    return make_term(ProbTerm(std::move(ts), std::move(cs)));
  }
  if (const SumNode* s = e.as_sum())
    return make_sum(s->domain, remap_window(s->body, inner + 1, map));
  if (const ProductNode* p = e.as_product()) {
    std::vector<ExprPtr> fs;
    fs.reserve(p->factors.size());
    for (const ExprPtr& f : p->factors)
      fs.push_back(remap_window(f, inner, map));
    return make_product(std::move(fs));
  }
  if (const QuotientNode* q = e.as_quotient())
    return make_quotient(remap_window(q->num, inner, map),
                         remap_window(q->den, inner, map));
  return e;
}

ExprPtr canon_rec(const ExprPtr& e) {
  if (e->is_one()) return expr_one();
  if (e->as_term()) return e;

  if (const SumNode* s = e->as_sum()) {
    ExprPtr body = canon_rec(s->body);
    // Gather the maximal directly-nested sum chain and sort its binders.
    std::vector<VariableId> chain{s->domain};
    ExprPtr inner = body;
    while (const SumNode* next = inner->as_sum()) {
      chain.push_back(next->domain);
      inner = next->body;
    }
    const int k = static_cast<int>(chain.size());
    if (k > 1) {
      std::vector<int> perm(k);
      std::iota(perm.begin(), perm.end(), 0);
      std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
        return chain[a] < chain[b];
      });
      bool identity = std::is_sorted(perm.begin(), perm.end());
      if (!identity) {
        std::vector<int> inv(k);
        for (int j = 0; j < k; ++j) inv[perm[j]] = j;
        // Occurrence at relative depth r references old chain position
        // k-1-r; its new depth is k-1-inv[k-1-r].
        std::vector<int> depth_map(k);
        for (int r = 0; r < k; ++r) depth_map[r] = k - 1 - inv[k - 1 - r];
        inner = remap_window(inner, 0, depth_map);
        ExprPtr rebuilt = inner;
        for (int j = k - 1; j >= 0; --j)
          rebuilt = make_sum(chain[perm[j]], rebuilt);
        return rebuilt;
      }
    }
    return make_sum(s->domain, body);
  }

  if (const ProductNode* p = e->as_product()) {
    std::vector<ExprPtr> factors;
    for (const ExprPtr& f : p->factors) {
      ExprPtr cf = canon_rec(f);
      if (cf->is_one()) continue;
      if (const ProductNode* nested = cf->as_product())
        factors.insert(factors.end(), nested->factors.begin(),
                       nested->factors.end());
      else
        factors.push_back(cf);
    }
    if (factors.empty()) return expr_one();
    if (factors.size() == 1) return factors[0];
    std::stable_sort(factors.begin(), factors.end(),
                     [](const ExprPtr& a, const ExprPtr& b) {
                       return compare(*a, *b) < 0;
                     });
    return make_product(std::move(factors));
  }

  const QuotientNode* q = e->as_quotient();
  ExprPtr num = canon_rec(q->num);
  ExprPtr den = canon_rec(q->den);
  if (equal(num, den)) return expr_one();
  return make_quotient(std::move(num), std::move(den));
}

}  // namespace

ExprPtr canonicalize(const ExprPtr& e) {
  validate(e);
  return canon_rec(e);
}

// ---------------------------------------------------------------------------
// Queries

namespace {

void walk(const Expr& e, const std::function<void(const ProbTerm&)>& f) {
  if (const TermNode* t = e.as_term())
    f(t->term);
  else if (const SumNode* s = e.as_sum())
    walk(*s->body, f);
  else if (const ProductNode* p = e.as_product())
    for (const ExprPtr& x : p->factors) walk(*x, f);
  else if (const QuotientNode* q = e.as_quotient()) {
    walk(*q->num, f);
    walk(*q->den, f);
  }
}

}  // namespace

bool is_hat_free(const ExprPtr& e) {
  bool ok = true;
  walk(*e, [&](const ProbTerm& t) { ok = ok && t.hat_free(); });
  return ok;
}

NodeSet free_variables(const ExprPtr& e) {
  std::vector<VariableId> out;
  walk(*e, [&](const ProbTerm& t) {
    for (const TermVar& tv : t.targets())
      if (tv.value.kind == ValueRef::Kind::Free) out.push_back(tv.var);
    for (const TermCond& c : t.conditions())
      if (c.value.kind == ValueRef::Kind::Free) out.push_back(c.var);
  });
  return NodeSet(std::move(out));
}

// ---------------------------------------------------------------------------
// Expansion moves

ExprPtr expand_by_conditioning(const CausalGraph& g, const ProbTerm& term,
                               VariableId v) {
  if (!g.observed(v))
    throw ArgumentError("can only expand over observed variables: " +
                        g.name(v));
  if (term.mentions(v))
    throw ArgumentError("variable already mentioned in the term: " +
                        g.name(v));
  ProbTerm shifted = term.shift_bound(+1);

  std::vector<TermCond> conds1 = shifted.conditions();
  conds1.push_back(TermCond{v, CondMode::Observation, ValueRef::bound(0)});
  ProbTerm first(shifted.targets(), std::move(conds1));

  ProbTerm second({TermVar{v, ValueRef::bound(0)}}, shifted.conditions());

  return make_sum(v, make_product({make_term(std::move(first)),
                                   make_term(std::move(second))}));
}

ExprPtr factor_joint(const ProbTerm& term) {
  if (term.targets().size() < 2)
    throw ArgumentError("chain-rule split needs at least two targets");
  return factor_joint(term, term.targets().back().var);
}

ExprPtr factor_joint(const ProbTerm& term, VariableId split) {
  if (term.targets().size() < 2)
    throw ArgumentError("chain-rule split needs at least two targets");
  const TermVar* moved = nullptr;
  std::vector<TermVar> rest;
  for (const TermVar& t : term.targets()) {
    if (t.var == split)
      moved = &t;
    else
      rest.push_back(t);
  }
  if (!moved)
    throw ArgumentError("split variable is not a target of the term");

  std::vector<TermCond> conds1 = term.conditions();
  conds1.push_back(TermCond{moved->var, CondMode::Observation, moved->value});
  ProbTerm first(std::move(rest), std::move(conds1));
  ProbTerm second({*moved}, term.conditions());
  return make_product({make_term(std::move(first)),
                       make_term(std::move(second))});
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

struct Renderer {
  const CausalGraph& g;
  std::set<std::string> free_names;
  std::vector<std::string> displays;  // enclosing binders, outermost first

  std::string slot_name(VariableId var, const ValueRef& v) const {
    switch (v.kind) {
      case ValueRef::Kind::Free:
        return g.name(var);
      case ValueRef::Kind::Bound: {
        std::size_t i = displays.size() - 1 - static_cast<std::size_t>(v.index);
        return displays.at(i);
      }
      case ValueRef::Kind::Fixed:
        return g.name(var) + "=" + std::to_string(v.index);
    }
    return {};
  }

  std::string term(const ProbTerm& t) const {
    std::ostringstream out;
    out << "P(";
    bool first = true;
    for (const TermVar& tv : t.targets()) {
      if (!first) out << ",";
      first = false;
      out << slot_name(tv.var, tv.value);
    }
    if (!t.conditions().empty()) {
      out << "|";
      first = true;
      for (const TermCond& c : t.conditions()) {
        if (!first) out << ",";
        first = false;
        if (c.mode == CondMode::Intervention)
          out << "do(" << slot_name(c.var, c.value) << ")";
        else
          out << slot_name(c.var, c.value);
      }
    }
    out << ")";
    return out.str();
  }

  bool needs_parens_in_product(const Expr& e, bool last) const {
    if (e.as_quotient()) return true;
    if (e.as_sum()) return !last;  // a sum's body runs to the end
    return false;
  }

  std::string rec(const Expr& e) {
    if (e.is_one()) return "1";
    if (const TermNode* t = e.as_term()) return term(t->term);
    if (const SumNode* s = e.as_sum()) {
      std::string display = g.name(s->domain);
      auto clashes = [&](const std::string& name) {
        if (free_names.count(name)) return true;
        return std::find(displays.begin(), displays.end(), name) !=
               displays.end();
      };
      while (clashes(display)) display += "'";
      displays.push_back(display);
      std::string body = rec(*s->body);
      displays.pop_back();
      if (s->body->as_quotient()) body = "(" + body + ")";
      return "Σ_" + display + " " + body;
    }
    if (const ProductNode* p = e.as_product()) {
      std::ostringstream out;
      for (std::size_t i = 0; i < p->factors.size(); ++i) {
        if (i) out << " ";
        const Expr& f = *p->factors[i];
        bool last = i + 1 == p->factors.size();
        if (needs_parens_in_product(f, last))
          out << "(" << rec(f) << ")";
        else
          out << rec(f);
      }
      return out.str();
    }
    const QuotientNode* q = e.as_quotient();
    auto side = [&](const Expr& x) {
      std::string s = rec(x);
      if (x.as_term() || x.is_one()) return s;
      return "(" + s + ")";
    };
    return side(*q->num) + " / " + side(*q->den);
  }
};

}  // namespace

std::string render(const CausalGraph& g, const ExprPtr& e) {
  Renderer r{g, {}, {}};
  for (VariableId v : free_variables(e)) r.free_names.insert(g.name(v));
  return r.rec(*e);
}

}  // namespace docalc
