#include "docalc/identify.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace docalc {

// ---------------------------------------------------------------------------
// Names

std::vector<MoveClass> default_move_order() {
  return {MoveClass::Rule3Delete, MoveClass::Rule2Exchange,
          MoveClass::Rule1Delete, MoveClass::FactorJoint,
          MoveClass::ExpandSum,   MoveClass::Rule1Insert,
          MoveClass::Rule3Insert};
}

std::string move_class_name(MoveClass m) {
  switch (m) {
    case MoveClass::Rule3Delete: return "r3-delete";
    case MoveClass::Rule2Exchange: return "r2";
    case MoveClass::Rule1Delete: return "r1-delete";
    case MoveClass::FactorJoint: return "factor-joint";
    case MoveClass::ExpandSum: return "expand-sum";
    case MoveClass::Rule1Insert: return "r1-insert";
    case MoveClass::Rule3Insert: return "r3-insert";
  }
  return "?";
}

std::optional<MoveClass> move_class_from_name(std::string_view name) {
  for (MoveClass m : default_move_order())
    if (move_class_name(m) == name) return m;
  return std::nullopt;
}

std::string move_kind_name(MoveKind k) {
  switch (k) {
    case MoveKind::R1: return "R1";
    case MoveKind::R2: return "R2";
    case MoveKind::R3: return "R3";
    case MoveKind::ExpandSum: return "ExpandSum";
    case MoveKind::FactorJoint: return "FactorJoint";
    case MoveKind::SubstituteKnown: return "SubstituteKnown";
  }
  return "?";
}

std::optional<MoveKind> move_kind_from_name(std::string_view name) {
  for (MoveKind k : {MoveKind::R1, MoveKind::R2, MoveKind::R3,
                     MoveKind::ExpandSum, MoveKind::FactorJoint,
                     MoveKind::SubstituteKnown})
    if (move_kind_name(k) == name) return k;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Tree addressing

namespace {

struct TermRef {
  std::vector<int> path;
  ProbTerm term;
  NodeSet enclosing_domains;
};

void collect_terms_rec(const ExprPtr& e, std::vector<int>& path,
                       std::vector<VariableId>& domains,
                       std::vector<TermRef>& out) {
  if (const TermNode* t = e->as_term()) {
    out.push_back(TermRef{path, t->term,
                          NodeSet(std::vector<VariableId>(domains))});
  } else if (const SumNode* s = e->as_sum()) {
    domains.push_back(s->domain);
    path.push_back(0);
    collect_terms_rec(s->body, path, domains, out);
    path.pop_back();
    domains.pop_back();
  } else if (const ProductNode* p = e->as_product()) {
    for (std::size_t i = 0; i < p->factors.size(); ++i) {
      path.push_back(static_cast<int>(i));
      collect_terms_rec(p->factors[i], path, domains, out);
      path.pop_back();
    }
  } else if (const QuotientNode* q = e->as_quotient()) {
    path.push_back(0);
    collect_terms_rec(q->num, path, domains, out);
    path.back() = 1;
    collect_terms_rec(q->den, path, domains, out);
    path.pop_back();
  }
}

std::vector<TermRef> collect_terms(const ExprPtr& e) {
  std::vector<TermRef> out;
  std::vector<int> path;
  std::vector<VariableId> domains;
  collect_terms_rec(e, path, domains, out);
  return out;
}

ExprPtr replace_rec(const ExprPtr& e, const std::vector<int>& path,
                    std::size_t k, const ExprPtr& repl) {
  if (k == path.size()) return repl;
  int idx = path[k];
  if (const SumNode* s = e->as_sum()) {
    if (idx != 0) throw StructureError("bad path step under a sum");
    return make_sum(s->domain, replace_rec(s->body, path, k + 1, repl));
  }
  if (const ProductNode* p = e->as_product()) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= p->factors.size())
      throw StructureError("bad path step under a product");
    std::vector<ExprPtr> fs = p->factors;
    fs[static_cast<std::size_t>(idx)] =
        replace_rec(fs[static_cast<std::size_t>(idx)], path, k + 1, repl);
    return make_product(std::move(fs));
  }
  if (const QuotientNode* q = e->as_quotient()) {
    if (idx == 0)
      return make_quotient(replace_rec(q->num, path, k + 1, repl), q->den);
    if (idx == 1)
      return make_quotient(q->num, replace_rec(q->den, path, k + 1, repl));
    throw StructureError("bad path step under a quotient");
  }
  throw StructureError("path descends below a leaf");
}

const ProbTerm& term_at(const ExprPtr& root, const std::vector<int>& path) {
  const Expr* e = root.get();
  for (int idx : path) {
    if (const SumNode* s = e->as_sum()) {
      if (idx != 0) throw StructureError("bad path step under a sum");
      e = s->body.get();
    } else if (const ProductNode* p = e->as_product()) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= p->factors.size())
        throw StructureError("bad path step under a product");
      e = p->factors[static_cast<std::size_t>(idx)].get();
    } else if (const QuotientNode* q = e->as_quotient()) {
      if (idx == 0)
        e = q->num.get();
      else if (idx == 1)
        e = q->den.get();
      else
        throw StructureError("bad path step under a quotient");
    } else {
      throw StructureError("path descends below a leaf");
    }
  }
  const TermNode* t = e->as_term();
  if (!t) throw StructureError("path does not address a term");
  return t->term;
}

// ---------------------------------------------------------------------------
// Moves

MoveKind rule_move_kind(Rule r) {
  switch (r) {
    case Rule::R1: return MoveKind::R1;
    case Rule::R2: return MoveKind::R2;
    case Rule::R3: return MoveKind::R3;
  }
  return MoveKind::R1;
}

struct MoveGenerator {
  const CausalGraph& g;
  const SearchConfig& config;

  // Called with every legal successor of `state`, in deterministic order.
  void enumerate(const ExprPtr& state,
                 const std::function<bool(Step&&)>& emit) const {
    std::vector<TermRef> terms = collect_terms(state);
    for (MoveClass mc : config.move_order)
      for (const TermRef& tr : terms)
        if (!per_term(state, tr, mc, emit)) return;
  }

 private:
  static void subsets(const NodeSet& vars,
                      const std::function<void(const NodeSet&)>& fn) {
    std::vector<VariableId> list(vars.begin(), vars.end());
    const std::size_t k = list.size();
    for (std::size_t mask = 1; mask < (std::size_t{1} << k); ++mask) {
      std::vector<VariableId> subset;
      for (std::size_t i = 0; i < k; ++i)
        if (mask & (std::size_t{1} << i)) subset.push_back(list[i]);
      fn(NodeSet(std::move(subset)));
    }
  }

  bool emit_rule(const ExprPtr& state, const TermRef& tr, Rule rule,
                 const NodeSet& z, Direction dir,
                 const std::function<bool(Step&&)>& emit) const {
    RuleOutcome out = apply_rule(g, rule, tr.term, z, dir);
    const RuleApplication* app = applied(out);
    if (!app) return true;
    Step step;
    step.kind = rule_move_kind(rule);
    step.path = tr.path;
    step.rule = app->instance;
    step.result = canonicalize(
        replace_rec(state, tr.path, 0, make_term(app->result)));
    return emit(std::move(step));
  }

  // Variables eligible for insertion into this term: observed, not
  // mentioned, and not the domain of an enclosing binder (no capture).
  NodeSet insert_candidates(const TermRef& tr) const {
    NodeSet out = g.observed_nodes() - tr.term.all_vars()
                  - tr.enclosing_domains;
    return out;
  }

  // Conditioning expansions are capped to observed variables connected to
  // both an intervention variable and a target of the term in the
  // undirected skeleton.
  NodeSet expand_candidates(const TermRef& tr) const {
    NodeSet ints = tr.term.condition_vars(CondMode::Intervention);
    if (ints.empty()) return {};
    NodeSet near_action = g.skeleton_reachable(ints);
    NodeSet near_target = g.skeleton_reachable(tr.term.target_vars());
    return ((g.observed_nodes() & near_action) & near_target) -
           tr.term.all_vars();
  }

  bool per_term(const ExprPtr& state, const TermRef& tr, MoveClass mc,
                const std::function<bool(Step&&)>& emit) const {
    bool keep = true;
    switch (mc) {
      case MoveClass::Rule3Delete:
        subsets(tr.term.condition_vars(CondMode::Intervention),
                [&](const NodeSet& z) {
                  if (keep)
                    keep = emit_rule(state, tr, Rule::R3, z,
                                     Direction::Forward, emit);
                });
        break;
      case MoveClass::Rule2Exchange:
        subsets(tr.term.condition_vars(CondMode::Intervention),
                [&](const NodeSet& z) {
                  if (keep)
                    keep = emit_rule(state, tr, Rule::R2, z,
                                     Direction::Forward, emit);
                });
        subsets(tr.term.condition_vars(CondMode::Observation),
                [&](const NodeSet& z) {
                  if (keep)
                    keep = emit_rule(state, tr, Rule::R2, z,
                                     Direction::Backward, emit);
                });
        break;
      case MoveClass::Rule1Delete:
        subsets(tr.term.condition_vars(CondMode::Observation),
                [&](const NodeSet& z) {
                  if (keep)
                    keep = emit_rule(state, tr, Rule::R1, z,
                                     Direction::Forward, emit);
                });
        break;
      case MoveClass::FactorJoint:
        if (tr.term.targets().size() >= 2) {
          for (const TermVar& t : tr.term.targets()) {
            if (!keep) break;
            Step step;
            step.kind = MoveKind::FactorJoint;
            step.path = tr.path;
            step.variable = t.var;
            step.result = canonicalize(
                replace_rec(state, tr.path, 0, factor_joint(tr.term, t.var)));
            keep = emit(std::move(step));
          }
        }
        break;
      case MoveClass::ExpandSum:
        for (VariableId v : expand_candidates(tr)) {
          if (!keep) break;
          Step step;
          step.kind = MoveKind::ExpandSum;
          step.path = tr.path;
          step.variable = v;
          step.result = canonicalize(
              replace_rec(state, tr.path, 0,
                          expand_by_conditioning(g, tr.term, v)));
          keep = emit(std::move(step));
        }
        break;
      case MoveClass::Rule1Insert:
        for (VariableId v : insert_candidates(tr)) {
          if (!keep) break;
          keep = emit_rule(state, tr, Rule::R1, NodeSet{v},
                           Direction::Backward, emit);
        }
        break;
      case MoveClass::Rule3Insert:
        for (VariableId v : insert_candidates(tr)) {
          if (!keep) break;
          keep = emit_rule(state, tr, Rule::R3, NodeSet{v},
                           Direction::Backward, emit);
        }
        break;
    }
    return keep;
  }
};

// ---------------------------------------------------------------------------
// Search

void check_query_vars(const CausalGraph& g, const ExprPtr& query) {
  for (const TermRef& tr : collect_terms(query))
    for (VariableId v : tr.term.all_vars())
      if (!g.observed(v))
        throw ArgumentError(
            "queries may mention observed variables only, got " + g.name(v));
}

struct SearchNodeRec {
  ExprPtr state;
  int depth = 0;
  int parent = -1;
  Step step;  // move that produced this node (unused for the root)
  bool terminal_hit = false;
};

bool goal_state(const ExprPtr& state, const std::vector<ProbTerm>& known) {
  for (const TermRef& tr : collect_terms(state)) {
    if (tr.term.hat_free()) continue;
    bool matched = false;
    for (const ProbTerm& k : known)
      if (tr.term.same_shape(k)) {
        matched = true;
        break;
      }
    if (!matched) return false;
  }
  return true;
}

IdentifyOutcome run_search(const CausalGraph& g, const ExprPtr& query,
                           const std::vector<ProbTerm>& known,
                           const SearchConfig& config) {
  check_query_vars(g, query);
  ExprPtr root = canonicalize(query);

  std::vector<SearchNodeRec> arena;
  arena.push_back(SearchNodeRec{root, 0, -1, {}, false});
  std::unordered_map<ExprPtr, int, ExprPtrHash, ExprPtrEq> memo;
  memo.emplace(root, 0);

  auto build_derivation = [&](int goal_idx) {
    Derivation d{g, root, {}, arena[static_cast<std::size_t>(goal_idx)].state};
    for (int i = goal_idx; i > 0;
         i = arena[static_cast<std::size_t>(i)].parent)
      d.steps.push_back(arena[static_cast<std::size_t>(i)].step);
    std::reverse(d.steps.begin(), d.steps.end());
    return d;
  };

  if (goal_state(root, known))
    return Identified{build_derivation(0)};

  MoveGenerator gen{g, config};
  std::deque<int> queue{0};
  bool state_cap_hit = false;

  while (!queue.empty()) {
    int at = queue.front();
    queue.pop_front();
    const int depth = arena[static_cast<std::size_t>(at)].depth;
    if (depth >= config.max_depth) continue;

    if (config.trace >= 2 && config.trace_out)
      *config.trace_out << "expand depth=" << depth << " "
                        << render(g, arena[static_cast<std::size_t>(at)].state)
                        << "\n";

    int found = -1;
    ExprPtr state = arena[static_cast<std::size_t>(at)].state;
    gen.enumerate(state, [&](Step&& step) {
      if (config.memoize && memo.count(step.result)) return true;
      if (arena.size() >= config.max_states) {
        state_cap_hit = true;
        return false;
      }
      ExprPtr child = step.result;
      arena.push_back(SearchNodeRec{child, depth + 1, at, std::move(step),
                                    false});
      int idx = static_cast<int>(arena.size() - 1);
      if (config.memoize) memo.emplace(child, idx);
      if (goal_state(child, known)) {
        found = idx;
        return false;
      }
      queue.push_back(idx);
      return true;
    });
    if (found >= 0) {
      if (config.trace >= 1 && config.trace_out)
        *config.trace_out << "identified after exploring " << arena.size()
                          << " states\n";
      return Identified{build_derivation(found)};
    }
    if (state_cap_hit) return Aborted{arena.size()};
  }

  std::size_t frontier = 0;
  for (const SearchNodeRec& rec : arena)
    if (rec.depth == config.max_depth) ++frontier;
  if (config.trace >= 1 && config.trace_out)
    *config.trace_out << "exhausted " << arena.size()
                      << " states without a hat-free form\n";
  return NonIdentified{config.max_depth, frontier};
}

}  // namespace

IdentifyOutcome identify(const CausalGraph& g, const ExprPtr& query,
                         const SearchConfig& config) {
  return run_search(g, query, {}, config);
}

IdentifyOutcome identify_from_causal_inputs(const CausalGraph& g,
                                            const ExprPtr& query,
                                            const std::vector<ProbTerm>& known,
                                            const SearchConfig& config) {
  return run_search(g, query, known, config);
}

// ---------------------------------------------------------------------------
// Replay and explanation

ExprPtr replay(const Derivation& d) {
  ExprPtr state = canonicalize(d.initial);
  for (const Step& step : d.steps) {
    const ProbTerm& term = term_at(state, step.path);
    ExprPtr replacement;
    switch (step.kind) {
      case MoveKind::R1:
      case MoveKind::R2:
      case MoveKind::R3: {
        if (!step.rule) throw StructureError("rule step without an instance");
        if (!recheck(d.graph, *step.rule))
          throw StructureError(
              "recorded separation condition no longer holds");
        RuleOutcome out = apply_rule(d.graph, step.rule->rule, term,
                                     step.rule->moved, step.rule->dir);
        const RuleApplication* app = applied(out);
        if (!app) throw StructureError("recorded rule fails to re-apply");
        replacement = make_term(app->result);
        break;
      }
      case MoveKind::ExpandSum:
        if (!step.variable)
          throw StructureError("expansion step without a variable");
        replacement = expand_by_conditioning(d.graph, term, *step.variable);
        break;
      case MoveKind::FactorJoint:
        if (!step.variable)
          throw StructureError("split step without a variable");
        replacement = factor_joint(term, *step.variable);
        break;
      case MoveKind::SubstituteKnown:
        replacement = make_term(term);
        break;
    }
    state = canonicalize(replace_rec(state, step.path, 0, replacement));
    if (!equal(state, step.result))
      throw StructureError("replayed state differs from the recorded one");
  }
  if (!equal(state, d.final_expr))
    throw StructureError("replayed final expression differs");
  return state;
}

namespace {

std::string set_names(const CausalGraph& g, const NodeSet& s) {
  std::string out;
  for (VariableId v : s) {
    if (!out.empty()) out += ",";
    out += g.name(v);
  }
  return out;
}

const char* rule_action_label(Rule rule, Direction dir) {
  bool fwd = dir == Direction::Forward;
  switch (rule) {
    case Rule::R1: return fwd ? "delete observations" : "insert observations";
    case Rule::R2:
      return fwd ? "exchange action for observation"
                 : "exchange observation for action";
    case Rule::R3: return fwd ? "delete actions" : "insert actions";
  }
  return "?";
}

}  // namespace

std::string explain(const Derivation& d) {
  std::ostringstream out;
  out << "query: " << render(d.graph, d.initial) << "\n";
  int n = 0;
  for (const Step& step : d.steps) {
    out << "  " << ++n << ". " << move_kind_name(step.kind);
    if (step.rule) {
      const RuleInstance& inst = *step.rule;
      out << " " << rule_action_label(inst.rule, inst.dir) << " {"
          << set_names(d.graph, inst.moved) << "}: ("
          << set_names(d.graph, inst.targets) << " ⊥ "
          << set_names(d.graph, inst.moved);
      if (!inst.sep_given.empty())
        out << " | " << set_names(d.graph, inst.sep_given);
      out << ") holds in " << surgery_label(d.graph, inst);
    } else if (step.kind == MoveKind::ExpandSum) {
      out << " over " << d.graph.name(*step.variable);
    } else if (step.kind == MoveKind::FactorJoint) {
      out << " splitting " << d.graph.name(*step.variable);
    }
    out << "\n     => " << render(d.graph, step.result) << "\n";
  }
  out << "final: " << render(d.graph, d.final_expr) << "\n";
  return out.str();
}

}  // namespace docalc
