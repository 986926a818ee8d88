#include "docalc/rules.hpp"

#include <algorithm>
#include <sstream>

namespace docalc {

namespace {

// Splits the term's conditions into the moved slots and everything else.
struct Split {
  std::vector<TermCond> moved;
  std::vector<TermCond> kept;
};

Split split_conditions(const ProbTerm& term, const NodeSet& z) {
  Split s;
  for (const TermCond& c : term.conditions()) {
    if (z.contains(c.var))
      s.moved.push_back(c);
    else
      s.kept.push_back(c);
  }
  return s;
}

void require_nonempty(const NodeSet& z) {
  if (z.empty()) throw ArgumentError("the moved set must be nonempty");
}

void require_in_term(const ProbTerm& term, const NodeSet& z, CondMode mode,
                     const char* what) {
  for (VariableId v : z) {
    bool found = false;
    for (const TermCond& c : term.conditions())
      if (c.var == v && c.mode == mode) found = true;
    if (!found)
      throw ArgumentError(std::string("moved variable is not ") + what +
                          " of the term");
  }
}

void require_fresh(const CausalGraph& g, const ProbTerm& term,
                   const NodeSet& z) {
  for (VariableId v : z) {
    if (term.mentions(v))
      throw ArgumentError("inserted variable already mentioned in the term: " +
                          g.name(v));
    if (!g.observed(v))
      throw ArgumentError("only observed variables may appear in a term: " +
                          g.name(v));
  }
}

RuleOutcome check_and_build(const CausalGraph& g, RuleInstance inst,
                            ProbTerm result) {
  CausalGraph surgered = surgered_graph(g, inst);
  if (auto path =
          unblocked_path(surgered, inst.targets, inst.moved, inst.sep_given))
    return NotApplicable{std::move(*path)};
  return RuleApplication{std::move(inst), std::move(result)};
}

}  // namespace

CausalGraph surgered_graph(const CausalGraph& g, const RuleInstance& inst) {
  return g.cut_incoming(inst.cut_incoming).cut_outgoing(inst.cut_outgoing);
}

bool recheck(const CausalGraph& g, const RuleInstance& inst) {
  return d_separated(surgered_graph(g, inst), inst.targets, inst.moved,
                     inst.sep_given);
}

std::string surgery_label(const CausalGraph& g, const RuleInstance& inst) {
  std::ostringstream out;
  out << "G";
  auto list = [&](const char* tag, const NodeSet& s) {
    if (s.empty()) return;
    out << " - " << tag << "(";
    bool first = true;
    for (VariableId v : s) {
      if (!first) out << ",";
      first = false;
      out << g.name(v);
    }
    out << ")";
  };
  list("in", inst.cut_incoming);
  list("out", inst.cut_outgoing);
  return out.str();
}

// ---------------------------------------------------------------------------
// Rule 1: insertion/deletion of observations

RuleOutcome rule1(const CausalGraph& g, const ProbTerm& term, const NodeSet& z,
                  Direction dir) {
  require_nonempty(z);
  NodeSet held = term.condition_vars(CondMode::Intervention);

  RuleInstance inst;
  inst.rule = Rule::R1;
  inst.dir = dir;
  inst.targets = term.target_vars();
  inst.held = held;
  inst.moved = z;
  inst.cut_incoming = held;
  inst.cut_outgoing = {};

  if (dir == Direction::Forward) {
    require_in_term(term, z, CondMode::Observation, "an observation");
    Split s = split_conditions(term, z);
    inst.rest = term.condition_vars(CondMode::Observation) - z;
    inst.sep_given = held | inst.rest;
    return check_and_build(g, std::move(inst),
                           ProbTerm(term.targets(), std::move(s.kept)));
  }

  require_fresh(g, term, z);
  inst.rest = term.condition_vars(CondMode::Observation);
  inst.sep_given = held | inst.rest;
  std::vector<TermCond> conds = term.conditions();
  for (VariableId v : z)
    conds.push_back(TermCond{v, CondMode::Observation, ValueRef::free()});
  return check_and_build(g, std::move(inst),
                         ProbTerm(term.targets(), std::move(conds)));
}

// ---------------------------------------------------------------------------
// Rule 2: action/observation exchange

RuleOutcome rule2(const CausalGraph& g, const ProbTerm& term, const NodeSet& z,
                  Direction dir) {
  require_nonempty(z);
  CondMode from = dir == Direction::Forward ? CondMode::Intervention
                                            : CondMode::Observation;
  CondMode to = dir == Direction::Forward ? CondMode::Observation
                                          : CondMode::Intervention;
  require_in_term(term, z, from,
                  dir == Direction::Forward ? "an action" : "an observation");

  RuleInstance inst;
  inst.rule = Rule::R2;
  inst.dir = dir;
  inst.targets = term.target_vars();
  inst.held = term.condition_vars(CondMode::Intervention) - z;
  inst.moved = z;
  inst.rest = term.condition_vars(CondMode::Observation) - z;
  inst.sep_given = inst.held | inst.rest;
  inst.cut_incoming = inst.held;
  inst.cut_outgoing = z;

  std::vector<TermCond> conds = term.conditions();
  for (TermCond& c : conds)
    if (z.contains(c.var)) c.mode = to;  // value annotation kept verbatim
  return check_and_build(g, std::move(inst),
                         ProbTerm(term.targets(), std::move(conds)));
}

// ---------------------------------------------------------------------------
// Rule 3: insertion/deletion of actions

RuleOutcome rule3(const CausalGraph& g, const ProbTerm& term, const NodeSet& z,
                  Direction dir) {
  require_nonempty(z);

  RuleInstance inst;
  inst.rule = Rule::R3;
  inst.dir = dir;
  inst.targets = term.target_vars();
  inst.rest = term.condition_vars(CondMode::Observation);

  ProbTerm result = term;
  if (dir == Direction::Forward) {
    require_in_term(term, z, CondMode::Intervention, "an action");
    inst.held = term.condition_vars(CondMode::Intervention) - z;
    Split s = split_conditions(term, z);
    result = ProbTerm(term.targets(), std::move(s.kept));
  } else {
    require_fresh(g, term, z);
    inst.held = term.condition_vars(CondMode::Intervention);
    std::vector<TermCond> conds = term.conditions();
    for (VariableId v : z)
      conds.push_back(TermCond{v, CondMode::Intervention, ValueRef::free()});
    result = ProbTerm(term.targets(), std::move(conds));
  }

  inst.moved = z;
  inst.sep_given = inst.held | inst.rest;
  NodeSet z_unblocked = z_not_anc_w(g, inst.held, z, inst.rest);
  inst.cut_incoming = inst.held | z_unblocked;
  inst.cut_outgoing = {};
  return check_and_build(g, std::move(inst), std::move(result));
}

RuleOutcome apply_rule(const CausalGraph& g, Rule rule, const ProbTerm& term,
                       const NodeSet& z, Direction dir) {
  switch (rule) {
    case Rule::R1: return rule1(g, term, z, dir);
    case Rule::R2: return rule2(g, term, z, dir);
    case Rule::R3: return rule3(g, term, z, dir);
  }
  throw ArgumentError("unknown rule");
}

// ---------------------------------------------------------------------------
// Back-door adjustment

namespace {

// Formula sum_s P(y|x,s) P(s) with every adjustment variable bound.
ExprPtr backdoor_formula(VariableId x, VariableId y, const NodeSet& s) {
  const int k = static_cast<int>(s.size());
  if (k == 0)
    return make_term(ProbTerm({TermVar{y, ValueRef::free()}},
                              {TermCond{x, CondMode::Observation,
                                        ValueRef::free()}}));

  // Binder for the i-th set member (canonical order, outermost first) is
  // at de-Bruijn depth k-1-i inside the innermost body.
  std::vector<TermCond> conds{{x, CondMode::Observation, ValueRef::free()}};
  std::vector<TermVar> joint;
  int i = 0;
  for (VariableId v : s) {
    ValueRef ref = ValueRef::bound(k - 1 - i);
    conds.push_back(TermCond{v, CondMode::Observation, ref});
    joint.push_back(TermVar{v, ref});
    ++i;
  }
  ExprPtr body = make_product(
      {make_term(ProbTerm({TermVar{y, ValueRef::free()}}, std::move(conds))),
       make_term(ProbTerm(std::move(joint), {}))});
  std::vector<VariableId> order(s.begin(), s.end());
  for (int j = k - 1; j >= 0; --j) body = make_sum(order[j], body);
  return canonicalize(body);
}

}  // namespace

BackdoorResult backdoor_adjust(const CausalGraph& g, VariableId x,
                               VariableId y) {
  if (!g.observed(x) || !g.observed(y))
    throw ArgumentError("back-door adjustment needs observed endpoints");
  if (x == y) throw ArgumentError("endpoints must differ");

  NodeSet pool = g.observed_nodes() - NodeSet{x, y} - g.descendants({x});
  std::vector<VariableId> candidates(pool.begin(), pool.end());
  CausalGraph cut = g.cut_outgoing({x});

  constexpr std::size_t kCap = std::size_t{1} << 14;
  std::size_t examined = 0;

  // Increasing size; within a size, combinations in canonical order.
  const std::size_t n = candidates.size();
  for (std::size_t size = 0; size <= n; ++size) {
    std::vector<char> mask(n, 0);
    std::fill(mask.begin(), mask.begin() + size, 1);
    do {
      if (++examined > kCap)
        return BackdoorResult{BackdoorResult::Status::CapExceeded, {}, {}};
      std::vector<VariableId> members;
      members.reserve(size);
      for (std::size_t i = 0; i < n; ++i)
        if (mask[i]) members.push_back(candidates[i]);
      NodeSet s(std::move(members));
      if (d_separated(cut, {y}, {x}, s))
        return BackdoorResult{BackdoorResult::Status::Found, s,
                              backdoor_formula(x, y, s)};
    } while (std::prev_permutation(mask.begin(), mask.end()));
  }
  return BackdoorResult{BackdoorResult::Status::NotFound, {}, {}};
}

// ---------------------------------------------------------------------------
// Front-door pattern

std::optional<FrontdoorResult> frontdoor_pattern(const CausalGraph& g,
                                                 VariableId x, VariableId y) {
  if (!g.observed(x) || !g.observed(y))
    throw ArgumentError("front-door search needs observed endpoints");
  if (x == y) throw ArgumentError("endpoints must differ");

  for (VariableId m : g.observed_nodes()) {
    if (m == x || m == y) continue;
    // Exchange do(x) for x in P(m|do(x)).
    if (!d_separated(g.cut_outgoing({x}), {m}, {x}, {})) continue;
    // Exchange do(m) for m in P(y|x',do(m)).
    if (!d_separated(g.cut_outgoing({m}), {y}, {m}, {x})) continue;
    // Add do(m) to P(y|m,do(x)).
    if (!d_separated(g.cut_incoming({x}).cut_outgoing({m}), {y}, {m}, {x}))
      continue;
    // Delete do(x) from P(y|do(m),do(x)).
    if (!d_separated(g.cut_incoming({x, m}), {y}, {x}, {m})) continue;

    // sum_m P(m|x) sum_x' P(y|x',m) P(x')
    ExprPtr inner = make_product(
        {make_term(ProbTerm(
             {TermVar{y, ValueRef::free()}},
             {TermCond{x, CondMode::Observation, ValueRef::bound(0)},
              TermCond{m, CondMode::Observation, ValueRef::bound(1)}})),
         make_term(ProbTerm({TermVar{x, ValueRef::bound(0)}}, {}))});
    ExprPtr outer_body = make_product(
        {make_term(ProbTerm(
             {TermVar{m, ValueRef::bound(0)}},
             {TermCond{x, CondMode::Observation, ValueRef::free()}})),
         make_sum(x, std::move(inner))});
    return FrontdoorResult{m, canonicalize(make_sum(m, std::move(outer_body)))};
  }
  return std::nullopt;
}

}  // namespace docalc
