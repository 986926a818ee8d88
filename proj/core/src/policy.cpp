#include "docalc/policy.hpp"

#include <cmath>

namespace docalc {

namespace {

void check_action_and_inputs(const DiscreteBN& bn, VariableId action,
                             const NodeSet& inputs) {
  const CausalGraph& g = bn.graph();
  if (!g.observed(action))
    throw ArgumentError("policy action must be observed: " + g.name(action));
  for (VariableId v : inputs)
    if (!g.observed(v))
      throw ArgumentError("policy inputs must be observed: " + g.name(v));
  if (inputs.contains(action))
    throw ArgumentError("policy inputs must not include the action");
  NodeSet bad = inputs & g.descendants({action});
  if (!bad.empty())
    throw ArgumentError("policy input " + g.name(*bad.begin()) +
                        " is a descendant of the action " + g.name(action));
}

}  // namespace

void check_policy(const DiscreteBN& bn, const DeterministicPolicy& pol) {
  check_action_and_inputs(bn, pol.action, pol.inputs);
  std::size_t rows = config_count(bn, pol.inputs);
  if (pol.response.size() != rows)
    throw ArgumentError("policy response map must cover every input "
                        "configuration");
  for (int v : pol.response)
    if (v < 0 || v >= bn.card(pol.action))
      throw ArgumentError("policy response value out of range");
}

void check_policy(const DiscreteBN& bn, const StochasticPolicy& pol) {
  check_action_and_inputs(bn, pol.action, pol.inputs);
  std::size_t rows = config_count(bn, pol.inputs);
  std::size_t cx = static_cast<std::size_t>(bn.card(pol.action));
  if (pol.table.size() != rows * cx)
    throw ArgumentError("policy table has the wrong shape");
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0;
    for (std::size_t k = 0; k < cx; ++k) {
      double e = pol.table[r * cx + k];
      if (e < 0.0 || e > 1.0 + 1e-12)
        throw ArgumentError("policy row entry outside [0,1]");
      s += e;
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw ArgumentError("policy row does not sum to 1");
  }
}

StochasticPolicy to_stochastic(const DiscreteBN& bn,
                               const DeterministicPolicy& pol) {
  check_policy(bn, pol);
  std::size_t cx = static_cast<std::size_t>(bn.card(pol.action));
  StochasticPolicy out{pol.action, pol.inputs, {}};
  out.table.assign(pol.response.size() * cx, 0.0);
  for (std::size_t r = 0; r < pol.response.size(); ++r)
    out.table[r * cx + static_cast<std::size_t>(pol.response[r])] = 1.0;
  return out;
}

double eval_det_policy(const DiscreteBN& bn, const DeterministicPolicy& pol,
                       const Assignment& y) {
  check_policy(bn, pol);
  double total = 0;
  for_each_assignment(bn, pol.inputs, [&](const Assignment& z) {
    double pz = bn.prob(z, {}, {});
    if (pz == 0.0) return;
    int x = pol.response[config_rank(bn, pol.inputs, z)];
    Assignment dos;
    dos.set(pol.action, x);
    total += bn.prob(y, z, dos) * pz;
  });
  return total;
}

double eval_stoch_policy(const DiscreteBN& bn, const StochasticPolicy& pol,
                         const Assignment& y) {
  check_policy(bn, pol);
  std::size_t cx = static_cast<std::size_t>(bn.card(pol.action));
  double total = 0;
  for_each_assignment(bn, pol.inputs, [&](const Assignment& z) {
    double pz = bn.prob(z, {}, {});
    if (pz == 0.0) return;
    std::size_t row = config_rank(bn, pol.inputs, z);
    for (std::size_t x = 0; x < cx; ++x) {
      double px = pol.table[row * cx + x];
      if (px == 0.0) continue;
      Assignment dos;
      dos.set(pol.action, static_cast<int>(x));
      total += bn.prob(y, z, dos) * px * pz;
    }
  });
  return total;
}

StochasticPolicy strips_policy(
    const DiscreteBN& bn, VariableId x, int x_val, const NodeSet& w,
    const std::function<bool(const Assignment&)>& precondition) {
  const CausalGraph& g = bn.graph();
  if (!g.observed(x))
    throw ArgumentError("action must be observed: " + g.name(x));
  if (x_val < 0 || x_val >= bn.card(x))
    throw ArgumentError("action value out of range");
  NodeSet pa = g.parents(x);
  for (VariableId p : pa)
    if (!g.observed(p))
      throw ArgumentError(
          "precondition-gated action needs observed parents, " + g.name(p) +
          " is not observed");
  NodeSet inputs = w | pa;

  StochasticPolicy pol{x, inputs, {}};
  check_action_and_inputs(bn, x, inputs);
  std::size_t cx = static_cast<std::size_t>(bn.card(x));
  pol.table.assign(config_count(bn, inputs) * cx, 0.0);

  const std::vector<double>& original = bn.table(x);
  for_each_assignment(bn, inputs, [&](const Assignment& z) {
    std::size_t row = config_rank(bn, inputs, z);
    Assignment wpart;
    for (VariableId v : w) wpart.set(v, *z.get(v));
    if (precondition(wpart)) {
      pol.table[row * cx + static_cast<std::size_t>(x_val)] = 1.0;
    } else {
      // Original mechanism row for the parent part of this configuration.
      std::size_t parent_row = 0;
      for (VariableId p : pa)
        parent_row = parent_row * static_cast<std::size_t>(bn.card(p)) +
                     static_cast<std::size_t>(*z.get(p));
      for (std::size_t k = 0; k < cx; ++k)
        pol.table[row * cx + k] = original[parent_row * cx + k];
    }
  });
  return pol;
}

DiscreteBN apply_policy(const DiscreteBN& bn, const StochasticPolicy& pol) {
  check_policy(bn, pol);
  const CausalGraph& g = bn.graph();

  std::vector<std::pair<std::string, NodeKind>> nodes;
  for (VariableId v : g.all_nodes()) nodes.push_back({g.name(v), g.kind(v)});
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& [p, c] : g.edges()) {
    if (c == pol.action) continue;  // old mechanism removed
    edges.push_back({g.name(p), g.name(c)});
  }
  for (VariableId z : pol.inputs)
    edges.push_back({g.name(z), g.name(pol.action)});
  CausalGraph g2(std::move(nodes), edges);

  // Node ids are preserved: the node name set is unchanged.
  std::vector<std::vector<double>> tables;
  for (VariableId v : g.all_nodes())
    tables.push_back(v == pol.action ? pol.table : bn.table(v));
  return DiscreteBN(std::move(g2), bn.cards(), std::move(tables));
}

DiscreteBN apply_policy(const DiscreteBN& bn, const DeterministicPolicy& pol) {
  return apply_policy(bn, to_stochastic(bn, pol));
}

IdentifyOutcome identify_policy(const CausalGraph& g, VariableId x,
                                const NodeSet& z, const NodeSet& y,
                                const SearchConfig& config) {
  if (y.empty()) throw ArgumentError("policy outcome set must be nonempty");
  std::vector<TermVar> targets;
  for (VariableId v : y) targets.push_back(TermVar{v, ValueRef::free()});
  std::vector<TermCond> conds{
      TermCond{x, CondMode::Intervention, ValueRef::free()}};
  for (VariableId v : z)
    conds.push_back(TermCond{v, CondMode::Observation, ValueRef::free()});
  return identify(g, make_term(ProbTerm(std::move(targets), std::move(conds))),
                  config);
}

double eval_policy_symbolic(const DiscreteBN& bn, const StochasticPolicy& pol,
                            const Assignment& y, const ExprPtr& formula) {
  check_policy(bn, pol);
  std::size_t cx = static_cast<std::size_t>(bn.card(pol.action));
  double total = 0;
  for_each_assignment(bn, pol.inputs, [&](const Assignment& z) {
    double pz = bn.prob(z, {}, {});
    if (pz == 0.0) return;
    std::size_t row = config_rank(bn, pol.inputs, z);
    for (std::size_t x = 0; x < cx; ++x) {
      double px = pol.table[row * cx + x];
      if (px == 0.0) continue;
      Assignment binding = y.merged_disjoint(z);
      binding.set(pol.action, static_cast<int>(x));
      total += bn.eval(formula, binding) * px * pz;
    }
  });
  return total;
}

}  // namespace docalc
