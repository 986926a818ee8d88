#pragma once

#include <functional>
#include <vector>

#include "docalc/bn.hpp"
#include "docalc/identify.hpp"

namespace docalc {

/// Conditional action X = g(Z): the action variable responds to the
/// configuration of an observed input set that contains no descendant
/// of the action.
struct DeterministicPolicy {
  VariableId action;
  NodeSet inputs;
  /// Chosen value of the action per input configuration, indexed by
  /// config_rank over `inputs`.
  std::vector<int> response;
};

/// Stochastic policy P*(x|z): a normalized row per input configuration.
struct StochasticPolicy {
  VariableId action;
  NodeSet inputs;
  /// Row-major: config_rank(inputs) rows, card(action) entries each.
  std::vector<double> table;
};

StochasticPolicy to_stochastic(const DiscreteBN& bn,
                               const DeterministicPolicy& pol);

/// Validates the policy against the network: observed action and inputs,
/// inputs disjoint from descendants of the action, correctly sized and
/// normalized tables. Throws ArgumentError.
void check_policy(const DiscreteBN& bn, const StochasticPolicy& pol);
void check_policy(const DiscreteBN& bn, const DeterministicPolicy& pol);

/// P(y) under the policy, computed by the averaging formula
/// sum_z P(y | do(X=g(z)), z) P(z). Zero-probability input
/// configurations contribute nothing.
double eval_det_policy(const DiscreteBN& bn, const DeterministicPolicy& pol,
                       const Assignment& y);

/// sum_x sum_z P(y | do(x), z) P*(x|z) P(z).
double eval_stoch_policy(const DiscreteBN& bn, const StochasticPolicy& pol,
                         const Assignment& y);

/// Precondition-gated action: with Z = W ∪ parents(X), the policy keeps
/// X's original mechanism where the precondition over W is false and
/// forces X = x_val where it is true.
StochasticPolicy strips_policy(
    const DiscreteBN& bn, VariableId x, int x_val, const NodeSet& w,
    const std::function<bool(const Assignment&)>& precondition);

/// Mechanism replacement: a new network in which X's parents become the
/// policy inputs and its table becomes the policy table. This is the
/// ground-truth semantics the averaging formulas are verified against.
DiscreteBN apply_policy(const DiscreteBN& bn, const StochasticPolicy& pol);
DiscreteBN apply_policy(const DiscreteBN& bn, const DeterministicPolicy& pol);

/// Symbolic identifiability of the policy effect: delegates to identify
/// on P(y | do(x), z). An Identified outcome licenses evaluating the
/// policy by substituting into the returned hat-free formula.
IdentifyOutcome identify_policy(const CausalGraph& g, VariableId x,
                                const NodeSet& z, const NodeSet& y,
                                const SearchConfig& config = {});

/// Policy value through an identified hat-free formula for
/// P(y | do(x), z): sums formula(y; x, z) P*(x|z) P(z) over x and z.
double eval_policy_symbolic(const DiscreteBN& bn, const StochasticPolicy& pol,
                            const Assignment& y, const ExprPtr& formula);

}  // namespace docalc
