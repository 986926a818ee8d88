#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "docalc/expr.hpp"
#include "docalc/graph.hpp"

namespace docalc {

enum class Rule : std::uint8_t { R1, R2, R3 };
enum class Direction : std::uint8_t { Forward, Backward };

/// One accepted rule application: the partition of the term's variables,
/// the surgery the side condition was checked in, and the d-separation
/// triple itself. Rechecking the triple against the recorded surgery must
/// succeed; derivations are self-verifying.
struct RuleInstance {
  Rule rule;
  Direction dir;
  NodeSet targets;        // Y
  NodeSet held;           // X, interventions kept fixed
  NodeSet moved;          // Z, the set inserted / deleted / exchanged
  NodeSet rest;           // W, remaining observations
  NodeSet cut_incoming;   // surgery: edges into these removed
  NodeSet cut_outgoing;   // surgery: edges out of these removed
  NodeSet sep_given;      // conditioning set of the checked triple
};

/// Builds the surgered graph a rule instance was checked in.
CausalGraph surgered_graph(const CausalGraph& g, const RuleInstance& inst);
/// Re-runs the recorded d-separation check.
bool recheck(const CausalGraph& g, const RuleInstance& inst);
/// Compact label such as "G - in(x) - out(z)".
std::string surgery_label(const CausalGraph& g, const RuleInstance& inst);

struct RuleApplication {
  RuleInstance instance;
  ProbTerm result;
};
/// Failed side condition, with an active trail as the witness.
struct NotApplicable {
  std::vector<VariableId> witness;
};
using RuleOutcome = std::variant<RuleApplication, NotApplicable>;

inline const RuleApplication* applied(const RuleOutcome& r) {
  return std::get_if<RuleApplication>(&r);
}

/// Rule 1, insertion (Backward) / deletion (Forward) of observations.
/// Condition: (Y ⊥ Z | X, W) in the graph with edges into X removed.
RuleOutcome rule1(const CausalGraph& g, const ProbTerm& term, const NodeSet& z,
                  Direction dir);

/// Rule 2, action/observation exchange. Forward turns do(z) into an
/// observation, Backward the reverse. Condition: (Y ⊥ Z | X, W) in the
/// graph with edges into X and out of Z removed.
RuleOutcome rule2(const CausalGraph& g, const ProbTerm& term, const NodeSet& z,
                  Direction dir);

/// Rule 3, deletion (Forward) / insertion (Backward) of actions.
/// Condition: (Y ⊥ Z | X, W) in the graph with edges into X ∪ Z(W)
/// removed, where Z(W) is the subset of Z not ancestral to W in the
/// X-cut graph.
RuleOutcome rule3(const CausalGraph& g, const ProbTerm& term, const NodeSet& z,
                  Direction dir);

RuleOutcome apply_rule(const CausalGraph& g, Rule rule, const ProbTerm& term,
                       const NodeSet& z, Direction dir);

/// Smallest observed back-door adjustment set for the effect of x on y,
/// plus the adjustment formula sum_s P(y|x,s) P(s). Candidate sets are
/// enumerated by size then canonical order among observed non-descendants
/// of x; after 2^14 candidates the search reports CapExceeded.
struct BackdoorResult {
  enum class Status { Found, NotFound, CapExceeded };
  Status status = Status::NotFound;
  NodeSet adjustment;
  ExprPtr formula;
};
BackdoorResult backdoor_adjust(const CausalGraph& g, VariableId x,
                               VariableId y);

/// Identification through a single observed mediator: when some observed
/// m satisfies the exchange/deletion conditions linking x, m and y, the
/// effect of x on y is sum_m P(m|x) sum_x' P(y|x',m) P(x').
struct FrontdoorResult {
  VariableId mediator;
  ExprPtr formula;
};
std::optional<FrontdoorResult> frontdoor_pattern(const CausalGraph& g,
                                                 VariableId x, VariableId y);

}  // namespace docalc
