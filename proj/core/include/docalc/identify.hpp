#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "docalc/expr.hpp"
#include "docalc/graph.hpp"
#include "docalc/rules.hpp"

namespace docalc {

/// Move classes in the order the search tries them at each state.
enum class MoveClass : std::uint8_t {
  Rule3Delete,
  Rule2Exchange,
  Rule1Delete,
  FactorJoint,
  ExpandSum,
  Rule1Insert,
  Rule3Insert,
};

std::vector<MoveClass> default_move_order();
std::string move_class_name(MoveClass m);
std::optional<MoveClass> move_class_from_name(std::string_view name);

struct SearchConfig {
  int max_depth = 16;
  std::size_t max_states = 200'000;
  std::vector<MoveClass> move_order = default_move_order();
  /// 0 silent, 1 per-query stats, 2 per-expanded-state lines.
  int trace = 0;
  std::ostream* trace_out = nullptr;
  /// Test hook: disable duplicate-state pruning. Results must not change.
  bool memoize = true;
};

/// Step kinds recorded in a derivation. SubstituteKnown appears in the
/// serialized vocabulary for completeness; matching a declared-known term
/// is a terminal condition rather than an explicit rewrite, so searches
/// do not emit it.
enum class MoveKind : std::uint8_t {
  R1,
  R2,
  R3,
  ExpandSum,
  FactorJoint,
  SubstituteKnown,
};

std::string move_kind_name(MoveKind k);
std::optional<MoveKind> move_kind_from_name(std::string_view name);

struct Step {
  MoveKind kind;
  std::vector<int> path;  // child indices from the root to the term
  std::optional<RuleInstance> rule;   // R1/R2/R3
  std::optional<VariableId> variable; // ExpandSum / FactorJoint parameter
  ExprPtr result;                     // canonical state after the move
};

/// Replayable trace of rule applications: applying each step to the
/// previous canonical state reproduces the recorded result exactly, and
/// every rule step's d-separation condition rechecks against the graph.
struct Derivation {
  CausalGraph graph;
  ExprPtr initial;
  std::vector<Step> steps;
  ExprPtr final_expr;
};

struct Identified {
  Derivation derivation;
};
struct NonIdentified {
  int depth = 0;
  std::size_t frontier = 0;  // states sitting at the depth bound
};
struct Aborted {
  std::size_t states_seen = 0;
};
using IdentifyOutcome = std::variant<Identified, NonIdentified, Aborted>;

inline const Identified* identified(const IdentifyOutcome& o) {
  return std::get_if<Identified>(&o);
}

/// Searches for a hat-free rewriting of the query via rule applications,
/// conditioning expansions and chain-rule splits, shortest derivation
/// first with a fixed deterministic tie-break. A NonIdentified outcome
/// means "not identified within the depth bound", never a proof of
/// non-identifiability.
IdentifyOutcome identify(const CausalGraph& g, const ExprPtr& query,
                         const SearchConfig& config = {});

/// Same search, but terms matching one of `known` (same targets and same
/// (variable, mode) conditions) count as terminal alongside hat-free
/// terms; the result is an expression over hat-free and known terms only.
IdentifyOutcome identify_from_causal_inputs(const CausalGraph& g,
                                            const ExprPtr& query,
                                            const std::vector<ProbTerm>& known,
                                            const SearchConfig& config = {});

/// Re-applies the recorded steps from the initial expression, verifying
/// each rule condition and each intermediate result. Throws
/// StructureError on any mismatch; returns the final expression.
ExprPtr replay(const Derivation& d);

/// Human-readable trace, one line per step.
std::string explain(const Derivation& d);

}  // namespace docalc
