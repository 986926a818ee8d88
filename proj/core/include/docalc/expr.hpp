#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "docalc/graph.hpp"

namespace docalc {

enum class CondMode : std::uint8_t { Observation, Intervention };

/// Where a variable occurrence takes its value at evaluation time:
/// from the caller's binding (Free), from an enclosing summation binder
/// (Bound, de-Bruijn depth with 0 = innermost), or a literal value index
/// (Fixed).
struct ValueRef {
  enum class Kind : std::uint8_t { Free, Bound, Fixed };

  Kind kind = Kind::Free;
  int index = 0;

  static ValueRef free() { return {}; }
  static ValueRef bound(int depth) { return {Kind::Bound, depth}; }
  static ValueRef fixed(int value) { return {Kind::Fixed, value}; }

  friend auto operator<=>(const ValueRef&, const ValueRef&) = default;
};

struct TermVar {
  VariableId var;
  ValueRef value;

  friend auto operator<=>(const TermVar&, const TermVar&) = default;
};

struct TermCond {
  VariableId var;
  CondMode mode = CondMode::Observation;
  ValueRef value;

  friend auto operator<=>(const TermCond&, const TermCond&) = default;
};

/// One probability atom P(targets | conditions). Targets are nonempty,
/// every variable occurs at most once across targets and conditions, and
/// both lists are kept in canonical (ascending id) order.
class ProbTerm {
public:
  ProbTerm(std::vector<TermVar> targets, std::vector<TermCond> conditions);

  const std::vector<TermVar>& targets() const { return targets_; }
  const std::vector<TermCond>& conditions() const { return conditions_; }

  bool mentions(VariableId v) const;
  NodeSet target_vars() const;
  NodeSet condition_vars(CondMode mode) const;
  NodeSet all_vars() const;

  bool hat_free() const;
  /// Largest de-Bruijn depth referenced, or -1 when no bound occurrence.
  int max_bound_depth() const;
  /// Copy with every bound depth >= threshold shifted by delta.
  ProbTerm shift_bound(int delta, int threshold = 0) const;
  /// True when some occurrence references binder depth `depth`.
  bool references_depth(int depth) const;

  /// Same targets and same (variable, mode) conditions, ignoring value
  /// annotations. This is the match used for declared-known terms.
  bool same_shape(const ProbTerm& other) const;

  friend auto operator<=>(const ProbTerm&, const ProbTerm&) = default;

private:
  std::vector<TermVar> targets_;
  std::vector<TermCond> conditions_;
};

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct TermNode {
  ProbTerm term;
};
struct SumNode {
  VariableId domain;  // variable whose value space the binder iterates
  ExprPtr body;
};
struct ProductNode {
  std::vector<ExprPtr> factors;
};
struct QuotientNode {
  ExprPtr num;
  ExprPtr den;
};
struct OneNode {};

/// Immutable expression tree: Term | Sum | Product | Quotient | One.
/// Summation binders are positional (de Bruijn); display names are
/// regenerated at render time, so alpha-equivalent expressions are
/// structurally identical.
class Expr {
public:
  using Node = std::variant<TermNode, SumNode, ProductNode, QuotientNode, OneNode>;

  explicit Expr(Node node) : node_(std::move(node)) {}
  const Node& node() const { return node_; }

  const TermNode* as_term() const { return std::get_if<TermNode>(&node_); }
  const SumNode* as_sum() const { return std::get_if<SumNode>(&node_); }
  const ProductNode* as_product() const {
    return std::get_if<ProductNode>(&node_);
  }
  const QuotientNode* as_quotient() const {
    return std::get_if<QuotientNode>(&node_);
  }
  bool is_one() const { return std::holds_alternative<OneNode>(node_); }

private:
  Node node_;
};

ExprPtr make_term(ProbTerm term);
ExprPtr make_sum(VariableId domain, ExprPtr body);
ExprPtr make_product(std::vector<ExprPtr> factors);
ExprPtr make_quotient(ExprPtr num, ExprPtr den);
ExprPtr expr_one();

/// Total structural order; canonical product/sum ordering derives from it.
std::strong_ordering compare(const Expr& a, const Expr& b);
bool equal(const ExprPtr& a, const ExprPtr& b);
std::size_t hash_value(const Expr& e);

struct ExprPtrHash {
  std::size_t operator()(const ExprPtr& e) const { return hash_value(*e); }
};
struct ExprPtrEq {
  bool operator()(const ExprPtr& a, const ExprPtr& b) const {
    return equal(a, b);
  }
};

/// Idempotent normal form: products flattened, unit factors dropped and
/// factors sorted; directly nested sums ordered by domain; quotients with
/// structurally equal sides collapsed to One. Throws StructureError on
/// dangling or unused binders.
ExprPtr canonicalize(const ExprPtr& e);

/// Validates binder structure (every bound depth resolves to an enclosing
/// sum, every sum is referenced by its body). Throws StructureError.
void validate(const ExprPtr& e);

/// True iff no intervention-mode condition occurs anywhere in e.
bool is_hat_free(const ExprPtr& e);

/// Variables with at least one Free occurrence anywhere in e.
NodeSet free_variables(const ExprPtr& e);

/// Law of total probability over v: P(t|c) becomes
/// sum_v P(t|v,c) P(v|c), both factors inheriting the original
/// intervention annotations. v must be observed and not mentioned in the
/// term.
ExprPtr expand_by_conditioning(const CausalGraph& g, const ProbTerm& term,
                               VariableId v);

/// Chain rule split of one target into the condition side of the rest:
/// P(y,z|c) becomes P(y|z,c) P(z|c). The default splits the last target
/// in canonical order.
ExprPtr factor_joint(const ProbTerm& term);
ExprPtr factor_joint(const ProbTerm& term, VariableId split);

/// Renders an expression using the query grammar: `P(t|c,do(d))` terms,
/// `Σ_v` sums whose body extends to the end of the enclosing factor list,
/// juxtaposition for products and `/` for quotients. Binder display names
/// take primes when they would clash with a free variable or an enclosing
/// binder.
std::string render(const CausalGraph& g, const ExprPtr& e);

}  // namespace docalc
