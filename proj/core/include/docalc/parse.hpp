#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "docalc/expr.hpp"
#include "docalc/graph.hpp"

namespace docalc {

/// A parsed expression whose variables are still names; resolve them
/// against a graph with bind(). Parsing never needs a graph, so unknown
/// variables surface only at bind time.
class ParsedExpr {
public:
  struct Node;
  explicit ParsedExpr(std::shared_ptr<const Node> root)
      : root_(std::move(root)) {}

  /// Resolves names: an occurrence matching an enclosing binder display
  /// name binds to it; anything else must be an observed graph variable.
  /// A binder's domain is its display name with trailing primes stripped.
  ExprPtr bind(const CausalGraph& g) const;

private:
  std::shared_ptr<const Node> root_;
};

/// Parses the query grammar:
///   expr     := product ('/' product)*
///   product  := factor+        (a sum factor absorbs the rest)
///   factor   := term | sum | '1' | '(' expr ')'
///   sum      := ('Σ' | 'sum') '_' var | 'Σ_{' var '}'   followed by product
///   term     := 'P(' targets ('|' cond (',' cond)*)? ')'
///   targets  := var (',' var)*
///   cond     := var | 'do(' var ')'
/// Variables are [A-Za-z_][A-Za-z0-9_]* with optional trailing primes;
/// whitespace is insignificant. Throws ParseError with a byte offset.
ParsedExpr parse_query(std::string_view text);

/// Convenience: parse then bind then canonicalize.
ExprPtr parse_and_bind(std::string_view text, const CausalGraph& g);

/// A user query whose expression is a single probability term.
struct Query {
  ProbTerm term;
};

/// Parses a query string that must be a single P(...) term.
Query parse_query_term(std::string_view text, const CausalGraph& g);

}  // namespace docalc
