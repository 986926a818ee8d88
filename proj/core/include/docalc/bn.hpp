#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "docalc/expr.hpp"
#include "docalc/graph.hpp"

namespace docalc {

/// A partial map from variables to value indices, kept sorted by id.
class Assignment {
public:
  Assignment() = default;
  Assignment(std::initializer_list<std::pair<VariableId, int>> pairs);

  void set(VariableId v, int value);
  std::optional<int> get(VariableId v) const;
  bool contains(VariableId v) const;
  bool empty() const { return pairs_.empty(); }
  std::size_t size() const { return pairs_.size(); }

  NodeSet vars() const;
  /// Union of two assignments; ArgumentError when they disagree or overlap.
  Assignment merged_disjoint(const Assignment& other) const;

  const std::vector<std::pair<VariableId, int>>& pairs() const {
    return pairs_;
  }
  auto begin() const { return pairs_.begin(); }
  auto end() const { return pairs_.end(); }

  friend bool operator==(const Assignment&, const Assignment&) = default;

private:
  std::vector<std::pair<VariableId, int>> pairs_;
};

/// Dense table over the full (observed + latent) value space.
struct JointTable {
  std::vector<int> cards;     // per node id
  std::vector<double> cells;  // mixed radix, last node least significant

  std::size_t index_of(const std::vector<int>& values) const;
  double sum() const;
  /// Marginal probability of a partial assignment.
  double marginal(const Assignment& a) const;
  /// Conditioned table over the same space; UndefinedConditional when the
  /// event has probability zero.
  JointTable conditioned(const Assignment& a) const;

  static constexpr std::size_t kMaxCells = std::size_t{1} << 24;
};

/// A causal graph with per-variable cardinalities and conditional
/// probability tables: the exact numerical semantics every symbolic
/// result is verified against. Immutable; all member functions are pure.
class DiscreteBN {
public:
  /// `tables[v]` is row-major: one row per configuration of v's parents in
  /// canonical order (first parent most significant), each row card(v)
  /// wide. Rows must sum to 1 within 1e-9; they are renormalized exactly.
  DiscreteBN(CausalGraph graph, std::vector<int> cards,
             std::vector<std::vector<double>> tables);

  const CausalGraph& graph() const { return graph_; }
  int card(VariableId v) const;
  const std::vector<int>& cards() const { return cards_; }
  const std::vector<double>& table(VariableId v) const;

  double cpt_entry(VariableId v, const std::vector<int>& full_values) const;

  /// Full joint per the recursive factorization; ResourceError when the
  /// state space exceeds 2^24 cells.
  JointTable joint() const;

  /// Mechanism replacement: for each assigned variable the incoming edges
  /// are removed and its table becomes a point mass. Intervening on a
  /// latent throws ArgumentError.
  DiscreteBN intervene(const Assignment& a) const;

  struct AugmentedBn {
    DiscreteBN bn;
    VariableId indicator;  // domain {idle=0, do(v)=v+1}
  };
  /// Adds the intervention-indicator parent F_x with the given prior
  /// probability of idle; x's table branches on F_x.
  AugmentedBn augmented(VariableId x, double prior_idle) const;

  /// P(targets | obs, do(dos)): intervene, condition, marginalize.
  /// Throws UndefinedConditional when the conditioning event has
  /// probability zero.
  double prob(const Assignment& targets, const Assignment& obs,
              const Assignment& dos) const;

  /// Numeric value of an expression: sums iterate the bound variable's
  /// domain, terms evaluate via prob() with intervention conditions as
  /// dos. Free variables must be covered by `binding`.
  double eval(const ExprPtr& e, const Assignment& binding) const;

private:
  double mass(const Assignment& event, const Assignment& dos) const;

  CausalGraph graph_;
  std::vector<int> cards_;
  std::vector<std::vector<double>> tables_;
  std::vector<std::vector<std::int32_t>> parent_ids_;  // canonical order
};

/// CPT rows drawn uniformly from the probability simplex (symmetric
/// Dirichlet with concentration 1), reproducibly by seed.
DiscreteBN random_bn(const CausalGraph& g, const std::vector<int>& cards,
                     std::uint64_t seed);
DiscreteBN random_binary_bn(const CausalGraph& g, std::uint64_t seed);

/// Calls fn once per configuration of `vars` (canonical order,
/// lexicographic, first variable most significant).
void for_each_assignment(const DiscreteBN& bn, const NodeSet& vars,
                         const std::function<void(const Assignment&)>& fn);

/// Rank of an assignment among the configurations of `vars`, matching the
/// for_each_assignment order.
std::size_t config_rank(const DiscreteBN& bn, const NodeSet& vars,
                        const Assignment& a);
std::size_t config_count(const DiscreteBN& bn, const NodeSet& vars);

}  // namespace docalc
