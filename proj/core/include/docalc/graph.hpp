#pragma once

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "docalc/errors.hpp"

namespace docalc {

/// Dense index of a variable within one CausalGraph. Ids are only
/// meaningful together with the graph that issued them; graph surgeries
/// (cut_incoming, cut_outgoing, augment) preserve ids of existing nodes.
struct VariableId {
  std::int32_t value = -1;

  bool valid() const { return value >= 0; }
  friend auto operator<=>(const VariableId&, const VariableId&) = default;
};

enum class NodeKind : std::uint8_t {
  Observed,
  Latent,
  /// Intervention-indicator node added by CausalGraph::augment.
  Indicator,
};

/// An immutable set of variables in canonical (ascending id) order.
/// Graphs intern their node names in lexicographic order, so for any
/// graph built from named input the canonical order is also the
/// lexicographic order of the names.
class NodeSet {
public:
  NodeSet() = default;
  explicit NodeSet(std::vector<VariableId> ids);
  NodeSet(std::initializer_list<VariableId> ids);

  static NodeSet single(VariableId v) { return NodeSet({v}); }

  bool empty() const { return ids_.empty(); }
  std::size_t size() const { return ids_.size(); }
  bool contains(VariableId v) const;
  bool subset_of(const NodeSet& other) const;
  bool disjoint(const NodeSet& other) const;

  NodeSet with(VariableId v) const;
  NodeSet without(VariableId v) const;

  const std::vector<VariableId>& ids() const { return ids_; }
  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }

  friend NodeSet operator|(const NodeSet& a, const NodeSet& b);
  friend NodeSet operator-(const NodeSet& a, const NodeSet& b);
  friend NodeSet operator&(const NodeSet& a, const NodeSet& b);
  friend bool operator==(const NodeSet& a, const NodeSet& b) = default;

private:
  std::vector<VariableId> ids_;  // sorted, unique
};

/// Throws ArgumentError unless the given sets are pairwise disjoint.
void require_disjoint(std::initializer_list<const NodeSet*> sets,
                      std::string_view context);

/// A directed acyclic graph over named variables, each observed, latent,
/// or an intervention indicator. Immutable after construction; all
/// operations are pure and safe for concurrent reads.
class CausalGraph {
public:
  /// Builds a graph from (name, kind) pairs and named edges. Node ids are
  /// assigned in lexicographic name order. Rejects duplicate names,
  /// unknown edge endpoints, self-loops, duplicate edges, and cycles.
  CausalGraph(std::vector<std::pair<std::string, NodeKind>> nodes,
              const std::vector<std::pair<std::string, std::string>>& edges);

  std::size_t node_count() const { return names_.size(); }

  /// Id for a name; throws NameError when absent.
  VariableId id_of(std::string_view name) const;
  std::optional<VariableId> find(std::string_view name) const;
  const std::string& name(VariableId v) const;
  NodeKind kind(VariableId v) const;
  bool observed(VariableId v) const { return kind(v) == NodeKind::Observed; }

  bool has_edge(VariableId parent, VariableId child) const;
  std::vector<std::pair<VariableId, VariableId>> edges() const;
  std::size_t edge_count() const;

  NodeSet parents(VariableId v) const;
  NodeSet children(VariableId v) const;

  NodeSet all_nodes() const;
  NodeSet observed_nodes() const;
  NodeSet latent_nodes() const;

  /// Transitive parents of s, excluding s itself.
  NodeSet ancestors(const NodeSet& s) const;
  /// Transitive children of s, excluding s itself.
  NodeSet descendants(const NodeSet& s) const;

  /// Nodes connected to `from` in the undirected skeleton, excluding
  /// `from` itself.
  NodeSet skeleton_reachable(const NodeSet& from) const;

  /// Graph with every edge pointing into a node of x removed.
  CausalGraph cut_incoming(const NodeSet& x) const;
  /// Graph with every edge emerging from a node of x removed.
  CausalGraph cut_outgoing(const NodeSet& x) const;

  struct Augmented {
    CausalGraph graph;
    VariableId indicator;
  };
  /// Adds a fresh intervention-indicator parent "F_<name>" to x. The
  /// indicator keeps a fresh id appended after all existing ids.
  /// Augmenting a latent, or augmenting the same node twice, throws
  /// ArgumentError.
  Augmented augment(VariableId x) const;

  std::vector<VariableId> topological_order() const;

  /// Well-formedness warnings (currently: latent nodes with no children).
  std::vector<std::string> validate() const;

  friend bool operator==(const CausalGraph& a, const CausalGraph& b);

private:
  CausalGraph() = default;
  CausalGraph with_edges(std::vector<std::vector<std::int32_t>> parents) const;
  void check_node(VariableId v) const;
  void rebuild_children();

  std::vector<std::string> names_;
  std::vector<NodeKind> kinds_;
  std::vector<std::vector<std::int32_t>> parents_;   // sorted per node
  std::vector<std::vector<std::int32_t>> children_;  // sorted per node
};

/// True iff z d-separates x from y (every path between x and y is blocked
/// by z). Requires x, y, z pairwise disjoint. Exact, via reachability
/// over active trails.
bool d_separated(const CausalGraph& g, const NodeSet& x, const NodeSet& y,
                 const NodeSet& z);

/// An active (unblocked) trail from a node of x to a node of y given z,
/// as the sequence of visited nodes, or nullopt when x and y are
/// d-separated.
std::optional<std::vector<VariableId>> unblocked_path(const CausalGraph& g,
                                                      const NodeSet& x,
                                                      const NodeSet& y,
                                                      const NodeSet& z);

/// The subset of z whose members are not ancestors of any node of w,
/// computed in cut_incoming(g, x). With w empty this is z itself.
NodeSet z_not_anc_w(const CausalGraph& g, const NodeSet& x, const NodeSet& z,
                    const NodeSet& w);

/// Parses the graph text format: one statement per line, `#` comments.
///   latent U        declares U latent
///   A -> B          edge
///   A <-> B         fresh latent _L{n} with edges to A and B
/// Variables match [A-Za-z_][A-Za-z0-9_]*.
CausalGraph parse_graph_text(std::string_view text);

}  // namespace docalc
