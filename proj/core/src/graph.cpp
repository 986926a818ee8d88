#include "docalc/graph.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <map>
#include <set>
#include <sstream>

namespace docalc {

// ---------------------------------------------------------------------------
// NodeSet

NodeSet::NodeSet(std::vector<VariableId> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

NodeSet::NodeSet(std::initializer_list<VariableId> ids)
    : NodeSet(std::vector<VariableId>(ids)) {}

bool NodeSet::contains(VariableId v) const {
  return std::binary_search(ids_.begin(), ids_.end(), v);
}

bool NodeSet::subset_of(const NodeSet& other) const {
  return std::includes(other.ids_.begin(), other.ids_.end(), ids_.begin(),
                       ids_.end());
}

bool NodeSet::disjoint(const NodeSet& other) const {
  auto a = ids_.begin();
  auto b = other.ids_.begin();
  while (a != ids_.end() && b != other.ids_.end()) {
    if (*a == *b) return false;
    if (*a < *b)
      ++a;
    else
      ++b;
  }
  return true;
}

NodeSet NodeSet::with(VariableId v) const {
  std::vector<VariableId> out = ids_;
  out.push_back(v);
  return NodeSet(std::move(out));
}

NodeSet NodeSet::without(VariableId v) const {
  std::vector<VariableId> out;
  out.reserve(ids_.size());
  for (VariableId id : ids_)
    if (id != v) out.push_back(id);
  return NodeSet(std::move(out));
}

NodeSet operator|(const NodeSet& a, const NodeSet& b) {
  std::vector<VariableId> out;
  out.reserve(a.ids_.size() + b.ids_.size());
  std::set_union(a.ids_.begin(), a.ids_.end(), b.ids_.begin(), b.ids_.end(),
                 std::back_inserter(out));
  NodeSet r;
  r.ids_ = std::move(out);
  return r;
}

NodeSet operator-(const NodeSet& a, const NodeSet& b) {
  std::vector<VariableId> out;
  std::set_difference(a.ids_.begin(), a.ids_.end(), b.ids_.begin(),
                      b.ids_.end(), std::back_inserter(out));
  NodeSet r;
  r.ids_ = std::move(out);
  return r;
}

NodeSet operator&(const NodeSet& a, const NodeSet& b) {
  std::vector<VariableId> out;
  std::set_intersection(a.ids_.begin(), a.ids_.end(), b.ids_.begin(),
                        b.ids_.end(), std::back_inserter(out));
  NodeSet r;
  r.ids_ = std::move(out);
  return r;
}

void require_disjoint(std::initializer_list<const NodeSet*> sets,
                      std::string_view context) {
  std::vector<const NodeSet*> v(sets);
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j)
      if (!v[i]->disjoint(*v[j]))
        throw ArgumentError(std::string(context) +
                            ": argument sets must be pairwise disjoint");
}

// ---------------------------------------------------------------------------
// CausalGraph

CausalGraph::CausalGraph(
    std::vector<std::pair<std::string, NodeKind>> nodes,
    const std::vector<std::pair<std::string, std::string>>& edges) {
  std::sort(nodes.begin(), nodes.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    if (nodes[i].first == nodes[i + 1].first)
      throw ArgumentError("duplicate variable name: " + nodes[i].first);

  names_.reserve(nodes.size());
  kinds_.reserve(nodes.size());
  for (auto& [name, kind] : nodes) {
    if (name.empty()) throw ArgumentError("empty variable name");
    names_.push_back(std::move(name));
    kinds_.push_back(kind);
  }
  parents_.assign(names_.size(), {});

  std::set<std::pair<std::int32_t, std::int32_t>> seen;
  for (const auto& [from, to] : edges) {
    VariableId p = id_of(from);
    VariableId c = id_of(to);
    if (p == c) throw ArgumentError("self-loop on " + from);
    if (!seen.insert({p.value, c.value}).second)
      throw ArgumentError("duplicate edge " + from + " -> " + to);
    parents_[c.value].push_back(p.value);
  }
  for (auto& ps : parents_) std::sort(ps.begin(), ps.end());
  rebuild_children();

  topological_order();  // throws on cycles
}

CausalGraph CausalGraph::with_edges(
    std::vector<std::vector<std::int32_t>> parents) const {
  CausalGraph g;
  g.names_ = names_;
  g.kinds_ = kinds_;
  g.parents_ = std::move(parents);
  g.rebuild_children();
  return g;
}

void CausalGraph::rebuild_children() {
  children_.assign(names_.size(), {});
  for (std::size_t c = 0; c < parents_.size(); ++c)
    for (std::int32_t p : parents_[c])
      children_[p].push_back(static_cast<std::int32_t>(c));
  for (auto& cs : children_) std::sort(cs.begin(), cs.end());
}

void CausalGraph::check_node(VariableId v) const {
  if (!v.valid() || static_cast<std::size_t>(v.value) >= names_.size())
    throw NameError("variable id out of range");
}

VariableId CausalGraph::id_of(std::string_view name) const {
  if (auto v = find(name)) return *v;
  throw NameError("unknown variable: " + std::string(name));
}

std::optional<VariableId> CausalGraph::find(std::string_view name) const {
  auto it = std::lower_bound(names_.begin(), names_.end(), name);
  if (it != names_.end() && *it == name)
    return VariableId{static_cast<std::int32_t>(it - names_.begin())};
  // Indicator nodes appended by augment() break the sorted-name order, so
  // fall back to a linear scan over the tail.
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return VariableId{static_cast<std::int32_t>(i)};
  return std::nullopt;
}

const std::string& CausalGraph::name(VariableId v) const {
  check_node(v);
  return names_[v.value];
}

NodeKind CausalGraph::kind(VariableId v) const {
  check_node(v);
  return kinds_[v.value];
}

bool CausalGraph::has_edge(VariableId parent, VariableId child) const {
  check_node(parent);
  check_node(child);
  const auto& ps = parents_[child.value];
  return std::binary_search(ps.begin(), ps.end(), parent.value);
}

std::vector<std::pair<VariableId, VariableId>> CausalGraph::edges() const {
  std::vector<std::pair<VariableId, VariableId>> out;
  for (std::size_t c = 0; c < parents_.size(); ++c)
    for (std::int32_t p : parents_[c])
      out.push_back({VariableId{p}, VariableId{static_cast<std::int32_t>(c)}});
  return out;
}

std::size_t CausalGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& ps : parents_) n += ps.size();
  return n;
}

NodeSet CausalGraph::parents(VariableId v) const {
  check_node(v);
  std::vector<VariableId> out;
  out.reserve(parents_[v.value].size());
  for (std::int32_t p : parents_[v.value]) out.push_back(VariableId{p});
  return NodeSet(std::move(out));
}

NodeSet CausalGraph::children(VariableId v) const {
  check_node(v);
  std::vector<VariableId> out;
  out.reserve(children_[v.value].size());
  for (std::int32_t c : children_[v.value]) out.push_back(VariableId{c});
  return NodeSet(std::move(out));
}

NodeSet CausalGraph::all_nodes() const {
  std::vector<VariableId> out;
  for (std::size_t i = 0; i < names_.size(); ++i)
    out.push_back(VariableId{static_cast<std::int32_t>(i)});
  return NodeSet(std::move(out));
}

NodeSet CausalGraph::observed_nodes() const {
  std::vector<VariableId> out;
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (kinds_[i] == NodeKind::Observed)
      out.push_back(VariableId{static_cast<std::int32_t>(i)});
  return NodeSet(std::move(out));
}

NodeSet CausalGraph::latent_nodes() const {
  std::vector<VariableId> out;
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (kinds_[i] == NodeKind::Latent)
      out.push_back(VariableId{static_cast<std::int32_t>(i)});
  return NodeSet(std::move(out));
}

namespace {

NodeSet closure(const NodeSet& seeds,
                const std::vector<std::vector<std::int32_t>>& step,
                std::size_t n) {
  std::vector<char> seen(n, 0);
  std::deque<std::int32_t> queue;
  for (VariableId v : seeds) {
    if (!v.valid() || static_cast<std::size_t>(v.value) >= n)
      throw NameError("variable id out of range");
    queue.push_back(v.value);
  }
  std::vector<VariableId> out;
  while (!queue.empty()) {
    std::int32_t v = queue.front();
    queue.pop_front();
    for (std::int32_t next : step[v]) {
      if (!seen[next]) {
        seen[next] = 1;
        out.push_back(VariableId{next});
        queue.push_back(next);
      }
    }
  }
  return NodeSet(std::move(out)) - seeds;
}

}  // namespace

NodeSet CausalGraph::ancestors(const NodeSet& s) const {
  return closure(s, parents_, names_.size());
}

NodeSet CausalGraph::descendants(const NodeSet& s) const {
  return closure(s, children_, names_.size());
}

NodeSet CausalGraph::skeleton_reachable(const NodeSet& from) const {
  std::vector<std::vector<std::int32_t>> both = parents_;
  for (std::size_t i = 0; i < both.size(); ++i) {
    both[i].insert(both[i].end(), children_[i].begin(), children_[i].end());
    std::sort(both[i].begin(), both[i].end());
  }
  return closure(from, both, names_.size());
}

CausalGraph CausalGraph::cut_incoming(const NodeSet& x) const {
  for (VariableId v : x) check_node(v);
  std::vector<std::vector<std::int32_t>> ps = parents_;
  for (VariableId v : x) ps[v.value].clear();
  return with_edges(std::move(ps));
}

CausalGraph CausalGraph::cut_outgoing(const NodeSet& x) const {
  for (VariableId v : x) check_node(v);
  std::vector<std::vector<std::int32_t>> ps = parents_;
  for (auto& list : ps) {
    std::erase_if(list, [&](std::int32_t p) {
      return x.contains(VariableId{p});
    });
  }
  return with_edges(std::move(ps));
}

CausalGraph::Augmented CausalGraph::augment(VariableId x) const {
  check_node(x);
  if (kinds_[x.value] != NodeKind::Observed)
    throw ArgumentError("can only augment observed variables, " +
                        names_[x.value] + " is not observed");
  std::string fname = "F_" + names_[x.value];
  if (find(fname))
    throw ArgumentError("node " + names_[x.value] + " is already augmented");

  CausalGraph g;
  g.names_ = names_;
  g.kinds_ = kinds_;
  g.parents_ = parents_;
  g.names_.push_back(std::move(fname));
  g.kinds_.push_back(NodeKind::Indicator);
  std::int32_t f = static_cast<std::int32_t>(g.names_.size() - 1);
  g.parents_.emplace_back();
  g.parents_[x.value].push_back(f);
  std::sort(g.parents_[x.value].begin(), g.parents_[x.value].end());
  g.rebuild_children();
  return Augmented{std::move(g), VariableId{f}};
}

std::vector<VariableId> CausalGraph::topological_order() const {
  std::size_t n = names_.size();
  std::vector<std::size_t> indegree(n, 0);
  for (std::size_t i = 0; i < n; ++i) indegree[i] = parents_[i].size();
  std::deque<std::int32_t> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push_back(static_cast<std::int32_t>(i));
  std::vector<VariableId> order;
  order.reserve(n);
  while (!ready.empty()) {
    std::int32_t v = ready.front();
    ready.pop_front();
    order.push_back(VariableId{v});
    for (std::int32_t c : children_[v])
      if (--indegree[c] == 0) ready.push_back(c);
  }
  if (order.size() != n) throw ArgumentError("graph contains a cycle");
  return order;
}

std::vector<std::string> CausalGraph::validate() const {
  std::vector<std::string> issues;
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (kinds_[i] == NodeKind::Latent && children_[i].empty())
      issues.push_back("latent variable " + names_[i] + " has no children");
  return issues;
}

bool operator==(const CausalGraph& a, const CausalGraph& b) {
  return a.names_ == b.names_ && a.kinds_ == b.kinds_ &&
         a.parents_ == b.parents_;
}

// ---------------------------------------------------------------------------
// d-separation via reachability over active trails.
//
// A trail step through node v with incoming edge direction `via` is active
// iff v is a non-collider outside z, or a collider in z-or-ancestor-of-z.
// States are (node, via) pairs where via records whether the edge used to
// reach the node points into it.

namespace {

struct TrailSearch {
  const CausalGraph& g;
  const NodeSet& z;
  NodeSet collider_enablers;  // z and its ancestors

  // state encoding: node * 2 + (via_incoming ? 0 : 1)
  std::vector<std::int32_t> pred;
  std::vector<char> seen;

  explicit TrailSearch(const CausalGraph& graph, const NodeSet& zset)
      : g(graph), z(zset), collider_enablers(zset | graph.ancestors(zset)) {
    seen.assign(g.node_count() * 2, 0);
    pred.assign(g.node_count() * 2, -1);
  }

  std::optional<std::vector<VariableId>> run(const NodeSet& x,
                                             const NodeSet& y) {
    std::deque<std::int32_t> queue;
    auto push = [&](VariableId node, bool via_incoming, std::int32_t from) {
      std::int32_t s = node.value * 2 + (via_incoming ? 0 : 1);
      if (seen[s]) return;
      seen[s] = 1;
      pred[s] = from;
      queue.push_back(s);
    };

    for (VariableId src : x) {
      // Leaving the source is unconstrained; encode the source as pred -2-id.
      for (VariableId c : g.children(src))
        push(c, true, -2 - src.value);
      for (VariableId p : g.parents(src))
        push(p, false, -2 - src.value);
    }

    while (!queue.empty()) {
      std::int32_t s = queue.front();
      queue.pop_front();
      VariableId v{s / 2};
      bool via_incoming = (s % 2) == 0;
      if (y.contains(v)) return reconstruct(s);

      bool pass_through = !z.contains(v);  // chain or fork at v
      bool collider_ok = collider_enablers.contains(v);
      // Continue along an outgoing edge v -> w: v acts as chain/fork.
      if (pass_through)
        for (VariableId w : g.children(v)) push(w, true, s);
      // Continue against an incoming edge w -> v: collider if we arrived
      // along an incoming edge, chain otherwise.
      if (via_incoming ? collider_ok : pass_through)
        for (VariableId w : g.parents(v)) push(w, false, s);
    }
    return std::nullopt;
  }

  std::vector<VariableId> reconstruct(std::int32_t last) const {
    std::vector<VariableId> path;
    std::int32_t s = last;
    while (s >= 0) {
      path.push_back(VariableId{s / 2});
      s = pred[s];
    }
    path.push_back(VariableId{-2 - s});
    std::reverse(path.begin(), path.end());
    return path;
  }
};

}  // namespace

std::optional<std::vector<VariableId>> unblocked_path(const CausalGraph& g,
                                                      const NodeSet& x,
                                                      const NodeSet& y,
                                                      const NodeSet& z) {
  require_disjoint({&x, &y, &z}, "d-separation");
  TrailSearch search(g, z);
  return search.run(x, y);
}

bool d_separated(const CausalGraph& g, const NodeSet& x, const NodeSet& y,
                 const NodeSet& z) {
  return !unblocked_path(g, x, y, z).has_value();
}

NodeSet z_not_anc_w(const CausalGraph& g, const NodeSet& x, const NodeSet& z,
                    const NodeSet& w) {
  require_disjoint({&x, &z, &w}, "z_not_anc_w");
  if (w.empty()) return z;
  CausalGraph gx = g.cut_incoming(x);
  NodeSet anc = gx.ancestors(w);
  return z - anc;
}

// ---------------------------------------------------------------------------
// Graph text format

namespace {

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

struct LineScanner {
  std::string_view line;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < line.size() &&
           std::isspace(static_cast<unsigned char>(line[pos])))
      ++pos;
  }
  bool done() {
    skip_ws();
    return pos >= line.size();
  }
  std::optional<std::string> ident() {
    skip_ws();
    if (pos >= line.size() || !is_ident_start(line[pos])) return std::nullopt;
    std::size_t start = pos;
    while (pos < line.size() && is_ident_char(line[pos])) ++pos;
    return std::string(line.substr(start, pos - start));
  }
  bool literal(std::string_view text) {
    skip_ws();
    if (line.substr(pos, text.size()) == text) {
      pos += text.size();
      return true;
    }
    return false;
  }
};

}  // namespace

CausalGraph parse_graph_text(std::string_view text) {
  std::map<std::string, NodeKind> nodes;
  std::vector<std::pair<std::string, std::string>> edges;
  int fresh_latents = 0;

  auto declare = [&](const std::string& name) {
    nodes.emplace(name, NodeKind::Observed);
  };

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;

    if (std::size_t hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);

    LineScanner scan{line};
    if (scan.done()) continue;

    auto first = scan.ident();
    if (!first)
      throw ParseError("graph line " + std::to_string(line_no) +
                           ": expected a variable or 'latent'",
                       scan.pos);

    if (*first == "latent") {
      auto name = scan.ident();
      if (!name)
        throw ParseError("graph line " + std::to_string(line_no) +
                             ": 'latent' needs a variable name",
                         scan.pos);
      declare(*name);
      nodes[*name] = NodeKind::Latent;
      if (!scan.done())
        throw ParseError("graph line " + std::to_string(line_no) +
                             ": trailing input after latent declaration",
                         scan.pos);
      continue;
    }

    declare(*first);
    bool bidirected = false;
    if (scan.literal("<->"))
      bidirected = true;
    else if (!scan.literal("->"))
      throw ParseError("graph line " + std::to_string(line_no) +
                           ": expected '->' or '<->'",
                       scan.pos);

    auto second = scan.ident();
    if (!second)
      throw ParseError("graph line " + std::to_string(line_no) +
                           ": expected a variable after the arrow",
                       scan.pos);
    declare(*second);
    if (!scan.done())
      throw ParseError("graph line " + std::to_string(line_no) +
                           ": trailing input after edge",
                       scan.pos);

    if (bidirected) {
      std::string fresh;
      do {
        fresh = "_L" + std::to_string(++fresh_latents);
      } while (nodes.count(fresh));
      nodes.emplace(fresh, NodeKind::Latent);
      edges.push_back({fresh, *first});
      edges.push_back({fresh, *second});
    } else {
      edges.push_back({*first, *second});
    }
  }

  std::vector<std::pair<std::string, NodeKind>> node_list(nodes.begin(),
                                                          nodes.end());
  return CausalGraph(std::move(node_list), edges);
}

}  // namespace docalc
