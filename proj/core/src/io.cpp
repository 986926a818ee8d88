#include "docalc/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "docalc/parse.hpp"

namespace docalc {

using nlohmann::json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

CausalGraph load_graph_file(const std::string& path) {
  return parse_graph_text(read_text_file(path));
}

// ---------------------------------------------------------------------------
// CPT files

LoadedBn load_cpts_json(const CausalGraph& g, const std::string& json_text) {
  json doc = json::parse(json_text);
  if (!doc.is_object())
    throw ArgumentError("CPT document must be a JSON object");

  const std::size_t n = g.node_count();
  std::vector<int> cards(n, 0);
  std::vector<std::vector<double>> tables(n);
  std::vector<std::string> warnings;

  for (VariableId v : g.all_nodes()) {
    const std::string& name = g.name(v);
    if (!doc.contains(name))
      throw ArgumentError("CPT document is missing variable " + name);
    const json& entry = doc.at(name);
    if (!entry.contains("card") || !entry.at("card").is_number_integer())
      throw ArgumentError("variable " + name + " needs an integer 'card'");
    int card = entry.at("card").get<int>();
    if (card < 2)
      throw ArgumentError("variable " + name + " needs card >= 2");
    cards[static_cast<std::size_t>(v.value)] = card;

    // The declared parent list must match the graph exactly (same set,
    // canonical order); the stored row order is defined over it.
    std::vector<std::string> declared;
    if (entry.contains("parents"))
      declared = entry.at("parents").get<std::vector<std::string>>();
    NodeSet actual = g.parents(v);
    if (declared.size() != actual.size())
      throw ArgumentError("variable " + name +
                          " declares the wrong number of parents");
    std::size_t i = 0;
    for (VariableId p : actual) {
      if (declared[i] != g.name(p))
        throw ArgumentError("variable " + name +
                            " must list parents in canonical order: "
                            "expected " +
                            g.name(p) + ", got " + declared[i]);
      ++i;
    }

    if (!entry.contains("table") || !entry.at("table").is_array())
      throw ArgumentError("variable " + name + " needs a 'table' array");
    tables[static_cast<std::size_t>(v.value)] =
        entry.at("table").get<std::vector<double>>();
  }

  // Validate row sums against the looser file tolerance, renormalize, and
  // report; the DiscreteBN constructor re-checks shape and range.
  for (VariableId v : g.all_nodes()) {
    std::size_t i = static_cast<std::size_t>(v.value);
    int card = cards[i];
    std::vector<double>& t = tables[i];
    if (card == 0 || t.size() % static_cast<std::size_t>(card) != 0)
      throw ArgumentError("table for " + g.name(v) + " has the wrong shape");
    std::size_t rows = t.size() / static_cast<std::size_t>(card);
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0;
      for (int k = 0; k < card; ++k) s += t[r * card + k];
      if (std::abs(s - 1.0) > 1e-9)
        throw ArgumentError("row " + std::to_string(r) + " of " + g.name(v) +
                            " sums to " + std::to_string(s));
      if (s != 1.0) {
        for (int k = 0; k < card; ++k) t[r * card + k] /= s;
        warnings.push_back("renormalized row " + std::to_string(r) + " of " +
                           g.name(v));
      }
    }
  }

  return LoadedBn{DiscreteBN(g, std::move(cards), std::move(tables)),
                  std::move(warnings)};
}

LoadedBn load_cpts_file(const CausalGraph& g, const std::string& path) {
  return load_cpts_json(g, read_text_file(path));
}

// ---------------------------------------------------------------------------
// Policy files

StochasticPolicy load_policy_json(const DiscreteBN& bn,
                                  const std::string& json_text) {
  json doc = json::parse(json_text);
  const CausalGraph& g = bn.graph();
  if (!doc.contains("action"))
    throw ArgumentError("policy document needs an 'action'");
  VariableId action = g.id_of(doc.at("action").get<std::string>());

  std::vector<VariableId> input_list;
  if (doc.contains("inputs"))
    for (const auto& name : doc.at("inputs"))
      input_list.push_back(g.id_of(name.get<std::string>()));
  NodeSet inputs(std::move(input_list));

  int provided = doc.contains("map") + doc.contains("table") +
                 doc.contains("strips");
  if (provided != 1)
    throw ArgumentError(
        "policy document needs exactly one of 'map', 'table' or 'strips'");

  if (doc.contains("map")) {
    DeterministicPolicy det{action, inputs,
                            doc.at("map").get<std::vector<int>>()};
    return to_stochastic(bn, det);
  }

  if (doc.contains("table")) {
    StochasticPolicy pol{action, inputs, {}};
    for (const auto& row : doc.at("table"))
      for (const auto& e : row) pol.table.push_back(e.get<double>());
    check_policy(bn, pol);
    return pol;
  }

  const json& strips = doc.at("strips");
  if (!strips.contains("value"))
    throw ArgumentError("'strips' needs a 'value'");
  int value = strips.at("value").get<int>();
  std::vector<Assignment> satisfying;
  if (strips.contains("precondition"))
    for (const auto& cfg : strips.at("precondition")) {
      Assignment a;
      for (const auto& [name, val] : cfg.items())
        a.set(g.id_of(name), val.get<int>());
      satisfying.push_back(std::move(a));
    }
  auto predicate = [satisfying](const Assignment& w) {
    for (const Assignment& s : satisfying)
      if (s == w) return true;
    return false;
  };
  return strips_policy(bn, action, value, inputs, predicate);
}

StochasticPolicy load_policy_file(const DiscreteBN& bn,
                                  const std::string& path) {
  return load_policy_json(bn, read_text_file(path));
}

// ---------------------------------------------------------------------------
// Derivation JSON

namespace {

json names_json(const CausalGraph& g, const NodeSet& s) {
  json out = json::array();
  for (VariableId v : s) out.push_back(g.name(v));
  return out;
}

NodeSet names_from_json(const CausalGraph& g, const json& arr) {
  std::vector<VariableId> ids;
  for (const auto& name : arr) ids.push_back(g.id_of(name.get<std::string>()));
  return NodeSet(std::move(ids));
}

json rule_to_json(const CausalGraph& g, const RuleInstance& inst) {
  json out;
  out["rule"] = inst.rule == Rule::R1 ? "R1"
                : inst.rule == Rule::R2 ? "R2"
                                        : "R3";
  out["direction"] =
      inst.dir == Direction::Forward ? "forward" : "backward";
  out["targets"] = names_json(g, inst.targets);
  out["held"] = names_json(g, inst.held);
  out["moved"] = names_json(g, inst.moved);
  out["rest"] = names_json(g, inst.rest);
  out["cut_incoming"] = names_json(g, inst.cut_incoming);
  out["cut_outgoing"] = names_json(g, inst.cut_outgoing);
  out["sep_given"] = names_json(g, inst.sep_given);
  return out;
}

RuleInstance rule_from_json(const CausalGraph& g, const json& doc) {
  RuleInstance inst;
  std::string rule = doc.at("rule").get<std::string>();
  inst.rule = rule == "R1" ? Rule::R1 : rule == "R2" ? Rule::R2 : Rule::R3;
  inst.dir = doc.at("direction").get<std::string>() == "forward"
                 ? Direction::Forward
                 : Direction::Backward;
  inst.targets = names_from_json(g, doc.at("targets"));
  inst.held = names_from_json(g, doc.at("held"));
  inst.moved = names_from_json(g, doc.at("moved"));
  inst.rest = names_from_json(g, doc.at("rest"));
  inst.cut_incoming = names_from_json(g, doc.at("cut_incoming"));
  inst.cut_outgoing = names_from_json(g, doc.at("cut_outgoing"));
  inst.sep_given = names_from_json(g, doc.at("sep_given"));
  return inst;
}

}  // namespace

std::string derivation_to_json(const Derivation& d) {
  const CausalGraph& g = d.graph;
  json out;
  out["schema"] = 1;
  json nodes = json::array();
  for (VariableId v : g.all_nodes()) {
    json node;
    node["name"] = g.name(v);
    node["kind"] = g.kind(v) == NodeKind::Observed   ? "observed"
                   : g.kind(v) == NodeKind::Latent   ? "latent"
                                                     : "indicator";
    nodes.push_back(std::move(node));
  }
  out["graph"]["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const auto& [p, c] : g.edges())
    edges.push_back(json::array({g.name(p), g.name(c)}));
  out["graph"]["edges"] = std::move(edges);

  out["initial"] = render(g, d.initial);
  out["final"] = render(g, d.final_expr);
  json steps = json::array();
  for (const Step& s : d.steps) {
    json step;
    step["kind"] = move_kind_name(s.kind);
    step["path"] = s.path;
    if (s.rule) step["rule"] = rule_to_json(g, *s.rule);
    if (s.variable) step["variable"] = g.name(*s.variable);
    step["result"] = render(g, s.result);
    steps.push_back(std::move(step));
  }
  out["steps"] = std::move(steps);
  return out.dump(2);
}

Derivation derivation_from_json(const CausalGraph& g,
                                const std::string& json_text) {
  json doc = json::parse(json_text);
  if (!doc.contains("schema") || doc.at("schema").get<int>() != 1)
    throw ArgumentError("unsupported derivation schema");

  Derivation d{g, parse_and_bind(doc.at("initial").get<std::string>(), g),
               {}, nullptr};
  for (const auto& step_doc : doc.at("steps")) {
    Step step;
    auto kind = move_kind_from_name(step_doc.at("kind").get<std::string>());
    if (!kind) throw ArgumentError("unknown step kind in derivation");
    step.kind = *kind;
    step.path = step_doc.at("path").get<std::vector<int>>();
    if (step_doc.contains("rule"))
      step.rule = rule_from_json(g, step_doc.at("rule"));
    if (step_doc.contains("variable"))
      step.variable = g.id_of(step_doc.at("variable").get<std::string>());
    step.result = parse_and_bind(step_doc.at("result").get<std::string>(), g);
    d.steps.push_back(std::move(step));
  }
  d.final_expr = parse_and_bind(doc.at("final").get<std::string>(), g);
  replay(d);  // throws when the recorded trace does not verify
  return d;
}

}  // namespace docalc
