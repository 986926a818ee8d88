#pragma once

#include <optional>
#include <string>
#include <vector>

#include "docalc/bn.hpp"
#include "docalc/identify.hpp"
#include "docalc/policy.hpp"

namespace docalc {

CausalGraph load_graph_file(const std::string& path);

struct LoadedBn {
  DiscreteBN bn;
  /// Non-fatal issues, e.g. rows renormalized after a small sum drift.
  std::vector<std::string> warnings;
};

/// CPT JSON: an object mapping variable name to
///   {"card": n, "parents": [names...], "table": [row-major numbers]}
/// with rows in lexicographic parent-configuration order. Rows must sum
/// to 1 within 1e-9; drifting rows are renormalized with a warning.
LoadedBn load_cpts_json(const CausalGraph& g, const std::string& json_text);
LoadedBn load_cpts_file(const CausalGraph& g, const std::string& path);

/// Policy JSON: {"action": name, "inputs": [names...]} plus exactly one of
///   "map":    [value per input configuration, lexicographic order]
///   "table":  [[row per input configuration]...]
///   "strips": {"value": v, "precondition": [{var: value, ...}, ...]}
/// For "strips" the inputs field lists the precondition set W; the policy
/// inputs become W together with the action's parents.
StochasticPolicy load_policy_json(const DiscreteBN& bn,
                                  const std::string& json_text);
StochasticPolicy load_policy_file(const DiscreteBN& bn,
                                  const std::string& path);

/// Serialized derivation (schema 1) with enough detail to replay it.
std::string derivation_to_json(const Derivation& d);
/// Rebuilds a derivation from JSON against the given graph and verifies
/// it by replaying.
Derivation derivation_from_json(const CausalGraph& g,
                                const std::string& json_text);

std::string read_text_file(const std::string& path);

}  // namespace docalc
