#pragma once

#include <string>
#include <utility>
#include <vector>

#include "docalc/graph.hpp"

namespace docalc::corpus {

/// x -> z -> y with a latent common cause of x and y: the classic
/// front-door structure. Every effect among the observed variables is
/// identifiable here despite the confounder.
CausalGraph frontdoor();

/// x -> y with a latent common cause of x and y: the bow pattern, the
/// smallest structure whose causal effect is not identifiable.
CausalGraph bow();

/// a -> b -> c, fully observed.
CausalGraph chain();

/// a -> c <- b, fully observed.
CausalGraph collider();

/// s -> x, s -> y, x -> y, fully observed: textbook adjustment-set case.
CausalGraph adjustment();

/// Four observed variables x, y1, y2, z with latent arcs x<->y2 and
/// y1<->y2 and edges x -> y1 -> z <- y2. Joint actions on {x, y2} are
/// identifiable for z while the singleton action on x is not.
CausalGraph joint_action();

/// Every bundled graph with a short name, for corpus-wide checks.
std::vector<std::pair<std::string, CausalGraph>> all();

}  // namespace docalc::corpus
