#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "docalc/bn.hpp"

namespace docalc::selftest {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

/// Runs the bundled verification corpus: golden identification results,
/// oracle agreement, non-identifiability behavior on the bow graph,
/// augmented-network equivalences, policy checks, and the intervention
/// properties. Deterministic for a fixed seed.
std::vector<CheckResult> run(std::uint64_t seed);

/// Prints one pass/fail line per check; returns true when all pass.
bool run_and_print(std::uint64_t seed, std::ostream& out);

/// Two networks over the bow graph that agree on the observational joint
/// of (x, y) to within `joint_tol` yet differ in P(y=1|do(x)) by at least
/// `gap`; found by a seeded parameter search. Throws ResourceError when
/// no pair is found within the attempt budget.
struct WitnessPair {
  DiscreteBN first;
  DiscreteBN second;
  double joint_gap;   // max |difference| over observational P(x,y)
  double causal_gap;  // max |difference| over P(y=1|do(x))
};
WitnessPair bow_witness_pair(std::uint64_t seed, double gap = 0.05,
                             double joint_tol = 1e-9);

}  // namespace docalc::selftest
