#include "docalc/corpus.hpp"

namespace docalc::corpus {

namespace {
constexpr NodeKind kObs = NodeKind::Observed;
constexpr NodeKind kLat = NodeKind::Latent;
}  // namespace

CausalGraph frontdoor() {
  return CausalGraph(
      {{"x", kObs}, {"y", kObs}, {"z", kObs}, {"u", kLat}},
      {{"u", "x"}, {"u", "y"}, {"x", "z"}, {"z", "y"}});
}

CausalGraph bow() {
  return CausalGraph({{"x", kObs}, {"y", kObs}, {"u", kLat}},
                     {{"u", "x"}, {"u", "y"}, {"x", "y"}});
}

CausalGraph chain() {
  return CausalGraph({{"a", kObs}, {"b", kObs}, {"c", kObs}},
                     {{"a", "b"}, {"b", "c"}});
}

CausalGraph collider() {
  return CausalGraph({{"a", kObs}, {"b", kObs}, {"c", kObs}},
                     {{"a", "c"}, {"b", "c"}});
}

CausalGraph adjustment() {
  return CausalGraph({{"s", kObs}, {"x", kObs}, {"y", kObs}},
                     {{"s", "x"}, {"s", "y"}, {"x", "y"}});
}

CausalGraph joint_action() {
  return CausalGraph({{"x", kObs},
                      {"y1", kObs},
                      {"y2", kObs},
                      {"z", kObs},
                      {"u1", kLat},
                      {"u2", kLat}},
                     {{"x", "y1"},
                      {"y1", "z"},
                      {"y2", "z"},
                      {"u1", "x"},
                      {"u1", "y2"},
                      {"u2", "y1"},
                      {"u2", "y2"}});
}

std::vector<std::pair<std::string, CausalGraph>> all() {
  return {{"frontdoor", frontdoor()}, {"bow", bow()},
          {"chain", chain()},         {"collider", collider()},
          {"adjustment", adjustment()}, {"joint_action", joint_action()}};
}

}  // namespace docalc::corpus
