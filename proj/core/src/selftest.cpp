#include "docalc/selftest.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

#include "docalc/corpus.hpp"
#include "docalc/identify.hpp"
#include "docalc/io.hpp"
#include "docalc/parse.hpp"
#include "docalc/policy.hpp"

namespace docalc::selftest {

namespace {

struct Failure {
  std::string detail;
};

void expect(bool ok, const std::string& detail) {
  if (!ok) throw Failure{detail};
}

// Deterministic per-check seed stream.
std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + salt * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Golden identification results on the front-door graph

const char* kGoldenQueries[4] = {
    "P(z | do(x))",
    "P(y | do(z))",
    "P(y | do(x))",
    "P(y, z | do(x))",
};
const char* kGoldenFormulas[4] = {
    "P(z|x)",
    "sum_x P(y|x,z) P(x)",
    "sum_z P(z|x) sum_x' P(y|x',z) P(x')",
    "P(z|x) sum_x' P(y|x',z) P(x')",
};

Derivation identify_golden(const CausalGraph& g, int i) {
  IdentifyOutcome out = identify(g, parse_and_bind(kGoldenQueries[i], g));
  const Identified* id = identified(out);
  expect(id != nullptr, std::string("query not identified: ") +
                            kGoldenQueries[i]);
  return id->derivation;
}

void check_golden_formulas() {
  CausalGraph g = corpus::frontdoor();
  for (int i = 0; i < 4; ++i) {
    Derivation d = identify_golden(g, i);
    ExprPtr expected = parse_and_bind(kGoldenFormulas[i], g);
    expect(equal(d.final_expr, expected),
           std::string(kGoldenQueries[i]) + " reduced to " +
               render(g, d.final_expr) + ", expected " +
               render(g, expected));
    replay(d);  // the recorded trace must verify
  }
}

void check_determinism() {
  CausalGraph g = corpus::frontdoor();
  std::string first = derivation_to_json(identify_golden(g, 2));
  std::string second = derivation_to_json(identify_golden(g, 2));
  expect(first == second, "repeated identification produced different traces");
}

// ---------------------------------------------------------------------------
// Oracle agreement

void check_oracle_agreement(std::uint64_t seed, int bn_count,
                            double tolerance) {
  CausalGraph g = corpus::frontdoor();
  Derivation goldens[4] = {identify_golden(g, 0), identify_golden(g, 1),
                           identify_golden(g, 2), identify_golden(g, 3)};
  for (int s = 0; s < bn_count; ++s) {
    DiscreteBN bn = random_binary_bn(g, mix(seed, 1000 + s));
    for (const Derivation& d : goldens) {
      const ProbTerm& q = d.initial->as_term()->term;
      NodeSet free = q.all_vars();
      for_each_assignment(bn, free, [&](const Assignment& a) {
        Assignment targets, obs, dos;
        for (const TermVar& t : q.targets()) targets.set(t.var, *a.get(t.var));
        for (const TermCond& c : q.conditions()) {
          if (c.mode == CondMode::Intervention)
            dos.set(c.var, *a.get(c.var));
          else
            obs.set(c.var, *a.get(c.var));
        }
        double want, got;
        try {
          want = bn.prob(targets, obs, dos);
          got = bn.eval(d.final_expr, a);
        } catch (const UndefinedConditional&) {
          return;
        }
        expect(std::abs(want - got) <= tolerance,
               "formula disagrees with the intervention oracle by " +
                   std::to_string(std::abs(want - got)));
      });
    }
  }
}

// ---------------------------------------------------------------------------
// Non-identifiability on the bow graph

void check_bow(std::uint64_t seed) {
  CausalGraph g = corpus::bow();
  IdentifyOutcome out = identify(g, parse_and_bind("P(y | do(x))", g));
  expect(std::holds_alternative<NonIdentified>(out),
         "the bow-graph effect should not be identified within the default "
         "depth");
  WitnessPair pair = bow_witness_pair(mix(seed, 2));
  expect(pair.joint_gap <= 1e-9, "witness pair observational joints differ");
  expect(pair.causal_gap >= 0.05, "witness pair causal gap too small");
}

// ---------------------------------------------------------------------------
// Augmented-network equivalence

void check_augmented(std::uint64_t seed) {
  for (const auto& [name, g] : corpus::all()) {
    DiscreteBN bn = random_binary_bn(g, mix(seed, 3));
    JointTable original = bn.joint();
    for (VariableId x : g.observed_nodes()) {
      for (double prior : {0.5, 0.9}) {
        auto [aug, f] = bn.augmented(x, prior);
        JointTable aug_joint = aug.joint();

        // Conditioning on idle recovers the original network.
        Assignment idle;
        idle.set(f, 0);
        JointTable idled = aug_joint.conditioned(idle);
        std::vector<int> values(aug.cards().size(), 0);
        for_each_assignment(bn, g.all_nodes(), [&](const Assignment& a) {
          std::vector<int> orig(bn.cards().size());
          for (const auto& [v, val] : a.pairs()) orig[v.value] = val;
          for (std::size_t i = 0; i < orig.size(); ++i) values[i] = orig[i];
          values.back() = 0;
          double want = original.cells[original.index_of(orig)];
          double got = idled.cells[idled.index_of(values)];
          expect(std::abs(want - got) <= 1e-12,
                 name + ": idle conditioning differs from the original");
        });

        // Conditioning on do(v) recovers the intervened network.
        for (int v = 0; v < bn.card(x); ++v) {
          Assignment dof;
          dof.set(f, v + 1);
          JointTable done = aug_joint.conditioned(dof);
          Assignment act;
          act.set(x, v);
          JointTable truth = bn.intervene(act).joint();
          for_each_assignment(bn, g.all_nodes(), [&](const Assignment& a) {
            std::vector<int> orig(bn.cards().size());
            for (const auto& [var, val] : a.pairs()) orig[var.value] = val;
            for (std::size_t i = 0; i < orig.size(); ++i) values[i] = orig[i];
            values.back() = v + 1;
            double want = truth.cells[truth.index_of(orig)];
            double got = done.cells[done.index_of(values)];
            expect(std::abs(want - got) <= 1e-12,
                   name + ": do conditioning differs from intervening");
          });
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Intervention properties

void check_intervention_properties(std::uint64_t seed) {
  for (const auto& [name, g] : corpus::all()) {
    DiscreteBN bn = random_binary_bn(g, mix(seed, 4));

    for (VariableId x : g.observed_nodes()) {
      NodeSet affected = g.descendants({x}).with(x);
      for (int v = 0; v < bn.card(x); ++v) {
        Assignment act;
        act.set(x, v);
        DiscreteBN cut = bn.intervene(act);
        // Only descendants of x can change.
        for (VariableId w : g.observed_nodes() - affected) {
          for (int wv = 0; wv < bn.card(w); ++wv) {
            Assignment t;
            t.set(w, wv);
            expect(std::abs(bn.prob(t, {}, {}) - cut.prob(t, {}, {})) <= 1e-12,
                   name + ": intervention changed a non-descendant marginal");
          }
        }
      }

      // Given the action variable and its parents, forcing and observing
      // coincide.
      NodeSet pa = g.parents(x);
      bool parents_observed = (pa - g.observed_nodes()).empty();
      if (parents_observed) {
        for (VariableId s : g.observed_nodes() - pa.with(x)) {
          for_each_assignment(bn, pa.with(x).with(s), [&](const Assignment& a) {
            Assignment target, pa_obs, both_obs, dox;
            target.set(s, *a.get(s));
            for (VariableId p : pa) pa_obs.set(p, *a.get(p));
            both_obs = pa_obs;
            both_obs.set(x, *a.get(x));
            dox.set(x, *a.get(x));
            try {
              double forced = bn.prob(target, pa_obs, dox);
              double seen = bn.prob(target, both_obs, {});
              expect(std::abs(forced - seen) <= 1e-10,
                     name + ": conditioning on the action and its parents "
                            "distinguishes doing from seeing");
            } catch (const UndefinedConditional&) {
            }
          });
        }
      }

      // Do-vs-see criterion for pairwise effects.
      for (VariableId j : g.observed_nodes().without(x)) {
        if (pa.contains(j) || !(pa - g.observed_nodes()).empty()) continue;
        bool separated = pa.empty() || d_separated(g, {j}, pa, {x});
        if (!separated) continue;
        for (int xv = 0; xv < bn.card(x); ++xv)
          for (int jv = 0; jv < bn.card(j); ++jv) {
            Assignment t, c;
            t.set(j, jv);
            c.set(x, xv);
            try {
              double forced = bn.prob(t, {}, c);
              double seen = bn.prob(t, c, {});
              expect(std::abs(forced - seen) <= 1e-10,
                     name + ": do and see disagree although the criterion "
                            "holds");
            } catch (const UndefinedConditional&) {
            }
          }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Policies

void check_policies(std::uint64_t seed) {
  CausalGraph g = corpus::frontdoor();

  for (int s = 0; s < 10; ++s) {
    DiscreteBN bn = random_binary_bn(g, mix(seed, 500 + s));
    VariableId x = g.id_of("x");
    VariableId y = g.id_of("y");
    std::uint64_t r = mix(seed, 600 + s);

    // Deterministic policy with no inputs (a constant action).
    DeterministicPolicy constant{x, {}, {static_cast<int>(r & 1)}};
    Assignment target;
    target.set(y, 1);
    double via_formula = eval_det_policy(bn, constant, target);
    Assignment dox;
    dox.set(x, constant.response[0]);
    expect(std::abs(via_formula - bn.prob(target, {}, dox)) <= 1e-10,
           "constant policy differs from the atomic intervention");

    // Stochastic policy on z driving x is ill-posed: z descends from x.
    StochasticPolicy bad{x, {g.id_of("z")}, {0.5, 0.5, 0.5, 0.5}};
    bool rejected = false;
    try {
      eval_stoch_policy(bn, bad, target);
    } catch (const ArgumentError&) {
      rejected = true;
    }
    expect(rejected, "a policy reading a descendant of the action must be "
                     "rejected");

    // Stochastic policy vs mechanism replacement on the chain graph,
    // where x has an admissible observed input.
    CausalGraph gc = corpus::chain();
    DiscreteBN cbn = random_binary_bn(gc, mix(seed, 700 + s));
    StochasticPolicy pol{gc.id_of("b"), {gc.id_of("a")}, {}};
    double p0 = 0.1 + 0.8 * ((mix(seed, 800 + s) >> 8) % 1000) / 1000.0;
    double p1 = 0.1 + 0.8 * ((mix(seed, 900 + s) >> 8) % 1000) / 1000.0;
    pol.table = {p0, 1 - p0, p1, 1 - p1};
    Assignment tc;
    tc.set(gc.id_of("c"), 1);
    double averaged = eval_stoch_policy(cbn, pol, tc);
    double replaced = apply_policy(cbn, pol).prob(tc, {}, {});
    expect(std::abs(averaged - replaced) <= 1e-10,
           "stochastic policy averaging differs from mechanism replacement");

    // Precondition-gated policy, both degenerate cases.
    auto always = [](const Assignment&) { return true; };
    auto never = [](const Assignment&) { return false; };
    StochasticPolicy strips_on = strips_policy(cbn, gc.id_of("b"), 1, {},
                                               always);
    Assignment dob;
    dob.set(gc.id_of("b"), 1);
    expect(std::abs(eval_stoch_policy(cbn, strips_on, tc) -
                    cbn.prob(tc, {}, dob)) <= 1e-10,
           "always-enabled gated action differs from the atomic "
           "intervention");
    StochasticPolicy strips_off = strips_policy(cbn, gc.id_of("b"), 1, {},
                                                never);
    expect(std::abs(eval_stoch_policy(cbn, strips_off, tc) -
                    cbn.prob(tc, {}, {})) <= 1e-10,
           "never-enabled gated action changed the distribution");
  }

  // Composing declared causal inputs on the front-door graph.
  CausalGraph gf = corpus::frontdoor();
  std::vector<ProbTerm> known{
      parse_query_term("P(z | do(x))", gf).term,
      parse_query_term("P(y | do(z))", gf).term,
  };
  IdentifyOutcome out = identify_from_causal_inputs(
      gf, parse_and_bind("P(y | do(x))", gf), known);
  const Identified* id = identified(out);
  expect(id != nullptr, "composition from causal inputs failed");
  ExprPtr expected = parse_and_bind("sum_z P(y|do(z)) P(z|do(x))", gf);
  expect(equal(id->derivation.final_expr, expected),
         "composition produced " + render(gf, id->derivation.final_expr));
  for (int s = 0; s < 10; ++s) {
    DiscreteBN bn = random_binary_bn(gf, mix(seed, 1100 + s));
    for (int xv = 0; xv < 2; ++xv)
      for (int yv = 0; yv < 2; ++yv) {
        Assignment binding{{gf.id_of("x"), xv}, {gf.id_of("y"), yv}};
        Assignment t, c;
        t.set(gf.id_of("y"), yv);
        c.set(gf.id_of("x"), xv);
        expect(std::abs(bn.eval(id->derivation.final_expr, binding) -
                        bn.prob(t, {}, c)) <= 1e-9,
               "composed formula differs from the oracle");
      }
  }
}

// ---------------------------------------------------------------------------
// Loader validation

void check_loader() {
  CausalGraph g = corpus::chain();
  const char* drifting = R"({
    "a": {"card": 2, "parents": [], "table": [0.3000000004, 0.7]},
    "b": {"card": 2, "parents": ["a"], "table": [0.2, 0.8, 0.9, 0.1]},
    "c": {"card": 2, "parents": ["b"], "table": [0.5, 0.5, 0.4, 0.6]}
  })";
  LoadedBn loaded = load_cpts_json(g, drifting);
  expect(!loaded.warnings.empty(),
         "a drifting row sum should surface a renormalization warning");

  const char* broken = R"({
    "a": {"card": 2, "parents": [], "table": [0.4, 0.7]},
    "b": {"card": 2, "parents": ["a"], "table": [0.2, 0.8, 0.9, 0.1]},
    "c": {"card": 2, "parents": ["b"], "table": [0.5, 0.5, 0.4, 0.6]}
  })";
  bool rejected = false;
  try {
    load_cpts_json(g, broken);
  } catch (const ArgumentError&) {
    rejected = true;
  }
  expect(rejected, "a badly broken row sum must be rejected");
}

using CheckFn = std::function<void()>;

}  // namespace

WitnessPair bow_witness_pair(std::uint64_t seed, double gap,
                             double joint_tol) {
  CausalGraph g = corpus::bow();
  VariableId u = g.id_of("u"), x = g.id_of("x"), y = g.id_of("y");

  for (int attempt = 0; attempt < 200; ++attempt) {
    std::uint64_t r = mix(seed, static_cast<std::uint64_t>(attempt));
    auto unit = [&](int salt) {
      return ((mix(r, static_cast<std::uint64_t>(salt)) >> 10) % 100000) /
             100000.0;
    };
    double a = 0.25 + 0.5 * unit(1);  // P(x=1), identical in both models
    double q[2][2];                   // first model: P(y=1|x, u)
    for (int xv = 0; xv < 2; ++xv)
      for (int uv = 0; uv < 2; ++uv) q[xv][uv] = 0.2 + 0.6 * unit(10 + 2 * xv + uv);

    // First model: x independent of u.
    auto build = [&](double c0, double c1, double t[2][2]) {
      std::vector<std::vector<double>> tables(3);
      tables[u.value] = {0.5, 0.5};
      tables[x.value] = {1 - c0, c0, 1 - c1, c1};  // rows by u
      // y's parents in canonical order are {u, x}; rows lexicographic.
      tables[y.value].resize(8);
      for (int uv = 0; uv < 2; ++uv)
        for (int xv = 0; xv < 2; ++xv) {
          double p1 = t[xv][uv];
          tables[y.value][(uv * 2 + xv) * 2 + 0] = 1 - p1;
          tables[y.value][(uv * 2 + xv) * 2 + 1] = p1;
        }
      return DiscreteBN(g, {2, 2, 2}, std::move(tables));
    };

    DiscreteBN first = build(a, a, q);

    // Second model: skew x toward u, then solve P(y=1|x,u) rows to keep
    // the observational joint fixed, pushing mass to the heavier branch.
    double delta = 0.8 * std::min(a, 1 - a);
    double c0 = a - delta, c1 = a + delta;
    double t[2][2];
    bool feasible = true;
    for (int xv = 0; xv < 2 && feasible; ++xv) {
      double w0 = xv == 1 ? c0 : 1 - c0;
      double w1 = xv == 1 ? c1 : 1 - c1;
      // Match 2 * P(x=xv, y=1) of the first model:
      // solve w0*t0 + w1*t1 = sgoal with t in [0,1], extremal.
      double sgoal = (xv == 1 ? a : 1 - a) * (q[xv][0] + q[xv][1]);
      double hi_w = std::max(w0, w1), lo_w = std::min(w0, w1);
      double hi_t, lo_t;
      if (sgoal <= hi_w) {
        hi_t = sgoal / hi_w;
        lo_t = 0.0;
      } else {
        hi_t = 1.0;
        lo_t = (sgoal - hi_w) / lo_w;
      }
      if (lo_t < -1e-12 || lo_t > 1 + 1e-12 || hi_t < -1e-12 ||
          hi_t > 1 + 1e-12) {
        feasible = false;
        break;
      }
      if (w0 >= w1) {
        t[xv][0] = hi_t;
        t[xv][1] = lo_t;
      } else {
        t[xv][0] = lo_t;
        t[xv][1] = hi_t;
      }
    }
    if (!feasible) continue;

    DiscreteBN second = build(c0, c1, t);

    double joint_gap = 0, causal_gap = 0;
    for (int xv = 0; xv < 2; ++xv) {
      for (int yv = 0; yv < 2; ++yv) {
        Assignment e{{x, xv}, {y, yv}};
        joint_gap = std::max(joint_gap, std::abs(first.prob(e, {}, {}) -
                                                 second.prob(e, {}, {})));
      }
      Assignment ty{{y, 1}};
      Assignment dx{{x, xv}};
      causal_gap = std::max(causal_gap, std::abs(first.prob(ty, {}, dx) -
                                                 second.prob(ty, {}, dx)));
    }
    if (joint_gap <= joint_tol && causal_gap >= gap)
      return WitnessPair{std::move(first), std::move(second), joint_gap,
                         causal_gap};
  }
  throw ResourceError("no witness pair found within the attempt budget");
}

std::vector<CheckResult> run(std::uint64_t seed) {
  std::vector<std::pair<std::string, CheckFn>> checks = {
      {"golden-identification", [] { check_golden_formulas(); }},
      {"deterministic-traces", [] { check_determinism(); }},
      {"oracle-agreement",
       [seed] { check_oracle_agreement(seed, 25, 1e-9); }},
      {"bow-non-identifiability", [seed] { check_bow(seed); }},
      {"augmented-equivalence", [seed] { check_augmented(seed); }},
      {"intervention-properties",
       [seed] { check_intervention_properties(seed); }},
      {"policies", [seed] { check_policies(seed); }},
      {"loader-validation", [] { check_loader(); }},
  };

  std::vector<CheckResult> results;
  for (auto& [name, fn] : checks) {
    CheckResult r;
    r.name = name;
    auto start = std::chrono::steady_clock::now();
    try {
      fn();
      r.pass = true;
    } catch (const Failure& f) {
      r.pass = false;
      r.detail = f.detail;
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                    .count();
    results.push_back(std::move(r));
  }
  return results;
}

bool run_and_print(std::uint64_t seed, std::ostream& out) {
  bool all = true;
  for (const CheckResult& r : run(seed)) {
    out << (r.pass ? "PASS" : "FAIL") << "  " << r.name;
    std::ostringstream secs;
    secs.precision(2);
    secs << std::fixed << r.seconds;
    out << "  (" << secs.str() << "s)";
    if (!r.pass) out << "  " << r.detail;
    out << "\n";
    all = all && r.pass;
  }
  return all;
}

}  // namespace docalc::selftest
