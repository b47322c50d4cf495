/* This file is part of ibia-mpe, an approximate MPE engine for discrete
 * Bayesian networks.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "ibia/approximate.hpp"
#include "ibia/calibrate.hpp"
#include "ibia/oracle.hpp"
#include "test_util.hpp"

using namespace ibia;
using test::logs;

namespace {

const char* kChainABC =
    "BAYES\n3\n2 2 2\n3\n1 0\n2 0 1\n2 1 2\n"
    "2\n0.6 0.4\n"
    "4\n0.9 0.1 0.2 0.8\n"
    "4\n0.3 0.7 0.5 0.5\n";

// Random calibrated single-partition forest plus a random interface set.
struct Scenario {
  DiscreteNetwork net;
  CliqueTreeForest ctf;
  std::set<int> interface;
};

Scenario random_scenario(std::uint64_t seed, int n_vars, double interface_frac,
                         double determinism = 0.0) {
  Scenario s;
  s.net = random_network(n_vars, 3, 3, determinism, seed);
  s.ctf = test::build_calibrated(s.net);
  Rng rng(seed ^ 0xabcdef);
  const auto vars = s.ctf.vars();
  for (int v : vars)
    if (rng_unit(rng) < interface_frac) s.interface.insert(v);
  if (s.interface.empty())
    s.interface.insert(vars[static_cast<std::size_t>(
        rng_int(rng, 0, static_cast<int>(vars.size()) - 1))]);
  return s;
}

}  // namespace

TEST_CASE("nothing to remove when everything is interface and fits") {
  const DiscreteNetwork net = parse_uai(kChainABC);
  const CliqueTreeForest in = test::build_calibrated(net);
  ApproxConfig cfg;
  cfg.mcs_im = 10.0;
  const CliqueTreeForest out = approximate_ctf(in, {0, 1, 2}, cfg);
  std::vector<std::vector<int>> scopes_in, scopes_out;
  for (int c : in.live_cliques()) scopes_in.push_back(in.cliques[c].scope);
  for (int c : out.live_cliques()) scopes_out.push_back(out.cliques[c].scope);
  std::sort(scopes_in.begin(), scopes_in.end());
  std::sort(scopes_out.begin(), scopes_out.end());
  CHECK(scopes_in == scopes_out);
  CHECK(check_valid(out).ok());
  CHECK(check_max_calibrated(out, 1e-9).ok());
}

TEST_CASE("collapsing the chain middle variable matches brute force") {
  const DiscreteNetwork net = parse_uai(kChainABC);
  const CliqueTreeForest in = test::build_calibrated(net);
  ApproxConfig cfg;
  cfg.mcs_im = 2.0;
  const CliqueTreeForest out = approximate_ctf(in, {0, 2}, cfg);
  REQUIRE(out.live_cliques().size() == 1);
  const auto& collapsed = out.cliques[out.live_cliques()[0]];
  CHECK(collapsed.scope == std::vector<int>{0, 2});

  std::vector<Factor> cpds(net.cpds);
  const Factor expected = brute_force_max_marginal(cpds, {}, {0, 2}, net.cards);
  CHECK(approx_equal(*collapsed.belief, expected, 1e-9));
}

TEST_CASE("a collapse that would overshoot the bound is skipped") {
  const DiscreteNetwork net = parse_uai(kChainABC);
  CliqueTreeForest ctf = test::build_calibrated(net);
  const std::string before = dump(ctf);
  exact_max_marginalize_var(ctf, 1, 1.5);  // {0,2} would have size 2
  CHECK(dump(ctf) == before);
}

TEST_CASE("single-clique removal takes columnwise maxima") {
  CliqueTreeForest ctf({2, 2});
  const int c = ctf.add_clique({0, 1});
  ctf.cliques[c].belief = Factor({0, 1}, {2, 2}, logs({.54, .06, .08, .32}));
  exact_max_marginalize_var(ctf, 0, 10.0);
  const auto& shrunk = ctf.cliques[ctf.live_cliques()[0]];
  CHECK(shrunk.scope == std::vector<int>{1});
  CHECK(approx_equal(*shrunk.belief, Factor({1}, {2}, logs({.54, .32})), 1e-12));
}

TEST_CASE("local marginalization keeps the variable in the largest fitting subtree") {
  // Path w1-w2-w3-w4, variable 0 in all four; with a bound of 3 the
  // four-variable cliques w1, w2 are oversized and w3, w4 retain it.
  Rng rng(5);
  CliqueTreeForest wide({2, 2, 2, 2, 2, 2, 2, 2});
  const int w1 = wide.add_clique({0, 1, 2, 6});
  const int w2 = wide.add_clique({0, 2, 3, 7});
  const int w3 = wide.add_clique({0, 3, 4});
  const int w4 = wide.add_clique({0, 4, 5});
  wide.add_edge(w1, w2);
  wide.add_edge(w2, w3);
  wide.add_edge(w3, w4);
  for (int c : {w1, w2, w3, w4})
    wide.cliques[c].factors.push_back(
        test::random_factor(rng, wide.cliques[c].scope, wide.cards));
  calibrate(wide);
  REQUIRE(check_max_calibrated(wide, 1e-9).ok());

  const bool changed = local_max_marginalize_var(wide, 0, {}, 3.0);
  CHECK(changed);
  REQUIRE(check_valid(wide).ok());
  CHECK(check_max_calibrated(wide, 1e-9).ok());
  CHECK(wide.cliques[w1].scope == std::vector<int>{1, 2, 6});
  CHECK(wide.cliques[w2].scope == std::vector<int>{2, 3, 7});
  CHECK(wide.cliques[w3].scope == std::vector<int>{0, 3, 4});
  CHECK(wide.cliques[w4].scope == std::vector<int>{0, 4, 5});
}

TEST_CASE("no removal happens when every clique fits") {
  Scenario s = random_scenario(3100, 10, 0.4);
  CliqueTreeForest ctf = s.ctf;
  for (int v : ctf.vars()) {
    const std::string before = dump(ctf);
    // Bound high enough that the retained subtree is the whole holder set.
    const bool changed = local_max_marginalize_var(ctf, v, s.interface, 30.0);
    CHECK_FALSE(changed);
    CHECK(dump(ctf) == before);
  }
}

TEST_CASE("approximation output stays valid and max-calibrated") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Scenario s = random_scenario(3200 + seed, 16, 0.35,
                                 seed % 5 == 0 ? 0.2 : 0.0);
    ApproxConfig cfg;
    cfg.mcs_im = 2.0 + static_cast<double>(seed % 5);
    cfg.tie_seed = seed;
    cfg.priority = seed % 3 == 0
                       ? ApproxConfig::Priority::unprioritized_random
                       : ApproxConfig::Priority::fewest_cliques;
    const CliqueTreeForest out = approximate_ctf(s.ctf, s.interface, cfg);
    const auto validity = check_valid(out);
    REQUIRE_MESSAGE(validity.ok(), validity.violations.front());
    CHECK(check_max_calibrated(out, 1e-9).ok());

    // Interface retention.
    const auto vars = out.vars();
    for (int v : s.interface)
      CHECK(std::binary_search(vars.begin(), vars.end(), v));

    // Trees containing interface variables never split.
    CHECK(out.trees().size() <= s.ctf.trees().size());

    // Every surviving tree keeps the maximum belief of the input tree it
    // came from (identified through any shared variable).
    std::map<int, double> input_tree_max;  // var -> tree max
    for (const auto& tree : s.ctf.trees()) {
      double tree_max = kLogZero;
      for (int c : tree)
        tree_max = std::max(tree_max, s.ctf.cliques[c].belief->max_value());
      for (int c : tree)
        for (int v : s.ctf.cliques[c].scope) input_tree_max[v] = tree_max;
    }
    for (const auto& tree : out.trees()) {
      double tree_max = kLogZero;
      for (int c : tree)
        tree_max = std::max(tree_max, out.cliques[c].belief->max_value());
      const int witness = out.cliques[tree.front()].scope.front();
      CHECK(log_space_diff(tree_max, input_tree_max.at(witness)) <= 1e-9);
    }
  }
}

TEST_CASE("output clique beliefs are max-marginals of the input joint") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Scenario s = random_scenario(3300 + seed, 9, 0.35);
    ApproxConfig cfg;
    cfg.mcs_im = 2.0 + static_cast<double>(seed % 4);
    const CliqueTreeForest out = approximate_ctf(s.ctf, s.interface, cfg);

    // Compare against the joint of the input tree the clique came from.
    std::map<int, std::size_t> var_tree;
    const auto input_trees = s.ctf.trees();
    std::vector<std::vector<Factor>> nums(input_trees.size()),
        dens(input_trees.size());
    for (std::size_t t = 0; t < input_trees.size(); ++t) {
      for (int c : input_trees[t]) {
        nums[t].push_back(*s.ctf.cliques[c].belief);
        for (int v : s.ctf.cliques[c].scope) var_tree[v] = t;
      }
      for (int e : s.ctf.live_edges())
        if (std::find(input_trees[t].begin(), input_trees[t].end(),
                      s.ctf.edges[e].a) != input_trees[t].end())
          dens[t].push_back(*s.ctf.edges[e].belief);
    }

    for (int c : out.live_cliques()) {
      const std::size_t t = var_tree.at(out.cliques[c].scope.front());
      const Factor expected = brute_force_max_marginal(
          nums[t], dens[t], out.cliques[c].scope, s.ctf.cards);
      CHECK(approx_equal(*out.cliques[c].belief, expected, 1e-9));
    }
  }
}

TEST_CASE("reparameterization factors multiply back to the joint") {
  const DiscreteNetwork net = parse_uai(kChainABC);
  CliqueTreeForest ctf = test::build_calibrated(net);
  std::vector<Factor> nums, dens;
  test::beliefs_of(ctf, &nums, &dens);

  reparameterize(ctf);
  const auto live = ctf.live_cliques();
  REQUIRE(live.size() == 2);
  const int root = *std::max_element(live.begin(), live.end());
  CHECK(*ctf.cliques[root].belief == ctf.cliques[root].factors.front());

  std::vector<Factor> factors;
  for (int c : live) {
    REQUIRE(ctf.cliques[c].factors.size() == 1);
    factors.push_back(ctf.cliques[c].factors.front());
  }
  const auto all_vars = ctf.vars();
  const Factor lhs = brute_force_max_marginal(factors, {}, all_vars, ctf.cards);
  const Factor rhs = brute_force_max_marginal(nums, dens, all_vars, ctf.cards);
  CHECK(approx_equal(lhs, rhs, 1e-9));

  // Recalibrating the reparameterized forest reproduces the same beliefs.
  CliqueTreeForest again = ctf;
  calibrate(again);
  for (int c : live)
    CHECK(approx_equal(*again.cliques[c].belief, *ctf.cliques[c].belief, 1e-9));
}

TEST_CASE("a single clique reparameterizes to its own belief") {
  CliqueTreeForest ctf({2, 2});
  const int c = ctf.add_clique({0, 1});
  ctf.cliques[c].belief = Factor({0, 1}, {2, 2}, logs({.54, .06, .08, .32}));
  reparameterize(ctf);
  REQUIRE(ctf.cliques[c].factors.size() == 1);
  CHECK(ctf.cliques[c].factors.front() == *ctf.cliques[c].belief);
}
