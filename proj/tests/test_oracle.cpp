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

#include <cmath>

#include "ibia/errors.hpp"
#include "ibia/network.hpp"
#include "ibia/oracle.hpp"
#include "test_util.hpp"

using namespace ibia;
using test::logs;

namespace {

const char* kChainAB =
    "BAYES\n2\n2 2\n2\n1 0\n2 0 1\n"
    "2\n 0.6 0.4\n"
    "4\n 0.9 0.1 0.2 0.8\n";

}  // namespace

TEST_CASE("brute force on the two-variable chain") {
  const DiscreteNetwork net = parse_uai(kChainAB);
  // Self-check: enumerate the four joint states by hand here as well.
  double best = -1e300;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      Assignment config;
      config.set(0, a);
      config.set(1, b);
      const double v =
          net.cpds[0].value_at(config) + net.cpds[1].value_at(config);
      best = std::max(best, v);
    }
  const auto r = brute_force_mpe(net, {});
  CHECK(r.log_value == doctest::Approx(std::log(0.54)).epsilon(1e-12));
  CHECK(r.log_value == best);
  CHECK(r.assignment.at(0) == 0);
  CHECK(r.assignment.at(1) == 0);
}

TEST_CASE("evidence fixing every variable returns that assignment") {
  const DiscreteNetwork net = parse_uai(kChainAB);
  Assignment all;
  all.set(0, 1);
  all.set(1, 0);
  const auto r = brute_force_mpe(net, all);
  CHECK(r.assignment == all);
  CHECK(r.log_value ==
        doctest::Approx(std::log(0.4) + std::log(0.2)).epsilon(1e-12));
}

TEST_CASE("permuting variable ids leaves the maximum unchanged") {
  const DiscreteNetwork net = random_network(8, 3, 3, 0.1, 77);
  const double value = brute_force_mpe(net, {}).log_value;

  // Relabel ids via the reverse permutation by serializing with renamed ids.
  const int n = net.num_vars();
  DiscreteNetwork renamed;
  renamed.cards.resize(n);
  renamed.parents.resize(n);
  renamed.cpds.resize(n);
  auto rename = [n](int v) { return n - 1 - v; };
  for (int v = 0; v < n; ++v) {
    renamed.cards[rename(v)] = net.cards[v];
    for (int p : net.parents[v]) renamed.parents[rename(v)].push_back(rename(p));
    std::vector<int> listed(net.parents[v]);
    listed.push_back(v);
    std::vector<int> listed_new, listed_cards;
    for (int u : listed) {
      listed_new.push_back(rename(u));
      listed_cards.push_back(net.cards[u]);
    }
    renamed.cpds[rename(v)] = Factor::from_listed(
        listed_new, listed_cards, values_in_order(net.cpds[v], listed));
  }
  CHECK(brute_force_mpe(renamed, {}).log_value ==
        doctest::Approx(value).epsilon(1e-12));
}

TEST_CASE("oracle refuses oversized state spaces") {
  const DiscreteNetwork net = random_network(30, 2, 2, 0.0, 5);
  CHECK_THROWS_AS(brute_force_mpe(net, {}), OracleRefusal);
}

TEST_CASE("random networks are reproducible and normalized") {
  const DiscreteNetwork a = random_network(10, 3, 4, 0.4, 123);
  const DiscreteNetwork b = random_network(10, 3, 4, 0.4, 123);
  CHECK(a.cards == b.cards);
  CHECK(a.parents == b.parents);
  for (int v = 0; v < a.num_vars(); ++v) CHECK(a.cpds[v] == b.cpds[v]);
  CHECK(a.validate(1e-9).empty());

  const DiscreteNetwork single = random_network(1, 3, 3, 0.0, 9);
  CHECK(single.num_vars() == 1);
  CHECK(single.parents[0].empty());
}

TEST_CASE("sampled evidence is always consistent") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DiscreteNetwork net = random_network(10, 3, 3, 0.5, 600 + seed);
    const Assignment evidence = sample_consistent_evidence(net, 3, 700 + seed);
    CHECK(evidence.size() == 3);
    const auto r = brute_force_mpe(net, evidence);
    CHECK(r.log_value > kLogZero);
  }
}

TEST_CASE("max-marginal enumeration agrees with factor algebra on one table") {
  Rng rng(31);
  const std::vector<int> cards{2, 3, 2, 2};
  const Factor f = test::random_factor(rng, {0, 1, 2, 3}, cards, 0.1);
  const Factor direct = max_marginalize(f, {1, 3});
  const Factor enumerated =
      brute_force_max_marginal({f}, {}, {0, 2}, cards);
  CHECK(approx_equal(direct, enumerated, 1e-12));
}
