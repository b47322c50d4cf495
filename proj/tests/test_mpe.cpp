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

#include "ibia/mpe.hpp"
#include "ibia/oracle.hpp"
#include "test_util.hpp"

using namespace ibia;
using test::logs;

TEST_CASE("traceback decodes a single clique by argmax") {
  CliqueTreeForest ctf({2, 2});
  const int c = ctf.add_clique({0, 1});
  ctf.cliques[c].belief = Factor({0, 1}, {2, 2}, logs({.54, .06, .08, .32}));
  const Assignment decoded = traceback(ctf, {});
  CHECK(decoded.at(0) == 0);
  CHECK(decoded.at(1) == 0);
}

TEST_CASE("traceback with everything known returns the known states") {
  CliqueTreeForest ctf({2, 2});
  const int c = ctf.add_clique({0, 1});
  ctf.cliques[c].belief = Factor({0, 1}, {2, 2}, logs({.54, .06, .08, .32}));
  Assignment known;
  known.set(0, 1);
  known.set(1, 1);
  CHECK(traceback(ctf, known) == known);
}

TEST_CASE("single-partition decoding attains the tree maximum") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const DiscreteNetwork net =
        random_network(12, 2, 3, seed % 3 == 0 ? 0.25 : 0.0, 9100 + seed);
    const SimplifiedNetwork s = simplify(net, {});
    const CliqueTreeForest ctf = test::build_calibrated(net);
    double forest_max = s.log_constant;
    for (const auto& tree : ctf.trees()) {
      double tree_max = kLogZero;
      for (int c : tree)
        tree_max = std::max(tree_max, ctf.cliques[c].belief->max_value());
      forest_max += tree_max;
    }

    Assignment decoded = traceback(ctf, {});
    decoded.merge(s.known);  // states factored out by simplification
    CHECK(decoded.size() == static_cast<std::size_t>(net.num_vars()));
    const double value = evaluate_assignment(net, decoded);
    CHECK(log_space_diff(value, forest_max) <= 1e-9);
    CHECK(log_space_diff(value, brute_force_mpe(net, {}).log_value) <= 1e-9);
  }
}

TEST_CASE("traceback reports the dead-end clique with the partial assignment") {
  // Deliberately inconsistent beliefs: the second clique has no support on
  // the state the first clique decodes.
  CliqueTreeForest ctf({2, 2, 2});
  const int a = ctf.add_clique({0, 1});
  const int b = ctf.add_clique({1, 2});
  ctf.add_edge(a, b);
  ctf.cliques[a].belief = Factor({0, 1}, {2, 2}, logs({.9, .05, .03, .02}));
  ctf.cliques[b].belief =
      Factor({1, 2}, {2, 2}, logs({0.0, 0.0, .4, .3}));  // needs 1 = 1
  try {
    traceback(ctf, {});
    FAIL("expected DeadEndDecode");
  } catch (const DeadEndDecode& e) {
    CHECK(e.clique_id == b);
    CHECK(e.partial.at(0) == 0);
    CHECK(e.partial.at(1) == 0);
  }
}

TEST_CASE("find_max_marg sums component maxima and the simplify constant") {
  // Two independent pieces: 0 -> 1 and 2.
  const char* text =
      "BAYES\n3\n2 2 2\n3\n1 0\n2 0 1\n1 2\n"
      "2\n0.6 0.4\n"
      "4\n0.9 0.1 0.2 0.8\n"
      "2\n0.3 0.7\n";
  const DiscreteNetwork net = parse_uai(text);
  const SimplifiedNetwork s = simplify(net, {});
  const auto groups = group_families(s);
  REQUIRE(groups.size() == 2);

  std::vector<PartitionSequence> sequences;
  ApproxConfig cfg;
  for (const auto& families : groups)
    sequences.push_back(run_ibia(families, s.cards, 20.0, cfg, {}, nullptr));
  const double estimate = find_max_marg(sequences, s.log_constant);
  CHECK(estimate ==
        doctest::Approx(std::log(.54) + std::log(.7)).epsilon(1e-12));
  CHECK(estimate == doctest::Approx(brute_force_mpe(net, {}).log_value)
                        .epsilon(1e-9));
}

TEST_CASE("find_max_marg is exact for single partitions") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const DiscreteNetwork net = random_network(14, 2, 3, 0.0, 9300 + seed);
    const SimplifiedNetwork s = simplify(net, {});
    std::vector<PartitionSequence> sequences;
    ApproxConfig cfg;
    for (const auto& families : group_families(s))
      sequences.push_back(run_ibia(families, s.cards, 30.0, cfg, {}, nullptr));
    for (const auto& seq : sequences) CHECK(seq.parts.size() == 1);
    CHECK(log_space_diff(find_max_marg(sequences, s.log_constant),
                         brute_force_mpe(net, {}).log_value) <= 1e-9);
  }
}

TEST_CASE("infer_mpe is exact when one partition suffices") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const DiscreteNetwork net =
        random_network(13, 2, 3, seed % 4 == 0 ? 0.3 : 0.0, 9400 + seed);
    const Assignment evidence =
        sample_consistent_evidence(net, static_cast<int>(seed % 3), 9500 + seed);
    ApproxConfig cfg;
    const MpeResult result = infer_mpe(net, evidence, 25.0, cfg);
    CHECK(result.iterations == 1);
    CHECK(result.max_partitions == 1);
    const auto exact = brute_force_mpe(net, evidence);
    CHECK(log_space_diff(result.log_mpe, exact.log_value) <= 1e-9);
    CHECK(log_space_diff(result.log_maxmarg_estimate, exact.log_value) <= 1e-9);
    for (const auto& [var, state] : evidence.states())
      CHECK(result.assignment.at(var) == state);
  }
}

TEST_CASE("multi-partition runs grow the assigned set strictly") {
  int multi_seen = 0;
  for (std::uint64_t seed = 0; multi_seen < 5 && seed < 60; ++seed) {
    const DiscreteNetwork net = random_network(22, 4, 2, 0.0, 9600 + seed);
    ApproxConfig cfg;
    cfg.mcs_im = 4.0;
    const MpeResult result = infer_mpe(net, {}, 6.0, cfg);
    CHECK(result.log_mpe <= 1e-12);
    CHECK(result.assignment.size() == static_cast<std::size_t>(net.num_vars()));
    int previous = 0;
    for (const auto& stat : result.iteration_stats) {
      CHECK(stat.assigned_after > previous);
      previous = stat.assigned_after;
    }
    if (result.max_partitions > 1) ++multi_seen;

    // Decoded value never beats the true maximum.
    const double exact = brute_force_mpe(net, {}).log_value;
    CHECK(result.log_mpe <= exact + 1e-9);

    // Work stays within the build bound.
    CHECK(result.peak_belief_entries <=
          static_cast<std::size_t>(std::pow(2.0, 6.0 + 1e-6)));
  }
  CHECK(multi_seen >= 5);
}

TEST_CASE("infer_mpe with a tiny time limit raises TimedOut") {
  const DiscreteNetwork net = random_network(16, 3, 3, 0.0, 12);
  ApproxConfig cfg;
  CHECK_THROWS_AS(infer_mpe(net, {}, 20.0, cfg, 1e-9), TimedOut);
}

TEST_CASE("delta metrics") {
  MpeResult result;
  result.log_mpe = -13.28;
  result.log_maxmarg_estimate = -13.28;
  SUBCASE("exact result gives zero deltas") {
    const DeltaMetrics d = delta_metrics(result, -13.28);
    CHECK(d.delta_maxmarg == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(d.delta_mpe == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("a weaker decode shows its signed gap") {
    result.log_mpe = -13.37;
    const DeltaMetrics d = delta_metrics(result, -13.28);
    CHECK(d.delta_mpe == doctest::Approx(-0.09).epsilon(1e-9));
  }
  SUBCASE("zero-probability assignments map to the N outcome") {
    result.log_mpe = kLogZero;
    const DeltaMetrics d = delta_metrics(result, -13.28);
    CHECK(d.delta_mpe == kLogZero);
  }
}

TEST_CASE("evaluate_assignment recomputes from the original CPDs") {
  const DiscreteNetwork net = random_network(10, 3, 3, 0.3, 77);
  const auto exact = brute_force_mpe(net, {});
  CHECK(evaluate_assignment(net, exact.assignment) == exact.log_value);
  CHECK(evaluate_assignment(net, exact.assignment) <= 0.0);
}

TEST_CASE("an unrecoverable dead end still yields a complete zero assignment") {
  // Heavy determinism makes the committed partial assignments contradict
  // later CPDs; after the random-ordering restart also fails, the decoder
  // completes greedily and reports the zero-probability outcome honestly.
  const DiscreteNetwork net = random_network(28, 5, 2, 0.5, 991023);
  const Assignment evidence = sample_consistent_evidence(net, 3, 23);
  ApproxConfig cfg;
  cfg.mcs_im = 4.0;
  cfg.tie_seed = 23;
  const MpeResult result = infer_mpe(net, evidence, 7.0, cfg, 30.0);
  CHECK(result.assignment.size() == static_cast<std::size_t>(net.num_vars()));
  CHECK(result.log_mpe == kLogZero);
  CHECK(result.dead_end_completed);
  bool restarted = false;
  for (const auto& line : result.trace)
    if (line.rfind("restart", 0) == 0) restarted = true;
  CHECK(restarted);
  for (const auto& [var, state] : evidence.states())
    CHECK(result.assignment.at(var) == state);
}

TEST_CASE("decoded states merge into later simplifications like evidence") {
  // A network with determinism that forces promotions across iterations.
  const DiscreteNetwork net = random_network(20, 3, 2, 0.5, 424242);
  ApproxConfig cfg;
  cfg.mcs_im = 3.0;
  const MpeResult result = infer_mpe(net, {}, 5.0, cfg);
  CHECK(result.assignment.size() == static_cast<std::size_t>(net.num_vars()));
  // log_mpe is the honest re-evaluation, even for zero-probability outcomes.
  CHECK(result.log_mpe == evaluate_assignment(net, result.assignment));
}
