/* This file is part of ibia-mpe, an approximate MPE engine for discrete
 * Bayesian networks.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 */
#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "ibia/approximate.hpp"
#include "ibia/build.hpp"
#include "ibia/clique_tree.hpp"
#include "ibia/errors.hpp"
#include "ibia/network.hpp"

namespace ibia {

/// Raised by traceback when a reduced clique belief has zero support.
class DeadEndDecode : public Error {
 public:
  DeadEndDecode(int clique_id, Assignment partial)
      : Error("decode dead-ends at clique " + std::to_string(clique_id)),
        clique_id(clique_id),
        partial(std::move(partial)) {}
  int clique_id;
  Assignment partial;
};

/// Cooperative time-limit cutoff; carries whatever was decoded so far.
class TimedOut : public Error {
 public:
  explicit TimedOut(Assignment partial)
      : Error("time limit exceeded"), partial(std::move(partial)) {}
  Assignment partial;
  std::vector<std::string> trace;
};

using Deadline = std::optional<std::chrono::steady_clock::time_point>;

struct Partition {
  CliqueTreeForest ctf;  // calibrated snapshot
  std::vector<int> added_vars;
  int n_cliques = 0;
  double max_clique_size = 0.0;
  std::size_t peak_belief_entries = 0;
};

/// The ordered calibrated partitions of one connected component.
struct PartitionSequence {
  std::vector<Partition> parts;
  double mcs_im_final = 0.0;  // after any soft-constraint decrements
  int retries = 0;            // soft-constraint re-approximations
};

/// Builds, calibrates and approximates until every family is admitted.
/// mcs_im acts as a soft constraint: when a freshly approximated forest
/// cannot admit any pending family, it is decremented (floor 2) and the
/// approximation redone from the saved calibrated forest. Throws
/// InfeasibleBound when a family can never fit or the floor is reached.
PartitionSequence run_ibia(const std::vector<Family>& families,
                           const std::vector<int>& cards, double mcs_p,
                           const ApproxConfig& cfg, const Deadline& deadline,
                           std::vector<std::string>* trace);

/// Pre-order argmax decoding of a max-calibrated forest. Every variable of
/// the forest not already in `known` gets a state; the root clique of each
/// tree is one attaining the tree maximum (most unassigned variables, ties
/// by id). Throws DeadEndDecode when a reduced belief has zero support.
Assignment traceback(const CliqueTreeForest& ctf, const Assignment& known,
                     Rng* rng = nullptr);

/// Sum over components of the last partition's max clique belief, plus the
/// constants factored out during simplification.
double find_max_marg(const std::vector<PartitionSequence>& components,
                     double log_constant);

/// Families grouped by weakly-connected component (union of scopes), ordered
/// by smallest member variable; order within a group is preserved.
std::vector<std::vector<Family>> group_families(const SimplifiedNetwork& s);

struct IterationStat {
  int iteration = 0;
  int components = 0;
  int max_partitions = 0;
  int assigned_after = 0;
};

struct MpeResult {
  Assignment assignment;  // complete, evidence included
  double log_mpe = kLogZero;
  double log_maxmarg_estimate = kLogZero;
  int iterations = 0;
  int max_partitions = 0;
  bool dead_end_completed = false;  // greedy zero-probability completion used
  std::vector<IterationStat> iteration_stats;
  std::vector<std::string> trace;
  std::size_t peak_belief_entries = 0;
};

/// Iterative MPE decoding: simplify by the known states, partition each
/// component with run_ibia, decode the last partition, merge, repeat until
/// every variable is assigned. The assigned set strictly grows per
/// iteration. log_mpe is re-evaluated from the original CPDs. Throws
/// TimedOut past the time limit (seconds; <= 0 means unlimited).
MpeResult infer_mpe(const DiscreteNetwork& net, const Assignment& evidence,
                    double mcs_p, const ApproxConfig& cfg,
                    double time_limit_seconds = 0.0);

/// Sum of the original CPD log entries at a complete assignment.
double evaluate_assignment(const DiscreteNetwork& net, const Assignment& full);

struct DeltaMetrics {
  double delta_maxmarg = 0.0;
  double delta_mpe = 0.0;  // -inf encodes the zero-probability "N" outcome
};

DeltaMetrics delta_metrics(const MpeResult& result, double exact_log);

}  // namespace ibia
