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

#include <iosfwd>
#include <string>
#include <vector>

#include "ibia/assignment.hpp"
#include "ibia/factor.hpp"

namespace ibia {

struct Variable {
  int id = 0;
  int cardinality = 1;
};

/// A discrete Bayesian network: one CPD per variable, ids 0..n-1.
/// Immutable after construction; share freely across threads.
struct DiscreteNetwork {
  std::vector<int> cards;                 // indexed by variable id
  std::vector<std::vector<int>> parents;  // per variable, as listed in input
  std::vector<Factor> cpds;               // per variable, scope {v} + parents

  int num_vars() const { return static_cast<int>(cards.size()); }

  /// Checks CPD normalization (linear-space row sums within tol of 1),
  /// acyclicity and scope consistency. Returns human-readable violations.
  std::vector<std::string> validate(double tol = 1e-9) const;
};

/// Parses the UAI model format (BAYES preamble). Throws ParseError with the
/// offending line on malformed input.
DiscreteNetwork parse_uai(std::istream& in);
DiscreteNetwork parse_uai(const std::string& text);
DiscreteNetwork parse_uai_file(const std::string& path);

std::string serialize_uai(const DiscreteNetwork& net);

/// Parses the UAI evidence format: count followed by (variable, state) pairs.
Assignment parse_evidence(std::istream& in, const DiscreteNetwork& net);
Assignment parse_evidence(const std::string& text, const DiscreteNetwork& net);
Assignment parse_evidence_file(const std::string& path, const DiscreteNetwork& net);

std::string serialize_evidence(const Assignment& evidence);

/// One multiplicative piece of a (possibly reduced) model. For a CPD family
/// `child` is the variable it introduces; residual factors left behind by
/// known variables have child = -1 and are admitted once their whole scope
/// is present.
struct Family {
  int child = -1;
  std::vector<int> scope;  // sorted variable ids
  Factor table;
};

/// Result of conditioning a network on known states: remaining families (in
/// a topological admission order), the enlarged known set, and the log of
/// the constants factored out.
struct SimplifiedNetwork {
  std::vector<int> cards;          // original id space
  Assignment known;                // input states plus promoted deterministic ones
  double log_constant = 0.0;
  std::vector<Family> families;
  std::vector<int> unknown_vars;   // sorted
};

/// Removes known variables from every CPD, promotes parentless deterministic
/// CPDs to known states until a fixed point, and collects residual factors.
/// Throws ZeroProbabilityEvidence when a known state has zero probability
/// under its own reduced CPD.
SimplifiedNetwork simplify(const DiscreteNetwork& net, const Assignment& known);

/// Variable ids grouped by weakly-connected DAG component, each group sorted,
/// groups ordered by smallest member.
std::vector<std::vector<int>> connected_dag_components(const DiscreteNetwork& net);

/// A component re-indexed to contiguous ids, with the mapping back.
struct NetworkComponent {
  DiscreteNetwork net;
  std::vector<int> orig_ids;  // orig_ids[new_id] = original id
};

std::vector<NetworkComponent> split_components(const DiscreteNetwork& net);

}  // namespace ibia
