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

#include <set>
#include <vector>

#include "ibia/clique_tree.hpp"
#include "ibia/network.hpp"

namespace ibia {

/// A clique tree forest under incremental construction, with the chordal
/// graph it represents maintained alongside. Adding a family inserts its
/// moral edges, re-triangulates the impacted part of the graph with min-fill
/// and splices the rebuilt subtree back.
class BuildState {
 public:
  explicit BuildState(std::vector<int> cards);

  /// Resumes construction from an approximated forest; the graph is the
  /// union of the clique completions.
  static BuildState resume(const CliqueTreeForest& ctf);

  const CliqueTreeForest& ctf() const { return ctf_; }
  CliqueTreeForest& ctf() { return ctf_; }
  const std::vector<int>& cards() const { return ctf_.cards; }
  bool present(int var) const { return present_[var] != 0; }
  std::vector<int> present_vars() const;

  /// Splices the family in if every resulting clique stays within mcs_p.
  /// On success the family factor is assigned to a containing clique and the
  /// child (if any) becomes present; on rejection nothing changes.
  bool add_family(const Family& family, double mcs_p);

 private:
  /// Steiner-closed set of live cliques touching any of the given variables.
  std::vector<int> impacted_cliques(const std::vector<int>& vars) const;

  CliqueTreeForest ctf_;
  std::vector<std::set<int>> adj_;  // chordal graph over present variables
  std::vector<char> present_;
};

struct PartitionBuildResult {
  std::vector<int> added_vars;  // children of admitted CPD families
  int families_added = 0;       // CPD plus residual admissions
};

/// Admits ready families (all non-child scope variables present) in list
/// order, rescanning until a full pass admits nothing. Admitted families are
/// removed from `pending`; rejected ones retry in the next partition.
/// Throws InfeasibleBound for a family whose own scope exceeds mcs_p.
PartitionBuildResult build_partition(BuildState& state,
                                     std::vector<Family>& pending,
                                     double mcs_p);

/// Min-fill triangulation of the graph induced on `vars` (adjacency given as
/// a set per variable, restricted to `vars` by the caller). Returns the
/// maximal cliques (sorted scopes, lexicographic order), a junction forest
/// over them, and the fill edges introduced.
struct Triangulation {
  std::vector<std::vector<int>> cliques;
  std::vector<std::pair<int, int>> tree_edges;  // indices into cliques
  std::vector<std::pair<int, int>> fill_edges;  // variable pairs
};
Triangulation triangulate_minfill(const std::vector<int>& vars,
                                  const std::vector<std::set<int>>& adj);

}  // namespace ibia
