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
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ibia/factor.hpp"

namespace ibia {

struct Clique {
  std::vector<int> scope;  // sorted variable ids
  std::vector<Factor> factors;
  std::optional<Factor> belief;
  bool alive = true;
};

struct SepEdge {
  int a = -1;
  int b = -1;
  std::vector<int> scope;  // sorted, equals intersection of endpoint scopes
  std::optional<Factor> belief;
  bool alive = true;
};

/// A forest of clique trees with beliefs and assigned factors. Mutable while
/// a single owner builds or approximates it; treated as frozen afterwards.
/// Removed cliques and edges keep their ids and are flagged dead.
class CliqueTreeForest {
 public:
  CliqueTreeForest() = default;
  explicit CliqueTreeForest(std::vector<int> cards) : cards(std::move(cards)) {}

  std::vector<int> cards;  // variable id -> cardinality
  std::vector<Clique> cliques;
  std::vector<SepEdge> edges;

  int add_clique(std::vector<int> scope);
  int add_edge(int a, int b);
  void kill_clique(int id);
  void kill_edge(int id);

  bool clique_alive(int id) const { return cliques[id].alive; }
  std::vector<int> live_cliques() const;
  std::vector<int> live_edges() const;
  std::vector<int> edges_of(int clique) const;      // live, ascending
  std::vector<int> neighbors_of(int clique) const;  // live, ascending
  int other_end(int edge, int clique) const;

  /// Live cliques containing the variable, ascending.
  std::vector<int> cliques_containing(int var) const;

  /// Union of live clique scopes, sorted.
  std::vector<int> vars() const;

  /// Connected components of the live forest as clique-id groups, each
  /// sorted, ordered by smallest member.
  std::vector<std::vector<int>> trees() const;

  /// Smallest-id live clique whose scope contains all of `vars` (sorted);
  /// -1 when none.
  int find_clique_containing(const std::vector<int>& vars) const;

  /// Drops dead cliques and edges, renumbering ids densely.
  void compact();

 private:
  // clique id -> edge ids ever attached; dead edges are filtered on read.
  std::vector<std::vector<int>> incident_;
};

/// log2 of the clique's state-space size.
double clique_size(const std::vector<int>& scope, const std::vector<int>& cards);
double clique_size(const CliqueTreeForest& ctf, int clique);

struct ValidityReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks forest acyclicity, the running intersection property, maximality
/// against neighbors, and sepset scopes. Never throws.
ValidityReport check_valid(const CliqueTreeForest& ctf);

struct CalibrationReport {
  struct Violation {
    int edge = -1;
    double deviation = 0.0;
  };
  std::vector<Violation> violations;
  double max_deviation = 0.0;
  bool ok() const { return violations.empty(); }
};

/// For every live edge, both endpoint beliefs must max-marginalize onto the
/// sepset belief within tol (log space). Requires all beliefs present.
CalibrationReport check_max_calibrated(const CliqueTreeForest& ctf, double tol);

/// Per tree, the Steiner subtree spanning every clique that contains any of
/// `vars`; trees without such cliques are dropped entirely.
CliqueTreeForest minimal_connecting_subgraph(const CliqueTreeForest& ctf,
                                             const std::set<int>& vars);

/// Merges every live clique whose scope is contained in a neighbor's scope
/// into that neighbor, reattaching its other edges (their sepsets and
/// beliefs are unchanged) and moving its assigned factors.
void remove_nonmaximal_cliques(CliqueTreeForest& ctf);

/// Line-oriented debug dump: one clique or edge per line.
void dump(const CliqueTreeForest& ctf, std::ostream& out);
std::string dump(const CliqueTreeForest& ctf);

}  // namespace ibia
