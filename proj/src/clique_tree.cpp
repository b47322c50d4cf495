/* This file is part of ibia-mpe, an approximate MPE engine for discrete
 * Bayesian networks.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 */
#include "ibia/clique_tree.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>
#include <numeric>
#include <ostream>
#include <sstream>

namespace ibia {

namespace {

std::vector<int> intersect(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

bool subset(const std::vector<int>& a, const std::vector<int>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

int CliqueTreeForest::add_clique(std::vector<int> scope) {
  assert(std::is_sorted(scope.begin(), scope.end()));
  Clique c;
  c.scope = std::move(scope);
  cliques.push_back(std::move(c));
  incident_.emplace_back();
  return static_cast<int>(cliques.size()) - 1;
}

int CliqueTreeForest::add_edge(int a, int b) {
  assert(a != b && cliques[a].alive && cliques[b].alive);
  SepEdge e;
  e.a = std::min(a, b);
  e.b = std::max(a, b);
  e.scope = intersect(cliques[a].scope, cliques[b].scope);
  edges.push_back(std::move(e));
  const int id = static_cast<int>(edges.size()) - 1;
  incident_[a].push_back(id);
  incident_[b].push_back(id);
  return id;
}

void CliqueTreeForest::kill_clique(int id) {
  cliques[id].alive = false;
  for (int e : incident_[id]) edges[e].alive = false;
}

void CliqueTreeForest::kill_edge(int id) { edges[id].alive = false; }

std::vector<int> CliqueTreeForest::live_cliques() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(cliques.size()); ++i)
    if (cliques[i].alive) out.push_back(i);
  return out;
}

std::vector<int> CliqueTreeForest::live_edges() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(edges.size()); ++i)
    if (edges[i].alive) out.push_back(i);
  return out;
}

std::vector<int> CliqueTreeForest::edges_of(int clique) const {
  std::vector<int> out;
  for (int e : incident_[clique])
    if (edges[e].alive) out.push_back(e);
  return out;
}

std::vector<int> CliqueTreeForest::neighbors_of(int clique) const {
  std::vector<int> out;
  for (int e : edges_of(clique)) out.push_back(other_end(e, clique));
  std::sort(out.begin(), out.end());
  return out;
}

int CliqueTreeForest::other_end(int edge, int clique) const {
  return edges[edge].a == clique ? edges[edge].b : edges[edge].a;
}

std::vector<int> CliqueTreeForest::cliques_containing(int var) const {
  std::vector<int> out;
  for (int c : live_cliques())
    if (std::binary_search(cliques[c].scope.begin(), cliques[c].scope.end(), var))
      out.push_back(c);
  return out;
}

std::vector<int> CliqueTreeForest::vars() const {
  std::vector<int> out;
  for (int c : live_cliques())
    out.insert(out.end(), cliques[c].scope.begin(), cliques[c].scope.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::vector<int>> CliqueTreeForest::trees() const {
  std::vector<char> seen(cliques.size(), 0);
  std::vector<std::vector<int>> out;
  for (int start : live_cliques()) {
    if (seen[start]) continue;
    std::vector<int> component;
    std::deque<int> queue{start};
    seen[start] = 1;
    while (!queue.empty()) {
      const int c = queue.front();
      queue.pop_front();
      component.push_back(c);
      for (int n : neighbors_of(c)) {
        if (!seen[n]) {
          seen[n] = 1;
          queue.push_back(n);
        }
      }
    }
    std::sort(component.begin(), component.end());
    out.push_back(std::move(component));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& x, const auto& y) { return x.front() < y.front(); });
  return out;
}

int CliqueTreeForest::find_clique_containing(const std::vector<int>& vars) const {
  for (int c : live_cliques())
    if (subset(vars, cliques[c].scope)) return c;
  return -1;
}

void CliqueTreeForest::compact() {
  std::vector<int> clique_map(cliques.size(), -1);
  std::vector<Clique> new_cliques;
  for (std::size_t i = 0; i < cliques.size(); ++i) {
    if (!cliques[i].alive) continue;
    clique_map[i] = static_cast<int>(new_cliques.size());
    new_cliques.push_back(std::move(cliques[i]));
  }
  std::vector<SepEdge> new_edges;
  for (auto& e : edges) {
    if (!e.alive) continue;
    e.a = clique_map[e.a];
    e.b = clique_map[e.b];
    if (e.a > e.b) std::swap(e.a, e.b);
    new_edges.push_back(std::move(e));
  }
  cliques = std::move(new_cliques);
  edges = std::move(new_edges);
  incident_.assign(cliques.size(), {});
  for (int i = 0; i < static_cast<int>(edges.size()); ++i) {
    incident_[edges[i].a].push_back(i);
    incident_[edges[i].b].push_back(i);
  }
}

double clique_size(const std::vector<int>& scope, const std::vector<int>& cards) {
  double bits = 0.0;
  for (int v : scope) bits += std::log2(static_cast<double>(cards[v]));
  return bits;
}

double clique_size(const CliqueTreeForest& ctf, int clique) {
  return clique_size(ctf.cliques[clique].scope, ctf.cards);
}

ValidityReport check_valid(const CliqueTreeForest& ctf) {
  ValidityReport report;
  const auto live = ctf.live_cliques();

  // Forest acyclicity via union-find over live edges.
  std::vector<int> root(ctf.cliques.size());
  std::iota(root.begin(), root.end(), 0);
  auto find = [&](int v) {
    while (root[v] != v) v = root[v] = root[root[v]];
    return v;
  };
  for (int e : ctf.live_edges()) {
    const auto& edge = ctf.edges[e];
    if (!ctf.cliques[edge.a].alive || !ctf.cliques[edge.b].alive) {
      report.violations.push_back("edge " + std::to_string(e) +
                                  " touches a dead clique");
      continue;
    }
    if (find(edge.a) == find(edge.b))
      report.violations.push_back("edge " + std::to_string(e) +
                                  " closes a cycle");
    else
      root[find(edge.a)] = find(edge.b);

    const auto expected = intersect(ctf.cliques[edge.a].scope,
                                    ctf.cliques[edge.b].scope);
    if (edge.scope != expected)
      report.violations.push_back("edge " + std::to_string(e) +
                                  " sepset is not the clique intersection");
    if (subset(ctf.cliques[edge.a].scope, ctf.cliques[edge.b].scope))
      report.violations.push_back("clique " + std::to_string(edge.a) +
                                  " is contained in neighbor " +
                                  std::to_string(edge.b));
    else if (subset(ctf.cliques[edge.b].scope, ctf.cliques[edge.a].scope))
      report.violations.push_back("clique " + std::to_string(edge.b) +
                                  " is contained in neighbor " +
                                  std::to_string(edge.a));
  }

  // Running intersection: the cliques holding each variable must induce a
  // connected subtree (walking only edges whose sepset has the variable).
  for (int v : ctf.vars()) {
    const auto holders = ctf.cliques_containing(v);
    if (holders.size() <= 1) continue;
    std::set<int> holder_set(holders.begin(), holders.end());
    std::set<int> seen{holders.front()};
    std::deque<int> queue{holders.front()};
    while (!queue.empty()) {
      const int c = queue.front();
      queue.pop_front();
      for (int e : ctf.edges_of(c)) {
        if (!std::binary_search(ctf.edges[e].scope.begin(),
                                ctf.edges[e].scope.end(), v))
          continue;
        const int n = ctf.other_end(e, c);
        if (holder_set.count(n) && !seen.count(n)) {
          seen.insert(n);
          queue.push_back(n);
        }
      }
    }
    if (seen.size() != holder_set.size())
      report.violations.push_back("variable " + std::to_string(v) +
                                  " violates the running intersection property");
  }

  // Belief scopes must match clique scopes when present.
  for (int c : live) {
    if (ctf.cliques[c].belief &&
        ctf.cliques[c].belief->scope() != ctf.cliques[c].scope)
      report.violations.push_back("clique " + std::to_string(c) +
                                  " belief scope mismatch");
  }
  return report;
}

CalibrationReport check_max_calibrated(const CliqueTreeForest& ctf, double tol) {
  CalibrationReport report;
  for (int e : ctf.live_edges()) {
    const auto& edge = ctf.edges[e];
    double deviation = 0.0;
    if (!edge.belief || !ctf.cliques[edge.a].belief ||
        !ctf.cliques[edge.b].belief) {
      deviation = std::numeric_limits<double>::infinity();
    } else {
      for (int side : {edge.a, edge.b}) {
        const auto& clique = ctf.cliques[side];
        std::vector<int> out;
        std::set_difference(clique.scope.begin(), clique.scope.end(),
                            edge.scope.begin(), edge.scope.end(),
                            std::back_inserter(out));
        const Factor projected = max_marginalize(*clique.belief, out);
        for (std::size_t i = 0; i < projected.size(); ++i)
          deviation = std::max(deviation,
                               log_space_diff(projected.values()[i],
                                              edge.belief->values()[i]));
      }
    }
    report.max_deviation = std::max(report.max_deviation, deviation);
    if (deviation > tol) report.violations.push_back({e, deviation});
  }
  return report;
}

CliqueTreeForest minimal_connecting_subgraph(const CliqueTreeForest& ctf,
                                             const std::set<int>& vars) {
  CliqueTreeForest out = ctf;
  for (const auto& tree : out.trees()) {
    std::set<int> marked;
    for (int c : tree)
      for (int v : out.cliques[c].scope)
        if (vars.count(v)) {
          marked.insert(c);
          break;
        }
    if (marked.empty()) {
      for (int c : tree) out.kill_clique(c);
      continue;
    }
    // Prune unmarked leaves until only the Steiner subtree remains.
    std::deque<int> queue;
    for (int c : tree)
      if (!marked.count(c) && out.edges_of(c).size() <= 1) queue.push_back(c);
    while (!queue.empty()) {
      const int c = queue.front();
      queue.pop_front();
      if (!out.cliques[c].alive) continue;
      const auto nbrs = out.neighbors_of(c);
      out.kill_clique(c);
      for (int n : nbrs)
        if (!marked.count(n) && out.edges_of(n).size() <= 1) queue.push_back(n);
    }
  }
  return out;
}

void remove_nonmaximal_cliques(CliqueTreeForest& ctf) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (int e : ctf.live_edges()) {
      const auto& edge = ctf.edges[e];
      int inner = -1, outer = -1;
      if (subset(ctf.cliques[edge.a].scope, ctf.cliques[edge.b].scope)) {
        inner = edge.a;
        outer = edge.b;
      } else if (subset(ctf.cliques[edge.b].scope, ctf.cliques[edge.a].scope)) {
        inner = edge.b;
        outer = edge.a;
      } else {
        continue;
      }
      // Fold `inner` into `outer`: move factors, reattach other neighbors.
      auto& victim = ctf.cliques[inner];
      for (auto& f : victim.factors)
        ctf.cliques[outer].factors.push_back(std::move(f));
      victim.factors.clear();
      std::vector<int> reattach;
      for (int f : ctf.edges_of(inner))
        if (f != e) reattach.push_back(f);
      ctf.kill_clique(inner);
      for (int f : reattach) {
        // Retargeting the endpoint keeps the sepset scope and belief: by the
        // running intersection property the intersection with `outer` equals
        // the one with `inner`.
        SepEdge moved = ctf.edges[f];
        const int far = ctf.other_end(f, inner);
        const int id = ctf.add_edge(far, outer);
        assert(ctf.edges[id].scope == moved.scope);
        ctf.edges[id].belief = std::move(moved.belief);
      }
      changed = true;
      break;
    }
  }
}

void dump(const CliqueTreeForest& ctf, std::ostream& out) {
  for (int c : ctf.live_cliques()) {
    out << "clique " << c << " size " << clique_size(ctf, c) << " vars";
    for (int v : ctf.cliques[c].scope) out << " " << v;
    out << "\n";
  }
  for (int e : ctf.live_edges()) {
    out << "edge " << ctf.edges[e].a << " " << ctf.edges[e].b << " sep";
    for (int v : ctf.edges[e].scope) out << " " << v;
    out << "\n";
  }
}

std::string dump(const CliqueTreeForest& ctf) {
  std::ostringstream out;
  dump(ctf, out);
  return out.str();
}

}  // namespace ibia
