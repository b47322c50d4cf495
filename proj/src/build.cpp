/* This file is part of ibia-mpe, an approximate MPE engine for discrete
 * Bayesian networks.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 */
#include "ibia/build.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <map>
#include <numeric>

#include "ibia/errors.hpp"

namespace ibia {

namespace {

constexpr double kSizeEps = 1e-9;

bool subset(const std::vector<int>& a, const std::vector<int>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

BuildState::BuildState(std::vector<int> cards)
    : ctf_(std::move(cards)),
      adj_(ctf_.cards.size()),
      present_(ctf_.cards.size(), 0) {}

BuildState BuildState::resume(const CliqueTreeForest& ctf) {
  BuildState state(ctf.cards);
  state.ctf_ = ctf;
  for (int c : ctf.live_cliques()) {
    const auto& scope = ctf.cliques[c].scope;
    for (std::size_t i = 0; i < scope.size(); ++i) {
      state.present_[scope[i]] = 1;
      for (std::size_t j = i + 1; j < scope.size(); ++j) {
        state.adj_[scope[i]].insert(scope[j]);
        state.adj_[scope[j]].insert(scope[i]);
      }
    }
  }
  return state;
}

std::vector<int> BuildState::present_vars() const {
  std::vector<int> out;
  for (int v = 0; v < static_cast<int>(present_.size()); ++v)
    if (present_[v]) out.push_back(v);
  return out;
}

std::vector<int> BuildState::impacted_cliques(const std::vector<int>& vars) const {
  std::set<int> marked;
  for (int v : vars)
    for (int c : ctf_.cliques_containing(v)) marked.insert(c);
  if (marked.empty()) return {};

  std::set<int> impacted;
  for (const auto& tree : ctf_.trees()) {
    bool touches = false;
    for (int c : tree)
      if (marked.count(c)) {
        touches = true;
        break;
      }
    if (!touches) continue;
    // Steiner closure: prune unmarked leaves of the tree until none remain.
    std::set<int> kept(tree.begin(), tree.end());
    std::map<int, int> degree;
    for (int c : tree) degree[c] = static_cast<int>(ctf_.edges_of(c).size());
    std::deque<int> queue;
    for (int c : tree)
      if (!marked.count(c) && degree[c] <= 1) queue.push_back(c);
    while (!queue.empty()) {
      const int c = queue.front();
      queue.pop_front();
      if (!kept.count(c)) continue;
      kept.erase(c);
      for (int e : ctf_.edges_of(c)) {
        const int n = ctf_.other_end(e, c);
        if (!kept.count(n)) continue;
        if (--degree[n] <= 1 && !marked.count(n)) queue.push_back(n);
      }
    }
    impacted.insert(kept.begin(), kept.end());
  }
  return std::vector<int>(impacted.begin(), impacted.end());
}

bool BuildState::add_family(const Family& family, double mcs_p) {
  assert(family.child < 0 || !present_[family.child]);
  if (clique_size(family.scope, ctf_.cards) > mcs_p + kSizeEps) return false;

  // Fast path: the whole scope already sits inside one clique.
  const int home = ctf_.find_clique_containing(family.scope);
  if (home >= 0) {
    ctf_.cliques[home].factors.push_back(family.table);
    return true;
  }

  // Variables whose cliques the splice will replace: the present part of the
  // family scope.
  std::vector<int> present_scope;
  for (int v : family.scope)
    if (present_[v]) present_scope.push_back(v);

  const std::vector<int> impacted = impacted_cliques(present_scope);

  std::vector<int> region(family.scope);
  for (int c : impacted)
    region.insert(region.end(), ctf_.cliques[c].scope.begin(),
                  ctf_.cliques[c].scope.end());
  std::sort(region.begin(), region.end());
  region.erase(std::unique(region.begin(), region.end()), region.end());

  // Induced graph over the region plus the family's moral edges.
  std::vector<std::set<int>> local(adj_.size());
  for (int u : region)
    for (int w : adj_[u])
      if (std::binary_search(region.begin(), region.end(), w))
        local[u].insert(w);
  for (std::size_t i = 0; i < family.scope.size(); ++i)
    for (std::size_t j = i + 1; j < family.scope.size(); ++j) {
      local[family.scope[i]].insert(family.scope[j]);
      local[family.scope[j]].insert(family.scope[i]);
    }

  const Triangulation tri = triangulate_minfill(region, local);
  for (const auto& clique : tri.cliques)
    if (clique_size(clique, ctf_.cards) > mcs_p + kSizeEps) return false;

  // Commit. Record the moral and fill edges in the chordal graph.
  for (std::size_t i = 0; i < family.scope.size(); ++i)
    for (std::size_t j = i + 1; j < family.scope.size(); ++j) {
      adj_[family.scope[i]].insert(family.scope[j]);
      adj_[family.scope[j]].insert(family.scope[i]);
    }
  for (const auto& [u, w] : tri.fill_edges) {
    adj_[u].insert(w);
    adj_[w].insert(u);
  }
  for (int v : family.scope) present_[v] = 1;

  // Collect displaced factors and boundary edges, then drop the old cliques.
  std::vector<Factor> displaced;
  struct Boundary {
    int outside;
    std::vector<int> sepset;
  };
  std::vector<Boundary> boundary;
  const std::set<int> impacted_set(impacted.begin(), impacted.end());
  for (int c : impacted) {
    for (auto& f : ctf_.cliques[c].factors) displaced.push_back(std::move(f));
    ctf_.cliques[c].factors.clear();
    for (int e : ctf_.edges_of(c)) {
      const int n = ctf_.other_end(e, c);
      if (!impacted_set.count(n))
        boundary.push_back({n, ctf_.edges[e].scope});
    }
  }
  for (int c : impacted) ctf_.kill_clique(c);

  std::vector<int> new_ids;
  for (const auto& scope : tri.cliques) new_ids.push_back(ctf_.add_clique(scope));
  for (const auto& [i, j] : tri.tree_edges) ctf_.add_edge(new_ids[i], new_ids[j]);
  for (const auto& b : boundary) {
    int target = -1;
    for (std::size_t i = 0; i < tri.cliques.size() && target < 0; ++i)
      if (subset(b.sepset, tri.cliques[i])) target = new_ids[i];
    assert(target >= 0);
    const int e = ctf_.add_edge(b.outside, target);
    assert(ctf_.edges[e].scope == b.sepset);
    (void)e;
  }

  displaced.push_back(family.table);
  for (auto& f : displaced) {
    const int target = ctf_.find_clique_containing(f.scope());
    assert(target >= 0);
    ctf_.cliques[target].factors.push_back(std::move(f));
  }

  remove_nonmaximal_cliques(ctf_);
#ifndef NDEBUG
  assert(check_valid(ctf_).ok());
#endif
  return true;
}

PartitionBuildResult build_partition(BuildState& state,
                                     std::vector<Family>& pending,
                                     double mcs_p) {
  PartitionBuildResult result;
  bool progress = true;
  while (progress) {
    progress = false;
    for (auto it = pending.begin(); it != pending.end();) {
      if (clique_size(it->scope, state.cards()) > mcs_p + kSizeEps)
        throw InfeasibleBound(
            "a single family needs a clique of size " +
            std::to_string(clique_size(it->scope, state.cards())) +
            " which exceeds the bound " + std::to_string(mcs_p) +
            "; rerun with a larger bound");
      bool ready = true;
      for (int v : it->scope)
        if (v != it->child && !state.present(v)) ready = false;
      if (ready && state.add_family(*it, mcs_p)) {
        if (it->child >= 0) result.added_vars.push_back(it->child);
        ++result.families_added;
        it = pending.erase(it);
        progress = true;
      } else {
        ++it;
      }
    }
  }
  return result;
}

Triangulation triangulate_minfill(const std::vector<int>& vars,
                                  const std::vector<std::set<int>>& adj) {
  Triangulation out;
  if (vars.empty()) return out;

  std::map<int, std::set<int>> work;
  for (int v : vars) {
    work[v] = {};
    for (int w : adj[v])
      if (std::binary_search(vars.begin(), vars.end(), w)) work[v].insert(w);
  }

  std::vector<std::vector<int>> elimination;
  while (!work.empty()) {
    // Min-fill: the variable whose neighborhood needs the fewest new edges;
    // ties break to the smallest id.
    int best = -1;
    long best_fill = -1;
    for (const auto& [v, nbrs] : work) {
      long fill = 0;
      for (auto i = nbrs.begin(); i != nbrs.end(); ++i) {
        auto j = i;
        for (++j; j != nbrs.end(); ++j)
          if (!work.at(*i).count(*j)) ++fill;
      }
      if (best < 0 || fill < best_fill) {
        best = v;
        best_fill = fill;
      }
    }

    auto nbrs = work.at(best);
    std::vector<int> clique(nbrs.begin(), nbrs.end());
    clique.push_back(best);
    std::sort(clique.begin(), clique.end());
    elimination.push_back(std::move(clique));

    for (auto i = nbrs.begin(); i != nbrs.end(); ++i) {
      auto j = i;
      for (++j; j != nbrs.end(); ++j) {
        if (!work.at(*i).count(*j)) {
          work.at(*i).insert(*j);
          work.at(*j).insert(*i);
          out.fill_edges.emplace_back(std::min(*i, *j), std::max(*i, *j));
        }
      }
    }
    for (int n : nbrs) work.at(n).erase(best);
    work.erase(best);
  }

  // Keep maximal elimination cliques only, in lexicographic order.
  std::sort(elimination.begin(), elimination.end());
  elimination.erase(std::unique(elimination.begin(), elimination.end()),
                    elimination.end());
  for (std::size_t i = 0; i < elimination.size(); ++i) {
    bool contained = false;
    for (std::size_t j = 0; j < elimination.size() && !contained; ++j)
      if (i != j && elimination[i].size() < elimination[j].size() &&
          subset(elimination[i], elimination[j]))
        contained = true;
    if (!contained) out.cliques.push_back(elimination[i]);
  }

  // Junction forest: maximum-weight spanning forest over sepset sizes
  // (Kruskal, deterministic tie order).
  struct Candidate {
    int weight;
    int a;
    int b;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < out.cliques.size(); ++i)
    for (std::size_t j = i + 1; j < out.cliques.size(); ++j) {
      std::vector<int> sep;
      std::set_intersection(out.cliques[i].begin(), out.cliques[i].end(),
                            out.cliques[j].begin(), out.cliques[j].end(),
                            std::back_inserter(sep));
      if (!sep.empty())
        candidates.push_back({static_cast<int>(sep.size()),
                              static_cast<int>(i), static_cast<int>(j)});
    }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& x, const Candidate& y) {
              if (x.weight != y.weight) return x.weight > y.weight;
              if (x.a != y.a) return x.a < y.a;
              return x.b < y.b;
            });
  std::vector<int> root(out.cliques.size());
  std::iota(root.begin(), root.end(), 0);
  std::function<int(int)> find = [&](int v) {
    while (root[v] != v) v = root[v] = root[root[v]];
    return v;
  };
  for (const auto& c : candidates) {
    if (find(c.a) == find(c.b)) continue;
    root[find(c.a)] = find(c.b);
    out.tree_edges.emplace_back(c.a, c.b);
  }
  return out;
}

}  // namespace ibia
