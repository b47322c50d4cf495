/* This file is part of ibia-mpe, an approximate MPE engine for discrete
 * Bayesian networks.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 */
#include "ibia/approximate.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <utility>

#include "ibia/calibrate.hpp"
#include "ibia/errors.hpp"
#include "ibia/rng.hpp"

namespace ibia {

namespace {

constexpr double kSizeEps = 1e-9;

std::vector<int> erase_var(const std::vector<int>& scope, int v) {
  std::vector<int> out;
  for (int u : scope)
    if (u != v) out.push_back(u);
  return out;
}

}  // namespace

void exact_max_marginalize_var(CliqueTreeForest& ctf, int v, double mcs_im) {
  const std::vector<int> holders = ctf.cliques_containing(v);
  if (holders.empty()) return;

  if (holders.size() == 1) {
    const int c = holders[0];
    assert(ctf.cliques[c].belief.has_value());
    ctf.cliques[c].scope = erase_var(ctf.cliques[c].scope, v);
    ctf.cliques[c].belief = max_marginalize(*ctf.cliques[c].belief, {v});
    remove_nonmaximal_cliques(ctf);
    return;
  }

  // Collapse the subtree over the containing cliques into one clique.
  std::vector<int> union_scope;
  for (int c : holders)
    union_scope.insert(union_scope.end(), ctf.cliques[c].scope.begin(),
                       ctf.cliques[c].scope.end());
  std::sort(union_scope.begin(), union_scope.end());
  union_scope.erase(std::unique(union_scope.begin(), union_scope.end()),
                    union_scope.end());
  const std::vector<int> collapsed_scope = erase_var(union_scope, v);
  if (clique_size(collapsed_scope, ctf.cards) > mcs_im + kSizeEps)
    return;  // would overshoot the bound; leave v alone

  const std::set<int> holder_set(holders.begin(), holders.end());
  Factor joint;
  std::vector<int> internal_edges, boundary_edges;
  for (int c : holders) {
    assert(ctf.cliques[c].belief.has_value());
    joint = product(joint, *ctf.cliques[c].belief);
    for (int e : ctf.edges_of(c)) {
      if (holder_set.count(ctf.other_end(e, c))) {
        if (ctf.other_end(e, c) > c) internal_edges.push_back(e);
      } else {
        boundary_edges.push_back(e);
      }
    }
  }
  for (int e : internal_edges) {
    assert(ctf.edges[e].belief.has_value());
    joint = divide(joint, *ctf.edges[e].belief);
  }
  Factor collapsed_belief = max_marginalize(joint, {v});

  std::vector<std::pair<int, std::optional<Factor>>> reattach;
  for (int e : boundary_edges) {
    const int inside = holder_set.count(ctf.edges[e].a) ? ctf.edges[e].a
                                                        : ctf.edges[e].b;
    reattach.emplace_back(ctf.other_end(e, inside), ctf.edges[e].belief);
  }
  for (int c : holders) ctf.kill_clique(c);

  const int merged = ctf.add_clique(collapsed_scope);
  ctf.cliques[merged].belief = std::move(collapsed_belief);
  for (auto& [outside, belief] : reattach) {
    const int e = ctf.add_edge(outside, merged);
    ctf.edges[e].belief = std::move(belief);
    assert(!ctf.edges[e].scope.empty());
  }
  remove_nonmaximal_cliques(ctf);
}

bool local_max_marginalize_var(CliqueTreeForest& ctf, int v,
                               const std::set<int>& interface, double mcs_im) {
  const std::vector<int> holders = ctf.cliques_containing(v);
  if (holders.empty()) return false;
  const std::set<int> holder_set(holders.begin(), holders.end());

  // Connected components of the holders whose cliques all fit the bound.
  std::set<int> eligible;
  for (int c : holders)
    if (clique_size(ctf, c) <= mcs_im + kSizeEps) eligible.insert(c);
  std::vector<std::vector<int>> components;
  {
    std::set<int> seen;
    for (int start : eligible) {
      if (seen.count(start)) continue;
      std::vector<int> component, stack{start};
      seen.insert(start);
      while (!stack.empty()) {
        const int c = stack.back();
        stack.pop_back();
        component.push_back(c);
        for (int e : ctf.edges_of(c)) {
          const int n = ctf.other_end(e, c);
          if (eligible.count(n) && !seen.count(n)) {
            seen.insert(n);
            stack.push_back(n);
          }
        }
      }
      std::sort(component.begin(), component.end());
      components.push_back(std::move(component));
    }
  }

  // Retained subtree: most cliques, ties by smaller total clique size, then
  // by smaller first id.
  std::vector<int> retained;
  double retained_size = 0.0;
  for (const auto& component : components) {
    double total = 0.0;
    for (int c : component) total += clique_size(ctf, c);
    const bool better =
        component.size() > retained.size() ||
        (component.size() == retained.size() &&
         (total < retained_size - kSizeEps ||
          (std::abs(total - retained_size) <= kSizeEps && !retained.empty() &&
           component.front() < retained.front())));
    if (retained.empty() || better) {
      retained = component;
      retained_size = total;
    }
  }
  const std::set<int> retained_set(retained.begin(), retained.end());

  std::vector<int> removal;
  for (int c : holders)
    if (!retained_set.count(c)) removal.push_back(c);
  if (removal.empty()) return false;

  if (retained.empty() && interface.count(v))
    return false;  // an interface variable must stay somewhere

  // The tree must stay connected: no sepset may become empty.
  for (int c : removal)
    for (int e : ctf.edges_of(c))
      if (holder_set.count(ctf.other_end(e, c)) &&
          ctf.edges[e].scope == std::vector<int>{v})
        return false;

  const std::set<int> removal_set(removal.begin(), removal.end());
  for (int c : removal) {
    ctf.cliques[c].scope = erase_var(ctf.cliques[c].scope, v);
    ctf.cliques[c].belief = max_marginalize(*ctf.cliques[c].belief, {v});
  }
  for (int e : ctf.live_edges()) {
    if (!removal_set.count(ctf.edges[e].a) && !removal_set.count(ctf.edges[e].b))
      continue;
    if (!std::binary_search(ctf.edges[e].scope.begin(), ctf.edges[e].scope.end(),
                            v))
      continue;
    ctf.edges[e].scope = erase_var(ctf.edges[e].scope, v);
    ctf.edges[e].belief = max_marginalize(*ctf.edges[e].belief, {v});
  }
  remove_nonmaximal_cliques(ctf);
  return true;
}

CliqueTreeForest approximate_ctf(const CliqueTreeForest& ctf_in,
                                 const std::set<int>& interface,
                                 const ApproxConfig& cfg) {
  assert(cfg.mcs_im >= 1.0);
  CliqueTreeForest ctf = minimal_connecting_subgraph(ctf_in, interface);

  std::vector<int> niv;
  for (int v : ctf.vars())
    if (!interface.count(v)) niv.push_back(v);

  // Exact phase. First the variables confined to a single clique, then
  // subtree collapses where the merged clique fits the bound.
  for (int v : niv)
    if (ctf.cliques_containing(v).size() == 1)
      exact_max_marginalize_var(ctf, v, cfg.mcs_im);
  for (int v : niv)
    if (ctf.cliques_containing(v).size() > 1)
      exact_max_marginalize_var(ctf, v, cfg.mcs_im);

  // Local phase over variables of the oversized cliques, non-interface
  // variables first.
  auto oversized = [&]() {
    std::vector<int> out;
    for (int c : ctf.live_cliques())
      if (clique_size(ctf, c) > cfg.mcs_im + kSizeEps) out.push_back(c);
    return out;
  };
  std::set<int> candidates_niv, candidates_iv;
  for (int c : oversized())
    for (int v : ctf.cliques[c].scope)
      (interface.count(v) ? candidates_iv : candidates_niv).insert(v);

  Rng rng(cfg.tie_seed);
  std::vector<int> random_order;
  if (cfg.priority == ApproxConfig::Priority::unprioritized_random) {
    std::vector<int> shuffled_niv(candidates_niv.begin(), candidates_niv.end());
    std::vector<int> shuffled_iv(candidates_iv.begin(), candidates_iv.end());
    rng_shuffle(rng, shuffled_niv);
    rng_shuffle(rng, shuffled_iv);
    random_order = shuffled_niv;
    random_order.insert(random_order.end(), shuffled_iv.begin(),
                        shuffled_iv.end());
  }

  std::size_t random_next = 0;
  while (!oversized().empty() &&
         (!candidates_niv.empty() || !candidates_iv.empty())) {
    int v = -1;
    if (cfg.priority == ApproxConfig::Priority::unprioritized_random) {
      v = random_order[random_next++];
    } else {
      // The candidate present in the fewest live cliques; ties by id.
      auto& pool = candidates_niv.empty() ? candidates_iv : candidates_niv;
      std::size_t best_count = 0;
      for (int u : pool) {
        const std::size_t count = ctf.cliques_containing(u).size();
        if (v < 0 || count < best_count) {
          v = u;
          best_count = count;
        }
      }
    }
    candidates_niv.erase(v);
    candidates_iv.erase(v);
    local_max_marginalize_var(ctf, v, interface, cfg.mcs_im);
  }

  reparameterize(ctf);
  return ctf;
}

void reparameterize(CliqueTreeForest& ctf) {
  for (const auto& tree : ctf.trees()) {
    const int root = tree_root(ctf, tree);
    const TreeOrder order = preorder(ctf, tree, root);
    for (std::size_t i = 0; i < order.order.size(); ++i) {
      const int c = order.order[i];
      assert(ctf.cliques[c].belief.has_value());
      Factor factor = *ctf.cliques[c].belief;
      if (order.parent_edge[i] >= 0) {
        assert(ctf.edges[order.parent_edge[i]].belief.has_value());
        factor = divide(factor, *ctf.edges[order.parent_edge[i]].belief);
      }
      ctf.cliques[c].factors.clear();
      ctf.cliques[c].factors.push_back(std::move(factor));
    }
  }
}

}  // namespace ibia
