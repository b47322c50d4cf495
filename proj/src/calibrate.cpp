/* This file is part of ibia-mpe, an approximate MPE engine for discrete
 * Bayesian networks.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 */
#include "ibia/calibrate.hpp"

#include <algorithm>
#include <cassert>
#include <set>
#include <utility>

#include "ibia/errors.hpp"

namespace ibia {

Factor max_message(const CliqueTreeForest& ctf, int clique, int edge) {
  const auto& c = ctf.cliques[clique];
  assert(c.belief.has_value());
  std::vector<int> out;
  std::set_difference(c.scope.begin(), c.scope.end(),
                      ctf.edges[edge].scope.begin(), ctf.edges[edge].scope.end(),
                      std::back_inserter(out));
  return max_marginalize(*c.belief, out);
}

int tree_root(const CliqueTreeForest& ctf, const std::vector<int>& tree) {
  (void)ctf;
  assert(!tree.empty());
  return *std::max_element(tree.begin(), tree.end());
}

TreeOrder preorder(const CliqueTreeForest& ctf, const std::vector<int>& tree,
                   int root) {
  TreeOrder out;
  std::vector<int> stack{root};
  std::vector<int> stack_edges{-1};
  std::set<int> seen;
  while (!stack.empty()) {
    const int c = stack.back();
    const int via = stack_edges.back();
    stack.pop_back();
    stack_edges.pop_back();
    if (seen.count(c)) continue;
    seen.insert(c);
    out.order.push_back(c);
    out.parent_edge.push_back(via);
    // Push children in descending id so they pop in ascending order.
    std::vector<std::pair<int, int>> children;  // (clique, edge)
    for (int e : ctf.edges_of(c)) {
      const int n = ctf.other_end(e, c);
      if (!seen.count(n)) children.emplace_back(n, e);
    }
    std::sort(children.begin(), children.end());
    for (auto it = children.rbegin(); it != children.rend(); ++it) {
      stack.push_back(it->first);
      stack_edges.push_back(it->second);
    }
  }
  assert(out.order.size() == tree.size());
  return out;
}

void calibrate(CliqueTreeForest& ctf) {
  // Beliefs are a pure function of structure and assigned factors.
  for (int c : ctf.live_cliques()) {
    Factor belief;
    for (const auto& f : ctf.cliques[c].factors) belief = product(belief, f);
    // Expand to the full clique scope so the belief covers every variable.
    if (belief.scope() != ctf.cliques[c].scope) {
      std::vector<int> missing;
      std::set_difference(ctf.cliques[c].scope.begin(),
                          ctf.cliques[c].scope.end(), belief.scope().begin(),
                          belief.scope().end(), std::back_inserter(missing));
      std::vector<int> cards;
      for (int v : missing) cards.push_back(ctf.cards[v]);
      std::size_t n = 1;
      for (int card : cards) n *= static_cast<std::size_t>(card);
      belief = product(belief,
                       Factor(missing, cards, std::vector<double>(n, 0.0)));
    }
    if (belief.max_value() == kLogZero)
      throw ZeroBelief("initial belief of clique " + std::to_string(c) +
                       " is identically zero (inconsistent evidence)");
    ctf.cliques[c].belief = std::move(belief);
  }
  for (int e : ctf.live_edges()) {
    std::vector<int> cards;
    for (int v : ctf.edges[e].scope) cards.push_back(ctf.cards[v]);
    std::size_t n = 1;
    for (int card : cards) n *= static_cast<std::size_t>(card);
    ctf.edges[e].belief =
        Factor(ctf.edges[e].scope, cards, std::vector<double>(n, 0.0));
  }

  for (const auto& tree : ctf.trees()) {
    const int root = tree_root(ctf, tree);
    const TreeOrder order = preorder(ctf, tree, root);

    // Upward pass: children before parents.
    for (std::size_t i = order.order.size(); i-- > 1;) {
      const int c = order.order[i];
      const int e = order.parent_edge[i];
      const int parent = ctf.other_end(e, c);
      Factor message = max_message(ctf, c, e);
      ctf.cliques[parent].belief =
          product(*ctf.cliques[parent].belief,
                  divide(message, *ctf.edges[e].belief));
      ctf.edges[e].belief = std::move(message);
    }
    // Downward pass: parents before children.
    for (std::size_t i = 1; i < order.order.size(); ++i) {
      const int c = order.order[i];
      const int e = order.parent_edge[i];
      const int parent = ctf.other_end(e, c);
      Factor message = max_message(ctf, parent, e);
      ctf.cliques[c].belief = product(
          *ctf.cliques[c].belief, divide(message, *ctf.edges[e].belief));
      ctf.edges[e].belief = std::move(message);
    }
  }
}

}  // namespace ibia
