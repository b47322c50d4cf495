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

#include "ibia/clique_tree.hpp"

namespace ibia {

/// Max-marginalizes the clique belief onto the sepset scope of the edge.
Factor max_message(const CliqueTreeForest& ctf, int clique, int edge);

/// Two-pass max-product belief propagation per tree. Clique beliefs are
/// (re)initialized from the assigned factors, sepset beliefs start at log 1
/// and messages apply the divide-by-previous-sepset update, so repeated
/// calibration is a fixed point. Throws ZeroBelief when a clique's initial
/// belief is identically -inf.
void calibrate(CliqueTreeForest& ctf);

/// Root used for message passing and re-parameterization: the live clique
/// with the largest id in its tree.
int tree_root(const CliqueTreeForest& ctf, const std::vector<int>& tree);

/// Pre-order traversal of a tree from the root; parent_edge[i] is the edge
/// connecting order[i] to its parent (-1 for the root).
struct TreeOrder {
  std::vector<int> order;
  std::vector<int> parent_edge;
};
TreeOrder preorder(const CliqueTreeForest& ctf, const std::vector<int>& tree,
                   int root);

}  // namespace ibia
