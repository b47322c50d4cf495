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

#include <cstdint>
#include <set>

#include "ibia/clique_tree.hpp"

namespace ibia {

struct ApproxConfig {
  enum class Priority {
    fewest_cliques,        // next variable = in the fewest cliques, ties by id
    unprioritized_random,  // seeded shuffle, no clique-count priority
  };

  double mcs_im = 15.0;
  std::uint64_t tie_seed = 0;
  Priority priority = Priority::fewest_cliques;
};

/// Shrinks a calibrated forest towards clique sizes <= mcs_im by exact and
/// local max-marginalization of non-interface variables (interface ones only
/// as a last resort, and never out of their final clique), then re-assigns
/// clique factors from the calibrated beliefs. The result is valid and
/// max-calibrated; the size bound is best effort. Trees without interface
/// variables are dropped.
CliqueTreeForest approximate_ctf(const CliqueTreeForest& ctf_in,
                                 const std::set<int>& interface,
                                 const ApproxConfig& cfg);

/// Removes `v` from the forest exactly: a single containing clique just
/// shrinks; a multi-clique subtree is collapsed into one clique with belief
/// max over v of (prod beliefs / prod sepsets), skipped when the collapsed
/// clique would exceed mcs_im. Joint beliefs over the rest are preserved.
void exact_max_marginalize_var(CliqueTreeForest& ctf, int v, double mcs_im);

/// Removes `v` from every clique outside the largest connected subtree of
/// its cliques whose members all fit mcs_im. Aborts (returning false) when
/// that would empty a sepset, or when v is interface and no subtree fits.
bool local_max_marginalize_var(CliqueTreeForest& ctf, int v,
                               const std::set<int>& interface, double mcs_im);

/// Per tree: the root keeps its belief as its only factor; every other
/// clique gets belief / sepset-towards-parent. The factor product then
/// equals prod(beliefs) / prod(sepsets).
void reparameterize(CliqueTreeForest& ctf);

}  // namespace ibia
