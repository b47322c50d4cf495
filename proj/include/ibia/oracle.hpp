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

#include "ibia/network.hpp"

namespace ibia {

struct BruteForceResult {
  Assignment assignment;  // complete (evidence included)
  double log_value = kLogZero;
};

/// Exhaustive enumeration of every non-evidence configuration; ties break to
/// the lexicographically smallest configuration. Refuses state spaces above
/// 2^24 (OracleRefusal).
BruteForceResult brute_force_mpe(const DiscreteNetwork& net,
                                 const Assignment& evidence);

/// Maximum of the product of the remaining families over the unknown
/// variables (log space, excluding log_constant). Same 2^24 cap.
BruteForceResult brute_force_max(const SimplifiedNetwork& simplified);

/// Max-marginal of prod(nums)/prod(dens) onto target_scope by enumeration
/// over the union of all scopes. Same 2^24 cap.
Factor brute_force_max_marginal(const std::vector<Factor>& nums,
                                const std::vector<Factor>& dens,
                                const std::vector<int>& target_scope,
                                const std::vector<int>& cards);

/// Seeded random DAG with normalized CPDs; determinism_frac of the CPD
/// columns are made one-hot. Parent ids are always below the child id.
DiscreteNetwork random_network(int n_vars, int max_parents, int max_card,
                               double determinism_frac, std::uint64_t seed);

/// A consistent evidence assignment drawn by ancestral sampling, restricted
/// to `count` seeded-random variables (never more than n).
Assignment sample_consistent_evidence(const DiscreteNetwork& net, int count,
                                      std::uint64_t seed);

}  // namespace ibia
