/* This file is part of ibia-mpe, an approximate MPE engine for discrete
 * Bayesian networks.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 */
#include "ibia/mpe.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>

#include "ibia/calibrate.hpp"
#include "ibia/errors.hpp"

namespace ibia {

namespace {

void check_deadline(const Deadline& deadline, const Assignment& partial) {
  if (deadline && std::chrono::steady_clock::now() > *deadline)
    throw TimedOut(partial);
}

std::set<int> interface_vars(const BuildState& state,
                             const std::vector<Family>& pending) {
  std::set<int> interface;
  for (const auto& family : pending)
    for (int v : family.scope)
      if (state.present(v)) interface.insert(v);
  return interface;
}

double tree_max_belief(const CliqueTreeForest& ctf,
                       const std::vector<int>& tree) {
  double best = kLogZero;
  for (int c : tree) {
    assert(ctf.cliques[c].belief.has_value());
    best = std::max(best, ctf.cliques[c].belief->max_value());
  }
  return best;
}

}  // namespace

std::vector<std::vector<Family>> group_families(const SimplifiedNetwork& s) {
  const int n = static_cast<int>(s.cards.size());
  std::vector<int> root(n);
  std::iota(root.begin(), root.end(), 0);
  std::function<int(int)> find = [&](int v) {
    while (root[v] != v) v = root[v] = root[root[v]];
    return v;
  };
  for (const auto& family : s.families)
    for (std::size_t i = 1; i < family.scope.size(); ++i)
      root[find(family.scope[i - 1])] = find(family.scope[i]);

  std::map<int, std::vector<Family>> groups;  // keyed by smallest member
  std::map<int, int> group_key;
  for (const auto& family : s.families) {
    const int r = find(family.scope.front());
    if (!group_key.count(r)) {
      int smallest = family.scope.front();
      for (int v = 0; v < n; ++v)
        if (find(v) == r) {
          smallest = v;
          break;
        }
      group_key[r] = smallest;
    }
    groups[group_key[r]].push_back(family);
  }
  std::vector<std::vector<Family>> out;
  for (auto& [key, families] : groups) out.push_back(std::move(families));
  return out;
}

PartitionSequence run_ibia(const std::vector<Family>& families,
                           const std::vector<int>& cards, double mcs_p,
                           const ApproxConfig& cfg, const Deadline& deadline,
                           std::vector<std::string>* trace) {
  assert(!families.empty());
  PartitionSequence seq;
  double mcs_im = cfg.mcs_im;
  BuildState state(cards);
  std::vector<Family> pending = families;

  while (!pending.empty() || seq.parts.empty()) {
    check_deadline(deadline, {});
    const PartitionBuildResult built = build_partition(state, pending, mcs_p);

    if (built.families_added == 0) {
      // The approximated seed leaves no room; tighten the soft constraint
      // and re-approximate from the saved calibrated forest.
      assert(!seq.parts.empty());
      mcs_im -= 1.0;
      ++seq.retries;
      if (trace)
        trace->push_back("retry mcs_im " +
                         std::to_string(static_cast<int>(mcs_im)));
      if (mcs_im < 2.0)
        throw InfeasibleBound(
            "cannot admit any further family even at the mcs_im floor of 2; "
            "rerun with a larger mcs_p");
      ApproxConfig tighter = cfg;
      tighter.mcs_im = mcs_im;
      tighter.tie_seed =
          cfg.tie_seed + 7919 * static_cast<std::uint64_t>(seq.parts.size()) +
          static_cast<std::uint64_t>(seq.retries);
      const CliqueTreeForest redone = approximate_ctf(
          seq.parts.back().ctf, interface_vars(state, pending), tighter);
      state = BuildState::resume(redone);
      continue;
    }

    check_deadline(deadline, {});
    calibrate(state.ctf());

    Partition part;
    part.ctf = state.ctf();
    part.added_vars = built.added_vars;
    for (int c : part.ctf.live_cliques()) {
      ++part.n_cliques;
      part.max_clique_size =
          std::max(part.max_clique_size, clique_size(part.ctf, c));
      part.peak_belief_entries =
          std::max(part.peak_belief_entries, part.ctf.cliques[c].belief->size());
    }
    if (trace) {
      char line[96];
      std::snprintf(line, sizeof(line),
                    "partition %zu cliques %d max_size %.2f added %zu",
                    seq.parts.size() + 1, part.n_cliques, part.max_clique_size,
                    part.added_vars.size());
      trace->push_back(line);
    }
    seq.parts.push_back(std::move(part));
    if (pending.empty()) break;

    ApproxConfig step = cfg;
    step.mcs_im = mcs_im;
    step.tie_seed =
        cfg.tie_seed + 7919 * static_cast<std::uint64_t>(seq.parts.size());
    const CliqueTreeForest approx = approximate_ctf(
        seq.parts.back().ctf, interface_vars(state, pending), step);
    state = BuildState::resume(approx);
  }
  seq.mcs_im_final = mcs_im;
  return seq;
}

Assignment traceback(const CliqueTreeForest& ctf, const Assignment& known,
                     Rng* rng) {
  Assignment assignment = known;
  for (const auto& tree : ctf.trees()) {
    const double tree_max = tree_max_belief(ctf, tree);

    // Root: a clique attaining the tree maximum, preferring more unassigned
    // variables; ties by id (or a seeded choice when an rng is supplied).
    std::vector<int> candidates;
    for (int c : tree)
      if (log_space_diff(ctf.cliques[c].belief->max_value(), tree_max) <= 1e-9)
        candidates.push_back(c);
    assert(!candidates.empty());
    int root = candidates.front();
    if (rng != nullptr) {
      root = candidates[static_cast<std::size_t>(
          rng_int(*rng, 0, static_cast<int>(candidates.size()) - 1))];
    } else {
      std::size_t best_unassigned = 0;
      bool first = true;
      for (int c : candidates) {
        std::size_t unassigned = 0;
        for (int v : ctf.cliques[c].scope)
          if (!assignment.contains(v)) ++unassigned;
        if (first || unassigned > best_unassigned) {
          root = c;
          best_unassigned = unassigned;
          first = false;
        }
      }
    }

    const TreeOrder order = preorder(ctf, tree, root);
    for (int c : order.order) {
      const auto& clique = ctf.cliques[c];
      bool any_unassigned = false;
      for (int v : clique.scope)
        if (!assignment.contains(v)) any_unassigned = true;
      if (!any_unassigned) continue;
      const Factor reduced = reduce(*clique.belief, assignment);
      try {
        const ArgmaxResult r = argmax(reduced, rng);
        assignment.merge(r.states);
      } catch (const ZeroBelief&) {
        throw DeadEndDecode(c, assignment);
      }
    }
  }
  return assignment;
}

double find_max_marg(const std::vector<PartitionSequence>& components,
                     double log_constant) {
  double total = log_constant;
  for (const auto& comp : components) {
    assert(!comp.parts.empty());
    const auto& ctf = comp.parts.back().ctf;
    for (const auto& tree : ctf.trees()) total += tree_max_belief(ctf, tree);
  }
  return total;
}

namespace {

void run_iteration_loop(const DiscreteNetwork& net, double mcs_p,
                        const ApproxConfig& cfg, const Deadline& deadline,
                        int n, Assignment& known, MpeResult& result) {
  while (true) {
    check_deadline(deadline, known);
    SimplifiedNetwork s;
    try {
      s = simplify(net, known);
    } catch (const ZeroProbabilityEvidence&) {
      // Decoded states from an earlier iteration contradict a CPD; the run
      // is stuck on a zero-probability track.
      throw DeadEndDecode(-1, known);
    }
    known.merge(s.known);  // pick up promoted deterministic states
    if (s.unknown_vars.empty()) break;

    ++result.iterations;
    const int iter = result.iterations;
    const auto components = group_families(s);

    std::vector<PartitionSequence> sequences;
    for (std::size_t k = 0; k < components.size(); ++k) {
      ApproxConfig comp_cfg = cfg;
      comp_cfg.tie_seed = cfg.tie_seed + 1009 * static_cast<std::uint64_t>(k) +
                          104729 * static_cast<std::uint64_t>(iter);
      sequences.push_back(run_ibia(components[k], s.cards, mcs_p, comp_cfg,
                                   deadline, &result.trace));
    }

    if (iter == 1)
      result.log_maxmarg_estimate = find_max_marg(sequences, s.log_constant);

    int iteration_max_parts = 0;
    for (std::size_t k = 0; k < sequences.size(); ++k) {
      const auto& seq = sequences[k];
      iteration_max_parts =
          std::max(iteration_max_parts, static_cast<int>(seq.parts.size()));
      for (const auto& part : seq.parts)
        result.peak_belief_entries =
            std::max(result.peak_belief_entries, part.peak_belief_entries);

      const CliqueTreeForest& last = seq.parts.back().ctf;
      Rng tie_rng(cfg.tie_seed + 104729 * static_cast<std::uint64_t>(iter) +
                  1009 * static_cast<std::uint64_t>(k));
      Rng* rng = cfg.priority == ApproxConfig::Priority::unprioritized_random
                     ? &tie_rng
                     : nullptr;
      Assignment partial;
      try {
        partial = traceback(last, {}, rng);
      } catch (const DeadEndDecode&) {
        // One retry with a different seed and root before giving up.
        result.trace.push_back("decode retry iter " + std::to_string(iter) +
                               " component " + std::to_string(k));
        Rng retry_rng(cfg.tie_seed + 104729 * static_cast<std::uint64_t>(iter) +
                      1009 * static_cast<std::uint64_t>(k) + 1);
        try {
          partial = traceback(last, {}, &retry_rng);
        } catch (const DeadEndDecode& e) {
          Assignment merged = known;
          merged.merge(e.partial);
          throw DeadEndDecode(e.clique_id, std::move(merged));
        }
      }
      const std::size_t before = known.size();
      known.merge(partial);
      assert(known.size() > before);
      (void)before;
    }
    result.max_partitions = std::max(result.max_partitions, iteration_max_parts);

    IterationStat stat;
    stat.iteration = iter;
    stat.components = static_cast<int>(components.size());
    stat.max_partitions = iteration_max_parts;
    stat.assigned_after = static_cast<int>(known.size());
    result.iteration_stats.push_back(stat);
    result.trace.push_back(
        "iter " + std::to_string(iter) + " components " +
        std::to_string(components.size()) + " partitions " +
        std::to_string(iteration_max_parts) + " assigned " +
        std::to_string(known.size()) + " of " + std::to_string(n));
  }
}

MpeResult run_iterations(const DiscreteNetwork& net, const Assignment& evidence,
                         double mcs_p, const ApproxConfig& cfg,
                         const Deadline& deadline) {
  MpeResult result;
  Assignment known = evidence;
  const int n = net.num_vars();

  try {
    run_iteration_loop(net, mcs_p, cfg, deadline, n, known, result);
  } catch (TimedOut& t) {
    t.partial = known;
    t.trace = result.trace;
    throw;
  }

  assert(static_cast<int>(known.size()) == n);
  result.assignment = known;
  result.log_mpe = evaluate_assignment(net, known);
  return result;
}

// Deterministic completion once decoding is stuck: walk the DAG in
// topological order and take the locally best state given what is already
// fixed. The outcome is an honest zero-probability assignment.
MpeResult greedy_zero_completion(const DiscreteNetwork& net,
                                 const Assignment& partial,
                                 MpeResult result) {
  Assignment known = partial;
  std::vector<int> order;
  {
    const int n = net.num_vars();
    std::vector<int> pending(n, 0);
    std::vector<std::vector<int>> children(n);
    std::vector<int> ready;
    for (int v = 0; v < n; ++v) {
      pending[v] = static_cast<int>(net.parents[v].size());
      for (int p : net.parents[v]) children[p].push_back(v);
      if (!pending[v]) ready.push_back(v);
    }
    std::sort(ready.begin(), ready.end());
    while (!ready.empty()) {
      const int v = ready.front();
      ready.erase(ready.begin());
      order.push_back(v);
      bool added = false;
      for (int c : children[v])
        if (--pending[c] == 0) {
          ready.push_back(c);
          added = true;
        }
      if (added) std::sort(ready.begin(), ready.end());
    }
  }
  for (int v : order) {
    if (known.contains(v)) continue;
    const Factor f = reduce(net.cpds[v], known);
    assert(f.scope() == std::vector<int>{v});
    int state = 0;
    double best = kLogZero;
    for (std::size_t s = 0; s < f.size(); ++s)
      if (f.values()[s] > best) {
        best = f.values()[s];
        state = static_cast<int>(s);
      }
    known.set(v, state);
  }
  result.assignment = known;
  result.log_mpe = evaluate_assignment(net, known);
  result.dead_end_completed = true;
  result.trace.push_back("greedy zero-probability completion");
  return result;
}

}  // namespace

MpeResult infer_mpe(const DiscreteNetwork& net, const Assignment& evidence,
                    double mcs_p, const ApproxConfig& cfg,
                    double time_limit_seconds) {
  Deadline deadline;
  if (time_limit_seconds > 0.0)
    deadline = std::chrono::steady_clock::now() +
               std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                   std::chrono::duration<double>(time_limit_seconds));

  Assignment best_partial = evidence;
  MpeResult carried;
  try {
    simplify(net, evidence);
  } catch (const ZeroProbabilityEvidence& e) {
    // The evidence itself admits no positive-probability completion; still
    // return a definite (zero-probability) assignment.
    carried.trace.push_back("inconsistent evidence: " + std::string(e.what()));
    return greedy_zero_completion(net, evidence, std::move(carried));
  }
  for (int attempt = 0; attempt < 2; ++attempt) {
    ApproxConfig attempt_cfg = cfg;
    if (attempt == 1) {
      attempt_cfg.priority = ApproxConfig::Priority::unprioritized_random;
      attempt_cfg.tie_seed = cfg.tie_seed + 1000003;
      carried.trace.push_back("restart with unprioritized-random ordering");
    }
    try {
      MpeResult result = run_iterations(net, evidence, mcs_p, attempt_cfg,
                                        deadline);
      result.trace.insert(result.trace.begin(), carried.trace.begin(),
                          carried.trace.end());
      return result;
    } catch (const DeadEndDecode& e) {
      carried.trace.push_back("dead end: " + std::string(e.what()));
      best_partial = e.partial;
      best_partial.merge(evidence);
    }
  }
  return greedy_zero_completion(net, best_partial, std::move(carried));
}

double evaluate_assignment(const DiscreteNetwork& net, const Assignment& full) {
  double total = 0.0;
  for (int v = 0; v < net.num_vars(); ++v) {
    total += net.cpds[v].value_at(full);
    if (total == kLogZero) return kLogZero;
  }
  return total;
}

DeltaMetrics delta_metrics(const MpeResult& result, double exact_log) {
  DeltaMetrics out;
  out.delta_maxmarg = result.log_maxmarg_estimate - exact_log;
  out.delta_mpe =
      result.log_mpe == kLogZero ? kLogZero : result.log_mpe - exact_log;
  return out;
}

}  // namespace ibia
