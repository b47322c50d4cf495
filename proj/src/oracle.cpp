/* This file is part of ibia-mpe, an approximate MPE engine for discrete
 * Bayesian networks.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 */
#include "ibia/oracle.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>

#include "ibia/errors.hpp"

namespace ibia {

namespace {

constexpr double kMaxOracleBits = 24.0;

// DFS maximization of a sum of log-space tables over free variables in
// ascending id order. Factors must already be reduced to free scopes; each
// one is added as soon as its last free variable is assigned, and -inf
// partial sums prune the subtree below. The first maximizer found is the
// lexicographically smallest one.
class Enumerator {
 public:
  Enumerator(std::vector<int> free_vars, std::vector<int> free_cards)
      : free_vars_(std::move(free_vars)),
        free_cards_(std::move(free_cards)),
        hooks_(free_vars_.size()) {}

  void add_factor(const Factor& f) {
    Hook hook{&f, {}};
    int last_depth = -1;
    const auto strides = f.strides();
    for (std::size_t i = 0; i < f.scope().size(); ++i) {
      const auto it = std::lower_bound(free_vars_.begin(), free_vars_.end(),
                                       f.scope()[i]);
      assert(it != free_vars_.end() && *it == f.scope()[i]);
      const int depth = static_cast<int>(it - free_vars_.begin());
      hook.entries.emplace_back(depth, strides[i]);
      last_depth = std::max(last_depth, depth);
    }
    if (last_depth < 0)
      base_ += f.values()[0];
    else
      hooks_[last_depth].push_back(std::move(hook));
  }

  std::pair<double, std::vector<int>> run() {
    states_.assign(free_vars_.size(), 0);
    best_ = kLogZero;
    best_states_.clear();
    if (base_ != kLogZero) dfs(0, base_);
    return {best_ == kLogZero ? kLogZero : best_, best_states_};
  }

  double base() const { return base_; }

 private:
  struct Hook {
    const Factor* factor;
    std::vector<std::pair<int, std::size_t>> entries;  // (depth, stride)
  };

  void dfs(std::size_t depth, double partial) {
    if (depth == free_vars_.size()) {
      if (partial > best_) {
        best_ = partial;
        best_states_ = states_;
      }
      return;
    }
    for (int s = 0; s < free_cards_[depth]; ++s) {
      states_[depth] = s;
      double value = partial;
      for (const Hook& hook : hooks_[depth]) {
        std::size_t off = 0;
        for (const auto& [d, stride] : hook.entries)
          off += stride * static_cast<std::size_t>(states_[d]);
        value += hook.factor->values()[off];
        if (value == kLogZero) break;
      }
      if (value == kLogZero) continue;
      dfs(depth + 1, value);
    }
  }

  std::vector<int> free_vars_;
  std::vector<int> free_cards_;
  std::vector<std::vector<Hook>> hooks_;
  double base_ = 0.0;
  std::vector<int> states_;
  std::vector<int> best_states_;
  double best_ = kLogZero;
};

void refuse_if_too_large(const std::vector<int>& free_vars,
                         const std::vector<int>& cards) {
  double bits = 0.0;
  for (int v : free_vars) bits += std::log2(static_cast<double>(cards[v]));
  if (bits > kMaxOracleBits + 1e-9)
    throw OracleRefusal("state space of " + std::to_string(bits) +
                        " bits exceeds the oracle cap of 24");
}

std::vector<int> topological_order(const DiscreteNetwork& net) {
  const int n = net.num_vars();
  std::vector<int> pending(n, 0);
  std::vector<std::vector<int>> children(n);
  for (int v = 0; v < n; ++v) {
    pending[v] = static_cast<int>(net.parents[v].size());
    for (int p : net.parents[v]) children[p].push_back(v);
  }
  std::vector<int> ready, order;
  for (int v = 0; v < n; ++v)
    if (pending[v] == 0) ready.push_back(v);
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
  assert(static_cast<int>(order.size()) == n);
  return order;
}

}  // namespace

BruteForceResult brute_force_mpe(const DiscreteNetwork& net,
                                 const Assignment& evidence) {
  const int n = net.num_vars();
  std::vector<int> free_vars, free_cards;
  for (int v = 0; v < n; ++v) {
    if (evidence.contains(v)) continue;
    free_vars.push_back(v);
    free_cards.push_back(net.cards[v]);
  }
  refuse_if_too_large(free_vars, net.cards);

  std::vector<Factor> reduced;
  reduced.reserve(n);
  for (int v = 0; v < n; ++v) reduced.push_back(reduce(net.cpds[v], evidence));
  Enumerator e(free_vars, free_cards);
  for (const auto& f : reduced) e.add_factor(f);
  const auto [value, states] = e.run();

  BruteForceResult result;
  result.log_value = value;
  result.assignment = evidence;
  if (value == kLogZero) return result;
  for (std::size_t i = 0; i < free_vars.size(); ++i)
    result.assignment.set(free_vars[i], states[i]);
  return result;
}

BruteForceResult brute_force_max(const SimplifiedNetwork& simplified) {
  refuse_if_too_large(simplified.unknown_vars, simplified.cards);
  std::vector<int> free_cards;
  for (int v : simplified.unknown_vars)
    free_cards.push_back(simplified.cards[v]);
  Enumerator e(simplified.unknown_vars, free_cards);
  for (const auto& family : simplified.families) e.add_factor(family.table);
  const auto [value, states] = e.run();

  BruteForceResult result;
  result.log_value = value;
  if (value == kLogZero) return result;
  for (std::size_t i = 0; i < simplified.unknown_vars.size(); ++i)
    result.assignment.set(simplified.unknown_vars[i], states[i]);
  return result;
}

Factor brute_force_max_marginal(const std::vector<Factor>& nums,
                                const std::vector<Factor>& dens,
                                const std::vector<int>& target_scope,
                                const std::vector<int>& cards) {
  std::vector<int> all_vars(target_scope);
  for (const auto& f : nums)
    all_vars.insert(all_vars.end(), f.scope().begin(), f.scope().end());
  for (const auto& f : dens)
    all_vars.insert(all_vars.end(), f.scope().begin(), f.scope().end());
  std::sort(all_vars.begin(), all_vars.end());
  all_vars.erase(std::unique(all_vars.begin(), all_vars.end()), all_vars.end());
  refuse_if_too_large(all_vars, cards);

  std::vector<int> target_cards;
  for (int v : target_scope) target_cards.push_back(cards[v]);
  std::size_t out_size = 1;
  for (int c : target_cards) out_size *= static_cast<std::size_t>(c);
  std::vector<double> out(out_size, kLogZero);
  std::vector<std::size_t> target_strides(target_cards.size(), 1);
  for (std::size_t i = target_cards.size(); i-- > 1;)
    target_strides[i - 1] =
        target_strides[i] * static_cast<std::size_t>(target_cards[i]);

  std::vector<int> states(all_vars.size(), 0);
  Assignment config;
  bool done = false;
  while (!done) {
    for (std::size_t i = 0; i < all_vars.size(); ++i)
      config.set(all_vars[i], states[i]);
    double value = 0.0;
    for (const auto& f : nums) {
      value += f.value_at(config);
      if (value == kLogZero) break;
    }
    if (value != kLogZero) {
      for (const auto& f : dens) {
        const double d = f.value_at(config);
        assert(d != kLogZero);  // calibrated inputs keep support aligned
        if (d == kLogZero) {    // 0/0 convention if it happens anyway
          value = kLogZero;
          break;
        }
        value -= d;
      }
    }
    std::size_t off = 0;
    for (std::size_t i = 0; i < target_scope.size(); ++i)
      off += target_strides[i] *
             static_cast<std::size_t>(config.at(target_scope[i]));
    out[off] = std::max(out[off], value);

    done = true;
    for (std::size_t j = all_vars.size(); j-- > 0;) {
      if (++states[j] < cards[all_vars[j]]) {
        done = false;
        break;
      }
      states[j] = 0;
    }
  }
  return Factor(target_scope, target_cards, std::move(out));
}

DiscreteNetwork random_network(int n_vars, int max_parents, int max_card,
                               double determinism_frac, std::uint64_t seed) {
  assert(n_vars >= 1 && max_parents >= 0 && max_card >= 2);
  Rng rng(seed);
  DiscreteNetwork net;
  net.cards.resize(n_vars);
  net.parents.resize(n_vars);
  net.cpds.resize(n_vars);
  for (int v = 0; v < n_vars; ++v) net.cards[v] = rng_int(rng, 2, max_card);

  for (int v = 0; v < n_vars; ++v) {
    const int np = rng_int(rng, 0, std::min(max_parents, v));
    std::vector<int> candidates(v);
    for (int i = 0; i < v; ++i) candidates[i] = i;
    rng_shuffle(rng, candidates);
    candidates.resize(np);
    std::sort(candidates.begin(), candidates.end());
    net.parents[v] = candidates;

    std::vector<int> listed(candidates);
    listed.push_back(v);
    std::vector<int> listed_cards;
    for (int u : listed) listed_cards.push_back(net.cards[u]);

    std::size_t n_columns = 1;
    for (int p : candidates) n_columns *= static_cast<std::size_t>(net.cards[p]);
    const int child_card = net.cards[v];
    std::vector<double> logs;
    logs.reserve(n_columns * static_cast<std::size_t>(child_card));
    for (std::size_t col = 0; col < n_columns; ++col) {
      if (rng_unit(rng) < determinism_frac) {
        const int hot = rng_int(rng, 0, child_card - 1);
        for (int s = 0; s < child_card; ++s)
          logs.push_back(s == hot ? 0.0 : kLogZero);
      } else {
        std::vector<double> column(child_card);
        double sum = 0.0;
        for (int s = 0; s < child_card; ++s) {
          column[s] = 0.05 + rng_unit(rng);
          sum += column[s];
        }
        for (int s = 0; s < child_card; ++s)
          logs.push_back(std::log(column[s] / sum));
      }
    }
    net.cpds[v] = Factor::from_listed(listed, listed_cards, logs);
  }
  return net;
}

Assignment sample_consistent_evidence(const DiscreteNetwork& net, int count,
                                      std::uint64_t seed) {
  Rng rng(seed);
  const int n = net.num_vars();
  Assignment sample;
  for (int v : topological_order(net)) {
    const Factor column = reduce(net.cpds[v], sample);
    assert(column.scope() == std::vector<int>{v});
    const double u = rng_unit(rng);
    double cumulative = 0.0;
    int chosen = net.cards[v] - 1;
    for (int s = 0; s < net.cards[v]; ++s) {
      const double lv = column.values()[s];
      cumulative += lv == kLogZero ? 0.0 : std::exp(lv);
      if (u < cumulative) {
        chosen = s;
        break;
      }
    }
    sample.set(v, chosen);
  }
  std::vector<int> ids(n);
  for (int v = 0; v < n; ++v) ids[v] = v;
  rng_shuffle(rng, ids);
  Assignment evidence;
  for (int i = 0; i < std::min(count, n); ++i)
    evidence.set(ids[i], sample.at(ids[i]));
  return evidence;
}

}  // namespace ibia
