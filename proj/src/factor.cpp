/* This file is part of ibia-mpe, an approximate MPE engine for discrete
 * Bayesian networks.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 */
#include "ibia/factor.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "ibia/errors.hpp"

namespace ibia {

namespace {

std::size_t table_size(const std::vector<int>& cards) {
  std::size_t n = 1;
  for (int c : cards) n *= static_cast<std::size_t>(c);
  return n;
}

std::vector<std::size_t> row_major_strides(const std::vector<int>& cards) {
  std::vector<std::size_t> s(cards.size(), 1);
  for (std::size_t i = cards.size(); i-- > 1;)
    s[i - 1] = s[i] * static_cast<std::size_t>(cards[i]);
  return s;
}

// Odometer over `cards` that keeps aligned linear offsets into other tables.
// advance() increments the rightmost digit (row-major order).
struct Walker {
  explicit Walker(const std::vector<int>& cards)
      : cards(&cards), digits(cards.size(), 0) {}

  void track(std::vector<std::size_t> strides) {
    tracked_strides.push_back(std::move(strides));
    offsets.push_back(0);
  }

  void advance() {
    for (int j = static_cast<int>(digits.size()) - 1; j >= 0; --j) {
      ++digits[j];
      for (std::size_t t = 0; t < offsets.size(); ++t)
        offsets[t] += tracked_strides[t][j];
      if (digits[j] < (*cards)[j]) return;
      digits[j] = 0;
      for (std::size_t t = 0; t < offsets.size(); ++t)
        offsets[t] -= tracked_strides[t][j] * static_cast<std::size_t>((*cards)[j]);
    }
  }

  const std::vector<int>* cards;
  std::vector<int> digits;
  std::vector<std::vector<std::size_t>> tracked_strides;
  std::vector<std::size_t> offsets;
};

// Strides of `inner` variables expressed per position of `outer` scope;
// zero stride for outer variables absent from inner.
std::vector<std::size_t> aligned_strides(const std::vector<int>& outer_scope,
                                         const Factor& inner) {
  const auto inner_strides = inner.strides();
  std::vector<std::size_t> out(outer_scope.size(), 0);
  for (std::size_t i = 0; i < outer_scope.size(); ++i) {
    const int pos = inner.scope_index(outer_scope[i]);
    if (pos >= 0) out[i] = inner_strides[static_cast<std::size_t>(pos)];
  }
  return out;
}

}  // namespace

Factor::Factor(std::vector<int> scope, std::vector<int> cards,
               std::vector<double> log_values)
    : scope_(std::move(scope)),
      cards_(std::move(cards)),
      values_(std::move(log_values)) {
  assert(scope_.size() == cards_.size());
  assert(std::is_sorted(scope_.begin(), scope_.end()) &&
         std::adjacent_find(scope_.begin(), scope_.end()) == scope_.end());
  assert(values_.size() == table_size(cards_));
#ifndef NDEBUG
  for (double v : values_) assert(!std::isnan(v) && v != INFINITY);
#endif
}

Factor Factor::constant(double log_value) {
  return Factor({}, {}, {log_value});
}

Factor Factor::from_listed(const std::vector<int>& listed_scope,
                           const std::vector<int>& listed_cards,
                           const std::vector<double>& log_values) {
  assert(listed_scope.size() == listed_cards.size());
  const std::size_t k = listed_scope.size();

  std::vector<std::size_t> order(k);
  for (std::size_t i = 0; i < k; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return listed_scope[a] < listed_scope[b];
  });

  std::vector<int> scope(k), cards(k);
  for (std::size_t i = 0; i < k; ++i) {
    scope[i] = listed_scope[order[i]];
    cards[i] = listed_cards[order[i]];
  }

  // Stride of each listed position in the listed (source) layout.
  std::vector<std::size_t> src_strides(k, 1);
  for (std::size_t i = k; i-- > 1;)
    src_strides[i - 1] = src_strides[i] * static_cast<std::size_t>(listed_cards[i]);

  // Walk the destination table in row-major order tracking the source offset.
  std::vector<std::size_t> src_by_dest_pos(k);
  for (std::size_t i = 0; i < k; ++i) src_by_dest_pos[i] = src_strides[order[i]];

  std::vector<double> out(log_values.size());
  Walker w(cards);
  w.track(src_by_dest_pos);
  for (std::size_t i = 0; i < out.size(); ++i, w.advance())
    out[i] = log_values[w.offsets[0]];
  return Factor(std::move(scope), std::move(cards), std::move(out));
}

int Factor::card_of(int var) const {
  const int pos = scope_index(var);
  assert(pos >= 0);
  return cards_[static_cast<std::size_t>(pos)];
}

int Factor::scope_index(int var) const {
  const auto it = std::lower_bound(scope_.begin(), scope_.end(), var);
  if (it == scope_.end() || *it != var) return -1;
  return static_cast<int>(it - scope_.begin());
}

std::vector<std::size_t> Factor::strides() const {
  std::vector<std::size_t> s(scope_.size(), 1);
  for (std::size_t i = scope_.size(); i-- > 1;)
    s[i - 1] = s[i] * static_cast<std::size_t>(cards_[i]);
  return s;
}

double Factor::max_value() const {
  double best = kLogZero;
  for (double v : values_) best = std::max(best, v);
  return best;
}

double Factor::value_at(const Assignment& config) const {
  const auto s = strides();
  std::size_t off = 0;
  for (std::size_t i = 0; i < scope_.size(); ++i) {
    const int state = config.at(scope_[i]);
    assert(state >= 0 && state < cards_[i]);
    off += s[i] * static_cast<std::size_t>(state);
  }
  return values_[off];
}

Factor product(const Factor& a, const Factor& b) {
  std::vector<int> scope(a.scope());
  scope.insert(scope.end(), b.scope().begin(), b.scope().end());
  std::sort(scope.begin(), scope.end());
  scope.erase(std::unique(scope.begin(), scope.end()), scope.end());

  std::vector<int> cards(scope.size());
  for (std::size_t i = 0; i < scope.size(); ++i) {
    const int ca = a.in_scope(scope[i]) ? a.card_of(scope[i]) : 0;
    const int cb = b.in_scope(scope[i]) ? b.card_of(scope[i]) : 0;
    if (ca && cb && ca != cb)
      throw FactorError("conflicting cardinalities for variable " +
                        std::to_string(scope[i]) + ": " + std::to_string(ca) +
                        " vs " + std::to_string(cb));
    cards[i] = ca ? ca : cb;
  }

  std::vector<double> out(table_size(cards));
  Walker w(cards);
  w.track(aligned_strides(scope, a));
  w.track(aligned_strides(scope, b));
  const auto& va = a.values();
  const auto& vb = b.values();
  for (std::size_t i = 0; i < out.size(); ++i, w.advance())
    out[i] = va[w.offsets[0]] + vb[w.offsets[1]];
  return Factor(std::move(scope), std::move(cards), std::move(out));
}

Factor divide(const Factor& num, const Factor& den) {
  for (int v : den.scope())
    if (!num.in_scope(v))
      throw FactorError("divide: denominator variable " + std::to_string(v) +
                        " not in numerator scope");

  std::vector<double> out(num.size());
  Walker w(num.cards());
  w.track(aligned_strides(num.scope(), den));
  const auto& vn = num.values();
  const auto& vd = den.values();
  for (std::size_t i = 0; i < out.size(); ++i, w.advance()) {
    const double n = vn[i];
    const double d = vd[w.offsets[0]];
    if (n == kLogZero) {
      out[i] = kLogZero;  // 0/0 = 0 and 0/x = 0
    } else if (d == kLogZero) {
      throw FactorError("divide: finite value over zero support");
    } else {
      out[i] = n - d;
    }
  }
  return Factor(num.scope(), num.cards(), std::move(out));
}

Factor max_marginalize(const Factor& f, const std::vector<int>& out_vars) {
  if (out_vars.empty()) return f;
  std::vector<int> sorted_out(out_vars);
  std::sort(sorted_out.begin(), sorted_out.end());
#ifndef NDEBUG
  for (int v : sorted_out) assert(f.in_scope(v));
#endif

  std::vector<int> scope, cards;
  for (std::size_t i = 0; i < f.scope().size(); ++i) {
    if (!std::binary_search(sorted_out.begin(), sorted_out.end(), f.scope()[i])) {
      scope.push_back(f.scope()[i]);
      cards.push_back(f.cards()[i]);
    }
  }

  std::vector<double> out(table_size(cards), kLogZero);
  // Walk the source table; project each entry onto the destination offset.
  Walker w(f.cards());
  {
    const auto dstrides = row_major_strides(cards);
    std::vector<std::size_t> dest_by_src(f.scope().size(), 0);
    for (std::size_t i = 0; i < f.scope().size(); ++i) {
      const auto it = std::lower_bound(scope.begin(), scope.end(), f.scope()[i]);
      if (it != scope.end() && *it == f.scope()[i])
        dest_by_src[i] = dstrides[static_cast<std::size_t>(it - scope.begin())];
    }
    w.track(std::move(dest_by_src));
  }
  const auto& vf = f.values();
  for (std::size_t i = 0; i < vf.size(); ++i, w.advance())
    out[w.offsets[0]] = std::max(out[w.offsets[0]], vf[i]);
  return Factor(std::move(scope), std::move(cards), std::move(out));
}

Factor reduce(const Factor& f, const Assignment& known) {
  std::vector<int> scope, cards;
  const auto src_strides = f.strides();
  std::size_t base = 0;
  bool any = false;
  for (std::size_t i = 0; i < f.scope().size(); ++i) {
    if (known.contains(f.scope()[i])) {
      const int state = known.at(f.scope()[i]);
      assert(state >= 0 && state < f.cards()[i]);
      base += src_strides[i] * static_cast<std::size_t>(state);
      any = true;
    } else {
      scope.push_back(f.scope()[i]);
      cards.push_back(f.cards()[i]);
    }
  }
  if (!any) return f;

  std::vector<double> out(table_size(cards));
  Walker w(cards);
  {
    std::vector<std::size_t> kept(scope.size());
    for (std::size_t i = 0; i < scope.size(); ++i)
      kept[i] = src_strides[static_cast<std::size_t>(f.scope_index(scope[i]))];
    w.track(std::move(kept));
  }
  const auto& vf = f.values();
  for (std::size_t i = 0; i < out.size(); ++i, w.advance())
    out[i] = vf[base + w.offsets[0]];
  return Factor(std::move(scope), std::move(cards), std::move(out));
}

ArgmaxResult argmax(const Factor& f, Rng* rng) {
  assert(!f.scope().empty());
  const auto& v = f.values();
  std::size_t best = 0;
  double best_value = v[0];
  std::size_t tie_count = 1;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > best_value) {
      best = i;
      best_value = v[i];
      tie_count = 1;
    } else if (rng != nullptr && v[i] == best_value) {
      // Reservoir choice: uniform among maximizers in one pass.
      ++tie_count;
      if (rng_int(*rng, 0, static_cast<int>(tie_count) - 1) == 0) best = i;
    }
  }
  if (best_value == kLogZero)
    throw ZeroBelief("argmax over a table with zero support");

  ArgmaxResult result;
  result.log_value = best_value;
  const auto strides = f.strides();
  for (std::size_t i = 0; i < f.scope().size(); ++i) {
    const auto state = (best / strides[i]) % static_cast<std::size_t>(f.cards()[i]);
    result.states.set(f.scope()[i], static_cast<int>(state));
  }
  return result;
}

std::vector<double> values_in_order(const Factor& f,
                                    const std::vector<int>& listed_scope) {
  assert(listed_scope.size() == f.scope().size());
  std::vector<int> listed_cards(listed_scope.size());
  for (std::size_t i = 0; i < listed_scope.size(); ++i)
    listed_cards[i] = f.card_of(listed_scope[i]);

  const auto src = f.strides();
  std::vector<std::size_t> src_by_listed(listed_scope.size());
  for (std::size_t i = 0; i < listed_scope.size(); ++i)
    src_by_listed[i] =
        src[static_cast<std::size_t>(f.scope_index(listed_scope[i]))];

  std::vector<double> out(f.size());
  Walker w(listed_cards);
  w.track(std::move(src_by_listed));
  for (std::size_t i = 0; i < out.size(); ++i, w.advance())
    out[i] = f.values()[w.offsets[0]];
  return out;
}

double log_space_diff(double a, double b) {
  if (a == kLogZero && b == kLogZero) return 0.0;
  if (a == kLogZero || b == kLogZero)
    return std::numeric_limits<double>::infinity();
  return std::abs(a - b);
}

bool approx_equal(const Factor& a, const Factor& b, double tol) {
  if (a.scope() != b.scope() || a.cards() != b.cards()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (log_space_diff(a.values()[i], b.values()[i]) > tol) return false;
  return true;
}

}  // namespace ibia
