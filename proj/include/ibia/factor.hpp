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

#include <cstddef>
#include <limits>
#include <vector>

#include "ibia/assignment.hpp"
#include "ibia/rng.hpp"

namespace ibia {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// Log-space dense table over a sorted scope of variable ids. The table is
/// row-major in scope order (last scope variable varies fastest). Exact zeros
/// are the -inf sentinel; NaN never appears. Factors are immutable values.
class Factor {
 public:
  /// The multiplicative identity: empty scope, single entry log(1) = 0.
  Factor() : values_(1, 0.0) {}

  /// Scope must be strictly ascending; values.size() must equal the product
  /// of cardinalities.
  Factor(std::vector<int> scope, std::vector<int> cards,
         std::vector<double> log_values);

  /// A scalar factor (empty scope).
  static Factor constant(double log_value);

  /// Builds from a table listed over an arbitrary scope order (row-major,
  /// last listed variable fastest), reordering into the sorted-scope layout.
  static Factor from_listed(const std::vector<int>& listed_scope,
                            const std::vector<int>& listed_cards,
                            const std::vector<double>& log_values);

  const std::vector<int>& scope() const { return scope_; }
  const std::vector<int>& cards() const { return cards_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  bool scalar() const { return scope_.empty(); }

  int card_of(int var) const;
  int scope_index(int var) const;  // -1 when absent
  bool in_scope(int var) const { return scope_index(var) >= 0; }

  /// Strides of the row-major layout, aligned with scope().
  std::vector<std::size_t> strides() const;

  double max_value() const;

  /// Value at a full configuration of the scope (assignment must cover it).
  double value_at(const Assignment& config) const;

  bool operator==(const Factor& other) const = default;

 private:
  std::vector<int> scope_;
  std::vector<int> cards_;
  std::vector<double> values_;
};

/// Log-space product: scope is the union, entries are sums of aligned
/// entries. Throws FactorError on conflicting cardinalities.
Factor product(const Factor& a, const Factor& b);

/// Log-space division with the 0/0 = 0 convention (-inf minus -inf is -inf).
/// Requires scope(den) to be a subset of scope(num); a finite numerator over
/// a -inf denominator throws FactorError (a calibration bug upstream).
Factor divide(const Factor& num, const Factor& den);

/// Maximizes out the given variables (which must be in scope).
Factor max_marginalize(const Factor& f, const std::vector<int>& out);

/// Slices the table at the known states; scope shrinks by scope-and-known.
Factor reduce(const Factor& f, const Assignment& known);

struct ArgmaxResult {
  Assignment states;
  double log_value = kLogZero;
};

/// Returns a configuration attaining the maximum entry. Ties go to the
/// lowest linear index; with an rng, to a uniform choice among maximizers.
/// Throws ZeroBelief when every entry is -inf.
ArgmaxResult argmax(const Factor& f, Rng* rng = nullptr);

/// Log values re-laid-out row-major over an arbitrary listed order of the
/// scope (the inverse of Factor::from_listed).
std::vector<double> values_in_order(const Factor& f,
                                    const std::vector<int>& listed_scope);

/// |a - b| treating two -inf as equal and one-sided -inf as infinite.
double log_space_diff(double a, double b);

/// Scopes, cardinalities equal and all entries within tol (log_space_diff).
bool approx_equal(const Factor& a, const Factor& b, double tol);

}  // namespace ibia
