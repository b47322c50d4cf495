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

#include <map>

namespace ibia {

/// Partial or complete mapping variable id -> state index. Ordered so that
/// iteration (and everything derived from it) is deterministic.
class Assignment {
 public:
  Assignment() = default;

  bool contains(int var) const { return states_.count(var) != 0; }
  int at(int var) const { return states_.at(var); }
  void set(int var, int state) { states_[var] = state; }
  void erase(int var) { states_.erase(var); }

  std::size_t size() const { return states_.size(); }
  bool empty() const { return states_.empty(); }

  /// Adds every entry of `other`; existing entries are overwritten.
  void merge(const Assignment& other) {
    for (const auto& [var, state] : other.states_) states_[var] = state;
  }

  const std::map<int, int>& states() const { return states_; }

  bool operator==(const Assignment& other) const = default;

 private:
  std::map<int, int> states_;
};

}  // namespace ibia
