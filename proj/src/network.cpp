/* This file is part of ibia-mpe, an approximate MPE engine for discrete
 * Bayesian networks.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 */
#include "ibia/network.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>

#include "ibia/errors.hpp"

namespace ibia {

namespace {

// Whitespace tokenizer that remembers the line of the last token, so parse
// errors can name it.
class Tokenizer {
 public:
  explicit Tokenizer(std::istream& in) : in_(in) {}

  bool next(std::string& token) {
    token.clear();
    int c;
    while ((c = in_.get()) != EOF) {
      if (c == '\n') ++line_;
      if (!std::isspace(c)) break;
    }
    if (c == EOF) return false;
    token_line_ = line_;
    token.push_back(static_cast<char>(c));
    while ((c = in_.get()) != EOF && !std::isspace(c))
      token.push_back(static_cast<char>(c));
    if (c == '\n') ++line_;
    return true;
  }

  int expect_int(const char* what, long min_value, long max_value) {
    std::string tok = expect(what);
    std::size_t used = 0;
    long value = 0;
    try {
      value = std::stol(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size())
      throw ParseError(std::string("expected ") + what + ", got '" + tok + "'",
                       token_line_);
    if (value < min_value || value > max_value)
      throw ParseError(std::string(what) + " out of range: " + tok, token_line_);
    return static_cast<int>(value);
  }

  double expect_double(const char* what) {
    std::string tok = expect(what);
    std::size_t used = 0;
    double value = 0;
    try {
      value = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size())
      throw ParseError(std::string("expected ") + what + ", got '" + tok + "'",
                       token_line_);
    return value;
  }

  std::string expect(const char* what) {
    std::string tok;
    if (!next(tok))
      throw ParseError(std::string("unexpected end of input, expected ") + what,
                       line_);
    return tok;
  }

  bool at_end() {
    std::string tok;
    return !next(tok);
  }

  int line() const { return token_line_; }

 private:
  std::istream& in_;
  int line_ = 1;
  int token_line_ = 1;
};

std::vector<double> to_log(const std::vector<double>& linear) {
  std::vector<double> out(linear.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = linear[i] == 0.0 ? kLogZero : std::log(linear[i]);
  return out;
}

void check_acyclic(const std::vector<std::vector<int>>& parents, int err_line) {
  const int n = static_cast<int>(parents.size());
  std::vector<int> pending(n, 0);
  std::vector<std::vector<int>> children(n);
  std::deque<int> ready;
  for (int v = 0; v < n; ++v) {
    pending[v] = static_cast<int>(parents[v].size());
    for (int p : parents[v]) children[p].push_back(v);
    if (pending[v] == 0) ready.push_back(v);
  }
  int seen = 0;
  while (!ready.empty()) {
    const int v = ready.front();
    ready.pop_front();
    ++seen;
    for (int c : children[v])
      if (--pending[c] == 0) ready.push_back(c);
  }
  if (seen != n)
    throw ParseError("parent structure contains a directed cycle", err_line);
}

std::string format_double(double linear) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", linear);
  return buf;
}

}  // namespace

std::vector<std::string> DiscreteNetwork::validate(double tol) const {
  std::vector<std::string> issues;
  const int n = num_vars();
  for (int v = 0; v < n; ++v) {
    if (cards[v] < 1)
      issues.push_back("variable " + std::to_string(v) + " has cardinality < 1");
    std::vector<int> expected(parents[v]);
    expected.push_back(v);
    std::sort(expected.begin(), expected.end());
    if (cpds[v].scope() != expected) {
      issues.push_back("CPD scope of variable " + std::to_string(v) +
                       " does not match {v} + parents");
      continue;
    }
    // Row sums over the child for every parent configuration.
    std::vector<int> parent_scope(parents[v]);
    std::sort(parent_scope.begin(), parent_scope.end());
    std::size_t configs = 1;
    for (int p : parent_scope) configs *= static_cast<std::size_t>(cards[p]);
    for (std::size_t pc = 0; pc < configs; ++pc) {
      Assignment parent_states;
      std::size_t rest = pc;
      for (std::size_t i = parent_scope.size(); i-- > 0;) {
        parent_states.set(parent_scope[i],
                          static_cast<int>(rest % cards[parent_scope[i]]));
        rest /= static_cast<std::size_t>(cards[parent_scope[i]]);
      }
      const Factor column = reduce(cpds[v], parent_states);
      double sum = 0.0;
      for (double lv : column.values())
        sum += lv == kLogZero ? 0.0 : std::exp(lv);
      if (std::abs(sum - 1.0) > tol)
        issues.push_back("CPD of variable " + std::to_string(v) +
                         " does not normalize (sum " + std::to_string(sum) +
                         ") for a parent configuration");
    }
  }
  try {
    check_acyclic(parents, 0);
  } catch (const ParseError&) {
    issues.push_back("parent structure contains a directed cycle");
  }
  return issues;
}

DiscreteNetwork parse_uai(std::istream& in) {
  Tokenizer tok(in);
  const std::string preamble = tok.expect("preamble");
  if (preamble != "BAYES")
    throw ParseError("preamble must be BAYES, got '" + preamble + "'",
                     tok.line());

  const int n = tok.expect_int("variable count", 1, 1 << 24);
  DiscreteNetwork net;
  net.cards.resize(n);
  for (int v = 0; v < n; ++v)
    net.cards[v] = tok.expect_int("cardinality", 1, 1 << 24);

  const int nfuncs = tok.expect_int("function count", 0, 1 << 24);
  if (nfuncs != n)
    throw ParseError("BAYES network must have one CPD per variable (" +
                         std::to_string(n) + " vars, " + std::to_string(nfuncs) +
                         " functions)",
                     tok.line());

  std::vector<std::vector<int>> listed_scopes(n);
  std::vector<int> child_of_function(n, -1);
  std::vector<int> function_of_child(n, -1);
  for (int f = 0; f < n; ++f) {
    const int k = tok.expect_int("scope size", 1, n);
    listed_scopes[f].resize(k);
    for (int i = 0; i < k; ++i)
      listed_scopes[f][i] = tok.expect_int("variable id", 0, n - 1);
    std::vector<int> sorted(listed_scopes[f]);
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ParseError("function scope repeats a variable", tok.line());
    // Last listed variable is the child.
    const int child = listed_scopes[f].back();
    child_of_function[f] = child;
    if (function_of_child[child] != -1)
      throw ParseError("variable " + std::to_string(child) +
                           " is the child of two CPDs",
                       tok.line());
    function_of_child[child] = f;
  }

  net.parents.resize(n);
  net.cpds.resize(n);
  for (int f = 0; f < n; ++f) {
    std::size_t expected = 1;
    std::vector<int> listed_cards(listed_scopes[f].size());
    for (std::size_t i = 0; i < listed_scopes[f].size(); ++i) {
      listed_cards[i] = net.cards[listed_scopes[f][i]];
      expected *= static_cast<std::size_t>(listed_cards[i]);
    }
    const int count = tok.expect_int("table size", 1, 1 << 28);
    if (static_cast<std::size_t>(count) != expected)
      throw ParseError("table size " + std::to_string(count) +
                           " does not match scope state count " +
                           std::to_string(expected),
                       tok.line());
    std::vector<double> linear(expected);
    for (std::size_t i = 0; i < expected; ++i) {
      linear[i] = tok.expect_double("table entry");
      if (linear[i] < 0.0)
        throw ParseError("negative probability", tok.line());
    }
    const int child = child_of_function[f];
    net.parents[child] = std::vector<int>(listed_scopes[f].begin(),
                                          listed_scopes[f].end() - 1);
    net.cpds[child] = Factor::from_listed(listed_scopes[f], listed_cards,
                                          to_log(linear));
  }
  check_acyclic(net.parents, tok.line());
  return net;
}

DiscreteNetwork parse_uai(const std::string& text) {
  std::istringstream stream(text);
  return parse_uai(stream);
}

DiscreteNetwork parse_uai_file(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) throw Error("cannot open model file: " + path);
  return parse_uai(stream);
}

std::string serialize_uai(const DiscreteNetwork& net) {
  std::ostringstream out;
  const int n = net.num_vars();
  out << "BAYES\n" << n << "\n";
  for (int v = 0; v < n; ++v) out << net.cards[v] << (v + 1 < n ? " " : "\n");
  out << n << "\n";
  for (int v = 0; v < n; ++v) {
    out << net.parents[v].size() + 1;
    for (int p : net.parents[v]) out << " " << p;
    out << " " << v << "\n";
  }
  for (int v = 0; v < n; ++v) {
    std::vector<int> listed(net.parents[v]);
    listed.push_back(v);
    const auto logs = values_in_order(net.cpds[v], listed);
    out << "\n" << logs.size() << "\n";
    for (std::size_t i = 0; i < logs.size(); ++i) {
      if (i) out << " ";
      out << format_double(logs[i] == kLogZero ? 0.0 : std::exp(logs[i]));
    }
    out << "\n";
  }
  return out.str();
}

Assignment parse_evidence(std::istream& in, const DiscreteNetwork& net) {
  Tokenizer tok(in);
  const int k = tok.expect_int("evidence count", 0, net.num_vars());
  Assignment evidence;
  for (int i = 0; i < k; ++i) {
    const int var = tok.expect_int("evidence variable", 0, net.num_vars() - 1);
    const int state = tok.expect_int("evidence state", 0, 1 << 24);
    if (state >= net.cards[var])
      throw ParseError("state " + std::to_string(state) +
                           " out of range for variable " + std::to_string(var),
                       tok.line());
    if (evidence.contains(var))
      throw ParseError("duplicate evidence variable " + std::to_string(var),
                       tok.line());
    evidence.set(var, state);
  }
  return evidence;
}

Assignment parse_evidence(const std::string& text, const DiscreteNetwork& net) {
  std::istringstream stream(text);
  return parse_evidence(stream, net);
}

Assignment parse_evidence_file(const std::string& path,
                               const DiscreteNetwork& net) {
  std::ifstream stream(path);
  if (!stream) throw Error("cannot open evidence file: " + path);
  return parse_evidence(stream, net);
}

std::string serialize_evidence(const Assignment& evidence) {
  std::ostringstream out;
  out << evidence.size();
  for (const auto& [var, state] : evidence.states())
    out << " " << var << " " << state;
  out << "\n";
  return out.str();
}

SimplifiedNetwork simplify(const DiscreteNetwork& net, const Assignment& known0) {
  const int n = net.num_vars();
  SimplifiedNetwork result;
  result.cards = net.cards;
  result.known = known0;
  for (const auto& [var, state] : known0.states()) {
    if (var < 0 || var >= n)
      throw Error("known variable " + std::to_string(var) + " out of range");
    if (state < 0 || state >= net.cards[var])
      throw Error("known state out of range for variable " + std::to_string(var));
  }

  // Promote parentless deterministic CPDs to known states, to a fixed point.
  bool changed = true;
  while (changed) {
    changed = false;
    for (int v = 0; v < n; ++v) {
      if (result.known.contains(v)) continue;
      Factor f = reduce(net.cpds[v], result.known);
      if (f.scope() != std::vector<int>{v}) continue;
      int finite = 0, state = -1;
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (f.values()[i] != kLogZero) {
          ++finite;
          state = static_cast<int>(i);
        }
      }
      if (finite == 1) {
        result.known.set(v, state);
        changed = true;
      }
    }
  }

  // Emit residual factors of known variables and reduced CPDs of the rest.
  std::vector<Family> cpd_families(n);
  std::vector<Family> residuals;
  for (int v = 0; v < n; ++v) {
    const Factor f = reduce(net.cpds[v], result.known);
    if (result.known.contains(v)) {
      if (f.scalar()) {
        if (f.values()[0] == kLogZero)
          throw ZeroProbabilityEvidence(
              "known state of variable " + std::to_string(v) +
              " has zero probability under its reduced CPD");
        result.log_constant += f.values()[0];
      } else {
        if (f.max_value() == kLogZero)
          throw ZeroProbabilityEvidence(
              "known state of variable " + std::to_string(v) +
              " has zero probability under its reduced CPD");
        Family family;
        family.child = -1;
        family.scope = f.scope();
        family.table = f;
        residuals.push_back(std::move(family));
      }
    } else {
      result.unknown_vars.push_back(v);
      Family family;
      family.child = v;
      family.scope = f.scope();
      family.table = f;
      cpd_families[v] = std::move(family);
    }
  }

  // Admission order: topological over the remaining DAG, ties by id; each
  // residual follows the last of its scope variables.
  std::vector<int> topo_pos(n, -1);
  {
    std::vector<int> pending(n, 0);
    std::vector<std::vector<int>> children(n);
    for (int v : result.unknown_vars) {
      for (int p : net.parents[v]) {
        if (result.known.contains(p)) continue;
        ++pending[v];
        children[p].push_back(v);
      }
    }
    std::vector<int> ready;
    for (int v : result.unknown_vars)
      if (pending[v] == 0) ready.push_back(v);
    std::sort(ready.begin(), ready.end());
    int pos = 0;
    while (!ready.empty()) {
      const int v = ready.front();
      ready.erase(ready.begin());
      topo_pos[v] = pos++;
      std::vector<int> next;
      for (int c : children[v])
        if (--pending[c] == 0) next.push_back(c);
      std::sort(next.begin(), next.end());
      // Keep the ready list sorted so ties always break by id.
      ready.insert(ready.end(), next.begin(), next.end());
      std::sort(ready.begin(), ready.end());
    }
  }

  struct Keyed {
    double key;
    int tie;
    Family family;
  };
  std::vector<Keyed> ordered;
  for (int v : result.unknown_vars)
    ordered.push_back({static_cast<double>(topo_pos[v]), v,
                       std::move(cpd_families[v])});
  for (auto& r : residuals) {
    int last = 0;
    for (int v : r.scope) last = std::max(last, topo_pos[v]);
    ordered.push_back({last + 0.5, r.scope.front(), std::move(r)});
  }
  std::sort(ordered.begin(), ordered.end(), [](const Keyed& a, const Keyed& b) {
    return a.key != b.key ? a.key < b.key : a.tie < b.tie;
  });
  for (auto& k : ordered) result.families.push_back(std::move(k.family));
  return result;
}

std::vector<std::vector<int>> connected_dag_components(const DiscreteNetwork& net) {
  const int n = net.num_vars();
  std::vector<int> root(n);
  std::iota(root.begin(), root.end(), 0);
  std::function<int(int)> find = [&](int v) {
    while (root[v] != v) v = root[v] = root[root[v]];
    return v;
  };
  for (int v = 0; v < n; ++v)
    for (int p : net.parents[v]) root[find(p)] = find(v);

  std::map<int, std::vector<int>> groups;
  for (int v = 0; v < n; ++v) groups[find(v)].push_back(v);
  std::vector<std::vector<int>> out;
  for (auto& [key, members] : groups) out.push_back(std::move(members));
  return out;
}

std::vector<NetworkComponent> split_components(const DiscreteNetwork& net) {
  std::vector<NetworkComponent> out;
  for (const auto& group : connected_dag_components(net)) {
    NetworkComponent comp;
    comp.orig_ids = group;
    std::map<int, int> to_new;
    for (std::size_t i = 0; i < group.size(); ++i)
      to_new[group[i]] = static_cast<int>(i);
    comp.net.cards.resize(group.size());
    comp.net.parents.resize(group.size());
    comp.net.cpds.resize(group.size());
    for (std::size_t i = 0; i < group.size(); ++i) {
      const int v = group[i];
      comp.net.cards[i] = net.cards[v];
      for (int p : net.parents[v]) comp.net.parents[i].push_back(to_new.at(p));
      std::vector<int> listed(net.parents[v]);
      listed.push_back(v);
      std::vector<int> listed_new, listed_cards;
      for (int u : listed) {
        listed_new.push_back(to_new.at(u));
        listed_cards.push_back(net.cards[u]);
      }
      comp.net.cpds[i] = Factor::from_listed(
          listed_new, listed_cards, values_in_order(net.cpds[v], listed));
    }
    out.push_back(std::move(comp));
  }
  return out;
}

}  // namespace ibia
