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

#include <stdexcept>
#include <string>

namespace ibia {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the 1-based line where parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line)
      : Error("parse error at line " + std::to_string(line) + ": " + msg),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Misuse of factor algebra (cardinality conflict, division by zero support).
class FactorError : public Error {
 public:
  using Error::Error;
};

/// A known variable state has zero probability under its own reduced CPD.
class ZeroProbabilityEvidence : public Error {
 public:
  using Error::Error;
};

/// A single CPD family cannot fit under the clique-size bound at all.
class InfeasibleBound : public Error {
 public:
  using Error::Error;
};

/// A belief table is identically zero (log -inf everywhere).
class ZeroBelief : public Error {
 public:
  using Error::Error;
};

/// The brute-force oracle refuses state spaces beyond its cap.
class OracleRefusal : public Error {
 public:
  using Error::Error;
};

}  // namespace ibia
