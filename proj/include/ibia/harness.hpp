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

#include <iosfwd>
#include <optional>
#include <string>

#include "ibia/mpe.hpp"

namespace ibia {

struct RunOptions {
  std::string model_path;
  std::string evidence_path;  // empty = no evidence
  double mcs_p = 20.0;
  double mcs_im = 15.0;
  std::uint64_t seed = 0;
  int sweep_seeds = 1;         // > 1 runs independent approximation instances
  double time_limit = 3600.0;  // seconds per instance
  std::optional<double> exact_log;
  ApproxConfig::Priority priority = ApproxConfig::Priority::fewest_cliques;
  int jobs = 1;
  std::string output_prefix;   // default: model_path
  std::string dump_ctf_path;   // empty = no dump
};

// Exit codes: 0 = nonzero-probability assignment, 1 = input error,
// 2 = zero probability / dead end / timeout (the "N" outcome).
inline constexpr int kExitSolved = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitNoSolution = 2;

/// Runs inference on one model, writes <prefix>.MPE and <prefix>.metrics and
/// prints a human summary (with wall time) to `out`. With sweep_seeds > 1,
/// instance 0 uses the configured priority and instances >= 1 the
/// unprioritized-random ordering with distinct seeds; the best finite
/// log-probability wins. The written files depend only on options and seed.
int run(const RunOptions& options, std::ostream& out, std::ostream& err);

/// Runs every `model evidence exact` triple of the manifest ("-" stands for
/// no evidence / no exact value) and prints one row per instance plus a
/// solved-count summary. Per-instance failures become "N" rows.
int batch(const std::string& manifest_path, const RunOptions& defaults,
          std::ostream& out, std::ostream& err);

/// Formats a log-space value the way reports render it ("N" for -inf).
std::string format_log_value(double value);

}  // namespace ibia
