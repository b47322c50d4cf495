/* This file is part of ibia-mpe, an approximate MPE engine for discrete
 * Bayesian networks.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 */
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ibia/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Approximate MPE inference for discrete Bayesian networks: the model "
      "is partitioned into bounded-clique-size clique tree forests, each is "
      "max-calibrated, and a complete assignment is decoded iteratively."};

  ibia::RunOptions options;
  std::string batch_manifest;
  std::string priority = "fewest-cliques";
  double exact_log = 0.0;

  app.add_option("--model", options.model_path,
                 "Model in UAI format (BAYES preamble)");
  app.add_option("--evidence", options.evidence_path,
                 "Evidence file in UAI .evid format");
  app.add_option("--mcs-p", options.mcs_p,
                 "Clique-size bound (log2 states) for the build phase")
      ->capture_default_str();
  app.add_option("--mcs-im", options.mcs_im,
                 "Clique-size bound after approximation (soft, decremented "
                 "down to 2 when the build gets stuck)")
      ->capture_default_str();
  app.add_option("--seed", options.seed, "Base seed for tie-breaking")
      ->capture_default_str();
  app.add_option("--sweep-seeds", options.sweep_seeds,
                 "Run this many independent approximation instances and keep "
                 "the best assignment")
      ->capture_default_str();
  app.add_option("--time-limit", options.time_limit,
                 "Time limit in seconds per instance")
      ->capture_default_str();
  auto* exact_opt = app.add_option(
      "--exact-log", exact_log,
      "Known exact log-probability; reports delta metrics against it");
  app.add_option("--priority", priority,
                 "Variable order during approximation: fewest-cliques|random")
      ->check(CLI::IsMember({"fewest-cliques", "random"}))
      ->capture_default_str();
  app.add_option("--jobs", options.jobs,
                 "Concurrent instances for sweeps and batches")
      ->capture_default_str();
  app.add_option("--output-prefix", options.output_prefix,
                 "Prefix for the .MPE and .metrics files (default: model path)");
  app.add_option("--dump-ctf", options.dump_ctf_path,
                 "Write the first-pass partition forests to this file");
  app.add_option("--batch", batch_manifest,
                 "Manifest of 'model evidence exact' triples; runs them all "
                 "and prints a summary table");

  CLI11_PARSE(app, argc, argv);

  if (*exact_opt) options.exact_log = exact_log;
  options.priority = priority == "random"
                         ? ibia::ApproxConfig::Priority::unprioritized_random
                         : ibia::ApproxConfig::Priority::fewest_cliques;

  if (!batch_manifest.empty())
    return ibia::batch(batch_manifest, options, std::cout, std::cerr);

  if (options.model_path.empty()) {
    std::cerr << "error: --model or --batch is required\n";
    return ibia::kExitInputError;
  }
  return ibia::run(options, std::cout, std::cerr);
}
