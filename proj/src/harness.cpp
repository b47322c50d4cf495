/* This file is part of ibia-mpe, an approximate MPE engine for discrete
 * Bayesian networks.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 */
#include "ibia/harness.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <thread>

#include "ibia/errors.hpp"
#include "ibia/oracle.hpp"

namespace ibia {

namespace {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

const char* priority_name(ApproxConfig::Priority priority) {
  return priority == ApproxConfig::Priority::fewest_cliques ? "fewest-cliques"
                                                            : "random";
}

void parallel_for(int count, int jobs,
                  const std::function<void(int)>& work) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs <= 1) {
    for (int i = 0; i < count; ++i) work(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(jobs));
  for (int j = 0; j < jobs; ++j)
    workers.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) work(i);
    });
  for (auto& w : workers) w.join();
}

struct InstanceOutcome {
  enum class Status { solved, zero, timeout, error };
  Status status = Status::error;
  MpeResult result;
  std::string message;
  std::uint64_t seed = 0;
  ApproxConfig::Priority priority = ApproxConfig::Priority::fewest_cliques;
  double wall_seconds = 0.0;
  int assigned_vars = 0;
  std::vector<std::string> trace;  // valid also for timeouts

  const char* status_name() const {
    switch (status) {
      case Status::solved: return "solved";
      case Status::zero: return "zero";
      case Status::timeout: return "timeout";
      default: return "error";
    }
  }
};

InstanceOutcome run_instance(const DiscreteNetwork& net,
                             const Assignment& evidence,
                             const RunOptions& options, int index) {
  InstanceOutcome outcome;
  outcome.seed = options.seed + static_cast<std::uint64_t>(index);
  outcome.priority = index == 0 ? options.priority
                                : ApproxConfig::Priority::unprioritized_random;
  ApproxConfig cfg;
  cfg.mcs_im = options.mcs_im;
  cfg.tie_seed = outcome.seed;
  cfg.priority = outcome.priority;

  const auto start = std::chrono::steady_clock::now();
  try {
    outcome.result = infer_mpe(net, evidence, options.mcs_p, cfg,
                               options.time_limit);
    outcome.status = outcome.result.log_mpe > kLogZero
                         ? InstanceOutcome::Status::solved
                         : InstanceOutcome::Status::zero;
    outcome.assigned_vars = static_cast<int>(outcome.result.assignment.size());
    outcome.trace = outcome.result.trace;
  } catch (const TimedOut& t) {
    outcome.status = InstanceOutcome::Status::timeout;
    outcome.assigned_vars = static_cast<int>(t.partial.size());
    outcome.trace = t.trace;
    outcome.message = t.what();
  } catch (const Error& e) {
    outcome.status = InstanceOutcome::Status::error;
    outcome.message = e.what();
  }
  outcome.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return outcome;
}

struct RunOutput {
  int exit_code = kExitInputError;
  int selected = -1;
  std::vector<InstanceOutcome> instances;
  double wall_seconds = 0.0;
};

RunOutput run_sweep(const DiscreteNetwork& net, const Assignment& evidence,
                    const RunOptions& options) {
  RunOutput output;
  const int count = std::max(1, options.sweep_seeds);
  output.instances.resize(static_cast<std::size_t>(count));
  const auto start = std::chrono::steady_clock::now();
  parallel_for(count, options.jobs, [&](int i) {
    output.instances[static_cast<std::size_t>(i)] =
        run_instance(net, evidence, options, i);
  });
  output.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  // Best finite log-probability wins; earlier instances win ties. A zero or
  // timeout outcome is reported only when nothing solved.
  for (int i = 0; i < count; ++i) {
    const auto& inst = output.instances[static_cast<std::size_t>(i)];
    if (inst.status != InstanceOutcome::Status::solved) continue;
    if (output.selected < 0 ||
        inst.result.log_mpe >
            output.instances[static_cast<std::size_t>(output.selected)]
                .result.log_mpe)
      output.selected = i;
  }
  if (output.selected >= 0) {
    output.exit_code = kExitSolved;
    return output;
  }
  for (int i = 0; i < count && output.selected < 0; ++i)
    if (output.instances[static_cast<std::size_t>(i)].status ==
        InstanceOutcome::Status::zero)
      output.selected = i;
  for (int i = 0; i < count && output.selected < 0; ++i)
    if (output.instances[static_cast<std::size_t>(i)].status ==
        InstanceOutcome::Status::timeout)
      output.selected = i;
  output.exit_code = output.selected >= 0 ? kExitNoSolution : kExitInputError;
  return output;
}

void write_metrics(const DiscreteNetwork& net, const RunOptions& options,
                   const RunOutput& output, std::ostream& out) {
  out << "model " << options.model_path << "\n";
  out << "evidence "
      << (options.evidence_path.empty() ? "-" : options.evidence_path) << "\n";
  out << "n_vars " << net.num_vars() << "\n";
  out << "mcs_p " << format_double(options.mcs_p) << "\n";
  out << "mcs_im " << format_double(options.mcs_im) << "\n";
  out << "seed " << options.seed << "\n";
  out << "sweep_seeds " << std::max(1, options.sweep_seeds) << "\n";
  out << "priority " << priority_name(options.priority) << "\n";
  out << "time_limit " << format_double(options.time_limit) << "\n";
  out << "exact_log "
      << (options.exact_log ? format_double(*options.exact_log) : "-") << "\n";
  out << "selected_instance "
      << (output.selected >= 0 ? std::to_string(output.selected) : "-") << "\n";

  if (output.selected >= 0) {
    const auto& best =
        output.instances[static_cast<std::size_t>(output.selected)];
    out << "status " << best.status_name() << "\n";
    if (best.status == InstanceOutcome::Status::timeout) {
      out << "log_mpe N\n";
      out << "log_maxmarg_estimate N\n";
      out << "iterations 0\n";
      out << "max_partitions 0\n";
      out << "peak_belief_entries 0\n";
    } else {
      out << "log_mpe " << format_log_value(best.result.log_mpe) << "\n";
      out << "log_maxmarg_estimate "
          << format_log_value(best.result.log_maxmarg_estimate) << "\n";
      out << "iterations " << best.result.iterations << "\n";
      out << "max_partitions " << best.result.max_partitions << "\n";
      out << "peak_belief_entries " << best.result.peak_belief_entries << "\n";
    }
    out << "assigned_vars " << best.assigned_vars << "\n";
    if (options.exact_log && best.status != InstanceOutcome::Status::timeout) {
      const DeltaMetrics deltas =
          delta_metrics(best.result, *options.exact_log);
      out << "delta_maxmarg " << format_log_value(deltas.delta_maxmarg) << "\n";
      out << "delta_mpe " << format_log_value(deltas.delta_mpe) << "\n";
    }
  } else {
    out << "status error\n";
  }

  for (std::size_t i = 0; i < output.instances.size(); ++i) {
    const auto& inst = output.instances[i];
    out << "sweep " << i << " seed " << inst.seed << " priority "
        << priority_name(inst.priority) << " status " << inst.status_name()
        << " log_mpe "
        << (inst.status == InstanceOutcome::Status::solved ||
                    inst.status == InstanceOutcome::Status::zero
                ? format_log_value(inst.result.log_mpe)
                : "N")
        << "\n";
  }
  if (output.selected >= 0)
    for (const auto& line :
         output.instances[static_cast<std::size_t>(output.selected)].trace)
      out << "trace " << line << "\n";
}

}  // namespace

std::string format_log_value(double value) {
  if (value == kLogZero) return "N";
  return format_double(value);
}

int run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  DiscreteNetwork net;
  Assignment evidence;
  try {
    net = parse_uai_file(options.model_path);
    if (!options.evidence_path.empty())
      evidence = parse_evidence_file(options.evidence_path, net);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  RunOutput output;
  try {
    output = run_sweep(net, evidence, options);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  if (output.selected < 0) {
    for (const auto& inst : output.instances)
      if (!inst.message.empty()) err << "error: " << inst.message << "\n";
    return kExitInputError;
  }

  const std::string prefix =
      options.output_prefix.empty() ? options.model_path : options.output_prefix;
  const auto& best =
      output.instances[static_cast<std::size_t>(output.selected)];

  if (best.status == InstanceOutcome::Status::solved ||
      best.status == InstanceOutcome::Status::zero) {
    std::ofstream result_file(prefix + ".MPE");
    if (!result_file) {
      err << "error: cannot write " << prefix << ".MPE\n";
      return kExitInputError;
    }
    result_file << "MPE\n";
    bool first = true;
    for (const auto& [var, state] : best.result.assignment.states()) {
      (void)var;
      result_file << (first ? "" : " ") << state;
      first = false;
    }
    result_file << "\n";
  }

  {
    std::ofstream metrics_file(prefix + ".metrics");
    if (!metrics_file) {
      err << "error: cannot write " << prefix << ".metrics\n";
      return kExitInputError;
    }
    write_metrics(net, options, output, metrics_file);
  }

  if (!options.dump_ctf_path.empty()) {
    std::ofstream dump_file(options.dump_ctf_path);
    try {
      const SimplifiedNetwork s = simplify(net, evidence);
      ApproxConfig cfg;
      cfg.mcs_im = options.mcs_im;
      cfg.tie_seed = options.seed;
      cfg.priority = options.priority;
      // Dump the last-partition forest of the first pass over each component.
      int component = 0;
      for (const auto& families : group_families(s)) {
        const PartitionSequence seq =
            run_ibia(families, s.cards, options.mcs_p, cfg, {}, nullptr);
        dump_file << "component " << component++ << " partitions "
                  << seq.parts.size() << "\n";
        dump(seq.parts.back().ctf, dump_file);
      }
    } catch (const Error& e) {
      dump_file << "error " << e.what() << "\n";
    }
  }

  out << "model " << options.model_path << "\n";
  out << "status " << best.status_name() << "\n";
  if (best.status != InstanceOutcome::Status::timeout) {
    out << "log_mpe " << format_log_value(best.result.log_mpe) << "\n";
    out << "log_maxmarg_estimate "
        << format_log_value(best.result.log_maxmarg_estimate) << "\n";
    out << "iterations " << best.result.iterations << " max_partitions "
        << best.result.max_partitions << "\n";
    if (options.exact_log) {
      const DeltaMetrics deltas = delta_metrics(best.result, *options.exact_log);
      out << "delta_maxmarg " << format_log_value(deltas.delta_maxmarg)
          << " delta_mpe " << format_log_value(deltas.delta_mpe) << "\n";
    }
  }
  out << "wall_time_s " << format_double(output.wall_seconds) << "\n";
  out << "files " << prefix << ".MPE " << prefix << ".metrics\n";

  return best.status == InstanceOutcome::Status::solved ? kExitSolved
                                                        : kExitNoSolution;
}

int batch(const std::string& manifest_path, const RunOptions& defaults,
          std::ostream& out, std::ostream& err) {
  std::ifstream manifest(manifest_path);
  if (!manifest) {
    err << "error: cannot open manifest: " << manifest_path << "\n";
    return kExitInputError;
  }
  struct Row {
    std::string model, evidence, exact;
  };
  std::vector<Row> rows;
  std::string line;
  while (std::getline(manifest, line)) {
    std::istringstream fields(line);
    Row row;
    if (!(fields >> row.model)) continue;  // blank line
    if (row.model[0] == '#') continue;
    fields >> row.evidence >> row.exact;
    rows.push_back(std::move(row));
  }

  struct RowResult {
    std::string rendered;
    std::string error;
    bool solved = false;
  };
  std::vector<RowResult> results(rows.size());

  parallel_for(static_cast<int>(rows.size()), defaults.jobs, [&](int i) {
    const Row& row = rows[static_cast<std::size_t>(i)];
    RunOptions options = defaults;
    options.jobs = 1;  // parallelism is at the row level here
    options.model_path = row.model;
    options.evidence_path = row.evidence == "-" ? "" : row.evidence;
    options.output_prefix = row.model;
    if (!row.exact.empty() && row.exact != "-")
      options.exact_log = std::stod(row.exact);

    std::ostringstream cell;
    std::string name = row.model;
    if (const auto slash = name.find_last_of('/'); slash != std::string::npos)
      name = name.substr(slash + 1);

    DiscreteNetwork net;
    Assignment evidence;
    try {
      net = parse_uai_file(options.model_path);
      if (!options.evidence_path.empty())
        evidence = parse_evidence_file(options.evidence_path, net);
      const RunOutput output = run_sweep(net, evidence, options);
      if (output.selected < 0) throw Error("no instance finished");
      const auto& best =
          output.instances[static_cast<std::size_t>(output.selected)];
      const bool has_result =
          best.status == InstanceOutcome::Status::solved ||
          best.status == InstanceOutcome::Status::zero;
      std::string log_mpe = "N", dmm = "-", dmpe = "-";
      int iters = 0, parts = 0;
      if (has_result) {
        log_mpe = format_log_value(best.result.log_mpe);
        iters = best.result.iterations;
        parts = best.result.max_partitions;
        if (options.exact_log) {
          const DeltaMetrics deltas =
              delta_metrics(best.result, *options.exact_log);
          dmm = format_log_value(deltas.delta_maxmarg);
          dmpe = format_log_value(deltas.delta_mpe);
        }
      }
      char runtime[32];
      std::snprintf(runtime, sizeof(runtime), "%.2f", output.wall_seconds);
      cell << name << " " << iters << " " << parts << " " << log_mpe << " "
           << dmm << " " << dmpe << " " << runtime << " "
           << best.status_name();
      results[static_cast<std::size_t>(i)].solved =
          best.status == InstanceOutcome::Status::solved;
    } catch (const std::exception& e) {
      cell << name << " 0 0 N - - 0.00 error";
      results[static_cast<std::size_t>(i)].error =
          row.model + ": " + e.what();
    }
    results[static_cast<std::size_t>(i)].rendered = cell.str();
  });

  out << "name iterations max_partitions log_mpe delta_maxmarg delta_mpe "
         "runtime_s status\n";
  int solved = 0;
  for (const auto& r : results) {
    out << r.rendered << "\n";
    if (!r.error.empty()) err << "error: " << r.error << "\n";
    if (r.solved) ++solved;
  }
  out << "solved " << solved << " of " << rows.size() << "\n";
  return kExitSolved;
}

}  // namespace ibia
