#pragma once

// Command implementations behind the `mpsim` executable. Each command writes
// its payload to `out`, diagnostics to `err`, and returns the process exit
// code:
//   0  success (including an unsatisfiable search)
//   1  unreadable file or parse error
//   2  runtime or numerical error
//   3  verification mismatch

#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "mpsim/bit_assignment.hpp"
#include "mpsim/circuit.hpp"
#include "mpsim/errors.hpp"
#include "mpsim/gates.hpp"
#include "mpsim/heights.hpp"
#include "mpsim/mps_state.hpp"
#include "mpsim/oracle.hpp"
#include "mpsim/search.hpp"

namespace mpsim::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kParseError = 1, kRuntimeError = 2, kMismatch = 3 };

struct Options {
  double rank_tol = 1e-12;
  std::optional<std::int64_t> max_rank;
  int oracle_cap = 12;
  bool no_timing = false;

  SvdConfig svd() const {
    SvdConfig cfg;
    cfg.rank_tol = rank_tol;
    if (max_rank) cfg.trunc_max_rank = static_cast<Eigen::Index>(*max_rank);
    return cfg;
  }
};

/// Test hook: mutates the executed state before verification compares it.
using StateHook = std::function<void(MpsState&)>;

/// "" -> no constraint; "2=1,3=0" -> bits 2 and 3 pinned.
inline BitAssignment parse_assignment(const std::string& spec) {
  BitAssignment a;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument(fmt::format("'{}' is not of the form bit=value", item));
    int bit = 0;
    int value = 0;
    try {
      bit = std::stoi(item.substr(0, eq));
      value = std::stoi(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument(fmt::format("'{}' is not of the form bit=value", item));
    }
    if (a.contains(bit)) throw std::invalid_argument(fmt::format("bit {} constrained twice", bit));
    a.set(bit, value);
  }
  return a;
}

/// Output target: either "bit=value,..." or a 0/1 string over the output
/// register in declared order.
inline BitAssignment parse_target(const std::string& spec, const Circuit& circuit) {
  const bool bitstring = !spec.empty() && spec.find_first_not_of("01") == std::string::npos &&
                         spec.size() == circuit.output_bits.size() && spec.find('=') == std::string::npos;
  if (!bitstring) return parse_assignment(spec);
  BitAssignment a;
  for (std::size_t k = 0; k < spec.size(); ++k) a.set(circuit.output_bits[k], spec[k] - '0');
  return a;
}

namespace detail {

inline Circuit load_circuit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, fmt::format("cannot open '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_circuit(buf.str());
}

inline json config_json(const Options& opts) {
  json j;
  j["rank_tol"] = opts.rank_tol;
  j["max_rank"] = opts.max_rank ? json(*opts.max_rank) : json(nullptr);
  j["oracle_cap"] = opts.oracle_cap;
  return j;
}

inline json circuit_json(const std::string& path, const Circuit& parsed, const Circuit& routed) {
  json j;
  j["path"] = path;
  j["n"] = parsed.n_declared;
  j["n_final"] = parsed.final_bits();
  j["n_in"] = parsed.input_bits.size();
  j["n_out"] = parsed.output_bits.size();
  j["two_bit_gates"] = parsed.two_bit_gate_count();
  j["two_bit_gates_routed"] = routed.two_bit_gate_count();
  return j;
}

inline json bounds_json(const BoundReport& r) {
  json j;
  j["ok"] = r.ok();
  j["h_max"] = r.h_max;
  j["h_max_bound"] = r.h_max_bound;
  j["area"] = r.area;
  j["area_bound"] = r.area_bound;
  j["peak_dim"] = r.peak_dim;
  j["dim_bound"] = r.dim_bound;
  j["hdc"] = r.hdc;
  j["dominance"] = r.dominance;
  j["violations"] = r.violations;
  return j;
}

/// Runs `body`, mapping exceptions onto exit codes.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kParseError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

class Stopwatch {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Executes with per-step bound checks; returns the final state.
inline MpsState checked_execute(const Circuit& routed, const SvdConfig& cfg, bool record_log,
                                std::vector<std::string>& violations) {
  ExecOptions exec;
  exec.record_log = record_log;
  exec.observer = [&](const MpsState& s, const CircuitOp* op, std::size_t) {
    const auto dims = s.bond_dims();
    const auto report = check_bounds(s.profile, dims);
    for (const auto& v : report.violations) {
      auto msg = fmt::format("after {}: {}", op ? format_op(*op) : std::string("init"), v);
      if (violations.size() < 32) violations.push_back(std::move(msg));
    }
  };
  return execute(routed, {}, cfg, exec);
}

}  // namespace detail

/// Marginal specs: "bit=value,...", "" (normalization) or "all-outputs"
/// (P(y_j = 0) and P(y_j = 1) for every output bit).
inline int cmd_run(const std::string& path, std::vector<std::string> marginal_specs, const Options& opts,
                   std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    detail::Stopwatch clock;
    const Circuit parsed = detail::load_circuit(path);
    const Circuit routed = route_nearest_neighbor(parsed);
    std::vector<std::string> violations;
    const MpsState state = detail::checked_execute(routed, opts.svd(), false, violations);

    if (marginal_specs.empty()) marginal_specs.push_back("all-outputs");
    std::vector<BitAssignment> constraints;
    for (const auto& spec : marginal_specs) {
      if (spec == "all-outputs") {
        for (int b : parsed.output_bits)
          for (int v = 0; v < 2; ++v) constraints.push_back(BitAssignment{{b, v}});
      } else {
        constraints.push_back(parse_assignment(spec));
      }
    }

    json marginals = json::array();
    for (const auto& c : constraints) {
      json m;
      m["constraint"] = c.to_string();
      m["probability"] = evaluate_probability(state, c);
      marginals.push_back(std::move(m));
    }

    json report;
    report["command"] = "run";
    report["circuit"] = detail::circuit_json(path, parsed, routed);
    report["config"] = detail::config_json(opts);
    report["approximate"] = state.approximate;
    report["marginals"] = std::move(marginals);
    report["normalization"] = evaluate_probability(state);
    report["gate_count"] = state.gate_count();
    report["peak_bond_dim"] = state.peak_bond_dim;
    report["peak_bond_dim_bound"] = max_bond_dim_bound(parsed.max_bits(), state.gate_count());
    auto final_bounds = detail::bounds_json(check_bounds(state.profile, state.bond_dims()));
    final_bounds["every_step_ok"] = violations.empty();
    final_bounds["step_violations"] = violations;
    report["bounds"] = std::move(final_bounds);
    if (!opts.no_timing) report["wall_time_s"] = clock.seconds();
    out << report.dump(2) << '\n';
    return kOk;
  });
}

inline int cmd_search(const std::string& path, const std::string& target_spec, const Options& opts,
                      std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    detail::Stopwatch clock;
    const Circuit parsed = detail::load_circuit(path);
    const Circuit routed = route_nearest_neighbor(parsed);
    const BitAssignment target = parse_target(target_spec, parsed);
    const SearchOutcome outcome = search_preimage(routed, target, opts.svd());

    json trace = json::array();
    for (const auto& s : outcome.trace) {
      json t;
      t["step"] = s.step;
      t["input_bit"] = s.input_bit;
      t["value"] = s.value;
      t["prefix"] = s.prefix.to_string();
      t["probability"] = s.probability;
      t["remaining_count"] = s.remaining;
      t["threshold"] = s.threshold;
      t["accepted"] = s.accepted;
      trace.push_back(std::move(t));
    }

    json report;
    report["command"] = "search";
    report["circuit"] = detail::circuit_json(path, parsed, routed);
    report["config"] = detail::config_json(opts);
    report["target"] = target.to_string();
    report["status"] = outcome.satisfiable ? "satisfiable" : "unsatisfiable";
    report["witness"] = outcome.satisfiable ? json(outcome.witness_string(parsed)) : json(nullptr);
    report["count"] = outcome.count;
    report["executions"] = outcome.executions();
    report["approximate"] = outcome.approximate;
    report["deterministic"] = parsed.deterministic();
    report["trace"] = std::move(trace);
    if (!opts.no_timing) report["wall_time_s"] = clock.seconds();
    out << report.dump(2) << '\n';
    return kOk;
  });
}

/// Compare the matrix-product run against the dense oracle: full
/// distribution when the circuit fits under the oracle cap, and solution
/// counts for every output value of a deterministic circuit.
inline int cmd_verify(const std::string& path, const Options& opts, std::ostream& out, std::ostream& err,
                      const StateHook& hook = {}) {
  return detail::guarded(err, [&] {
    const Circuit parsed = detail::load_circuit(path);
    json report;
    report["command"] = "verify";
    report["config"] = detail::config_json(opts);
    if (opts.max_rank) {
      err << "warning: --max-rank makes the run approximate; oracle comparison skipped\n";
      report["status"] = "skipped";
      report["reason"] = "lossy truncation enabled";
      out << report.dump(2) << '\n';
      return kOk;
    }
    constexpr double kTol = 1e-9;
    const Circuit routed = route_nearest_neighbor(parsed);
    report["circuit"] = detail::circuit_json(path, parsed, routed);
    bool pass = true;

    json dist;
    if (parsed.max_bits() <= opts.oracle_cap) {
      MpsState state = execute(routed, {}, opts.svd());
      if (hook) hook(state);
      const auto mps = full_distribution(state, opts.oracle_cap);
      const auto dense = oracle_execute(parsed, {}, opts.oracle_cap);
      double worst = 0.0;
      for (std::size_t i = 0; i < mps.size(); ++i) worst = std::max(worst, std::abs(mps[i] - dense.probs[i]));
      const bool ok = mps.size() == dense.probs.size() && worst <= kTol;
      pass = pass && ok;
      dist["checked"] = true;
      dist["max_abs_error"] = worst;
      dist["pass"] = ok;
    } else {
      dist["checked"] = false;
      dist["reason"] = fmt::format("{} bits exceeds oracle cap {}", parsed.max_bits(), opts.oracle_cap);
    }
    report["distribution"] = std::move(dist);

    json counts;
    const auto n_in = static_cast<int>(parsed.input_bits.size());
    const auto m = static_cast<int>(parsed.output_bits.size());
    if (!parsed.deterministic()) {
      counts["checked"] = false;
      counts["reason"] = "circuit has stochastic gates";
    } else if (n_in > opts.oracle_cap || m > 6) {
      counts["checked"] = false;
      counts["reason"] = "too many inputs or outputs for exhaustive counting";
    } else {
      bool ok = true;
      json rows = json::array();
      for (int y = 0; y < (1 << m); ++y) {
        std::vector<int> values(static_cast<std::size_t>(m));
        for (int k = 0; k < m; ++k) values[static_cast<std::size_t>(k)] = (y >> (m - 1 - k)) & 1;
        const auto target = output_constraint(parsed, values);
        const auto mps_count = count_solutions(routed, target, opts.svd());
        const auto oracle = oracle_count(parsed, target, opts.oracle_cap);
        ok = ok && mps_count == oracle;
        rows.push_back({{"target", target.to_string()}, {"mps", mps_count}, {"oracle", oracle}});
      }
      pass = pass && ok;
      counts["checked"] = true;
      counts["pass"] = ok;
      counts["targets"] = std::move(rows);
    }
    report["counts"] = std::move(counts);
    report["status"] = pass ? "pass" : "fail";
    out << report.dump(2) << '\n';
    return pass ? kOk : kMismatch;
  });
}

/// Height profile CSV of one run.
inline int cmd_heights(const std::string& path, const Options& opts, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const Circuit routed = route_nearest_neighbor(detail::load_circuit(path));
    std::vector<std::string> violations;
    const MpsState state = detail::checked_execute(routed, opts.svd(), true, violations);
    out << export_profile(state.profile);
    for (const auto& v : violations) err << "warning: " << v << '\n';
    return kOk;
  });
}

}  // namespace mpsim::cli
