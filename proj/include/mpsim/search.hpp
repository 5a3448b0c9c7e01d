#pragma once

// Preimage search by bit fixing, and exact solution counting from P(y).
//
// With the n_in inputs uniform, P(y) * 2^n_in is the number of inputs x with
// f(x) = y. Pinning a prefix of k inputs leaves 2^(n_in - k) equally likely
// completions, so N_k = P(y) * 2^(n_in - k) counts the solutions that extend
// the prefix. The search keeps x_k = 0 whenever N_k >= 1/2.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mpsim/bit_assignment.hpp"
#include "mpsim/circuit.hpp"
#include "mpsim/errors.hpp"
#include "mpsim/gates.hpp"
#include "mpsim/mps_state.hpp"

namespace mpsim {

/// One circuit execution made by the search.
struct SearchStep {
  std::size_t step = 0;      // 0 for the unconstrained count
  int input_bit = 0;         // bit pinned at this step, 0 at step 0
  int value = -1;            // value tried for input_bit
  BitAssignment prefix;      // all pinned inputs during this execution
  double probability = 0.0;  // P(y)
  double remaining = 0.0;    // P(y) * 2^(n_in - step)
  double threshold = 0.0;    // 2^(step - n_in), the P(y) a single survivor gives
  bool accepted = false;
};

struct SearchOutcome {
  bool satisfiable = false;
  BitAssignment witness;  // over input bits, empty when unsatisfiable
  std::uint64_t count = 0;
  std::vector<SearchStep> trace;
  bool approximate = false;

  std::size_t executions() const noexcept { return trace.size(); }

  /// Witness as a 0/1 string in input_bits order.
  std::string witness_string(const Circuit& circuit) const {
    std::string s;
    for (int b : circuit.input_bits) s += witness.get(b) == 1 ? '1' : '0';
    return s;
  }
};

namespace search_detail {

inline void check_target(const Circuit& circuit, const BitAssignment& target) {
  if (target.size() != circuit.output_bits.size())
    throw std::invalid_argument(fmt::format("target constrains {} bits but the circuit declares {} outputs",
                                            target.size(), circuit.output_bits.size()));
  for (int b : circuit.output_bits)
    if (!target.contains(b)) throw std::invalid_argument(fmt::format("target does not cover output bit {}", b));
}

inline const Circuit& ensure_routed(const Circuit& circuit, std::optional<Circuit>& storage) {
  if (circuit.routed()) return circuit;
  storage = route_nearest_neighbor(circuit);
  return *storage;
}

struct Measurement {
  double probability = 0.0;
  bool approximate = false;
};

inline Measurement measure(const Circuit& routed, const BitAssignment& pinned, const BitAssignment& target,
                           const SvdConfig& cfg) {
  const MpsState state = execute(routed, pinned, cfg);
  return {evaluate_probability(state, target), state.approximate};
}

}  // namespace search_detail

struct CountResult {
  std::uint64_t count = 0;
  double probability = 0.0;
  double scaled = 0.0;    // P(y) * 2^n_in
  double residual = 0.0;  // |scaled - count|
  bool approximate = false;
};

/// Count with diagnostics. Throws IntegralityViolation when the scaled
/// probability is 0.25 or more away from an integer and no lossy cap is set.
inline CountResult count_solutions_detailed(const Circuit& circuit, const BitAssignment& target,
                                            const SvdConfig& cfg = {}) {
  search_detail::check_target(circuit, target);
  std::optional<Circuit> storage;
  const Circuit& routed = search_detail::ensure_routed(circuit, storage);
  const auto m = search_detail::measure(routed, {}, target, cfg);
  CountResult r;
  r.probability = m.probability;
  r.approximate = m.approximate || cfg.lossy();
  r.scaled = std::ldexp(m.probability, static_cast<int>(circuit.input_bits.size()));
  const double rounded = std::max(0.0, std::round(r.scaled));
  r.residual = std::abs(r.scaled - rounded);
  if (!r.approximate && r.residual >= 0.25)
    throw IntegralityViolation(
        fmt::format("P(y) * 2^{} = {} is not close to an integer", circuit.input_bits.size(), r.scaled));
  r.count = static_cast<std::uint64_t>(rounded);
  return r;
}

inline std::uint64_t count_solutions(const Circuit& circuit, const BitAssignment& target, const SvdConfig& cfg = {}) {
  return count_solutions_detailed(circuit, target, cfg).count;
}

/// Fix inputs one at a time in input_bits order, preferring 0. Returns the
/// lexicographically smallest preimage of `target` and the solution count.
inline SearchOutcome search_preimage(const Circuit& circuit, const BitAssignment& target, const SvdConfig& cfg = {}) {
  search_detail::check_target(circuit, target);
  std::optional<Circuit> storage;
  const Circuit& routed = search_detail::ensure_routed(circuit, storage);
  const int n_in = static_cast<int>(circuit.input_bits.size());

  SearchOutcome out;
  const auto counted = count_solutions_detailed(routed, target, cfg);
  out.count = counted.count;
  out.approximate = counted.approximate;
  {
    SearchStep s;
    s.probability = counted.probability;
    s.remaining = counted.scaled;
    s.threshold = std::ldexp(1.0, -n_in);
    s.accepted = counted.count > 0;
    out.trace.push_back(s);
  }
  if (counted.count == 0) return out;

  BitAssignment prefix;
  for (int k = 1; k <= n_in; ++k) {
    const int bit = circuit.input_bits[static_cast<std::size_t>(k - 1)];
    bool found = false;
    for (int value = 0; value < 2 && !found; ++value) {
      BitAssignment trial = prefix;
      trial.set(bit, value);
      const auto m = search_detail::measure(routed, trial, target, cfg);
      out.approximate = out.approximate || m.approximate;
      SearchStep s;
      s.step = static_cast<std::size_t>(k);
      s.input_bit = bit;
      s.value = value;
      s.prefix = trial;
      s.probability = m.probability;
      s.remaining = std::ldexp(m.probability, n_in - k);
      s.threshold = std::ldexp(1.0, k - n_in);
      s.accepted = s.remaining >= 0.5;
      out.trace.push_back(s);
      if (s.accepted) {
        prefix = std::move(trial);
        found = true;
      }
    }
    if (!found)
      throw BranchFailure(fmt::format("both values of input bit {} fall below threshold after prefix {}", bit,
                                      prefix.empty() ? std::string("(none)") : prefix.to_string()));
  }

  // With every input pinned the last accepted execution is a deterministic
  // evaluation of f(witness); for a deterministic circuit P(y) must be 1.
  const double final_p = out.trace.back().probability;
  if (n_in > 0 && !out.approximate && std::abs(final_p - 1.0) > 1e-6)
    throw BranchFailure(fmt::format("witness {} gives P(y) = {}, expected 1", prefix.to_string(), final_p));
  out.satisfiable = true;
  out.witness = std::move(prefix);
  return out;
}

}  // namespace mpsim
