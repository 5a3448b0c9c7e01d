#pragma once

// Circuit text format, nearest-neighbour routing and execution against an
// MpsState.
//
//   bits <n>
//   input <i1> <i2> ...
//   output <j1> <j2> ...
//   gate <NAME> <i> [<j>]
//   pgate <i> <p> <q>
//   table2 <NAME> <A00><B00> <A01><B01> <A10><B10> <A11><B11>
//   insert <position> <value>
//   remove <i>
//   sweep
//
// Indices are 1-based and refer to the bit numbering in force at that line:
// after "insert 1 0" on a 3-bit register the old bits 2 and 3 become 3 and 4.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <variant>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "mpsim/bit_assignment.hpp"
#include "mpsim/errors.hpp"
#include "mpsim/gates.hpp"
#include "mpsim/heights.hpp"
#include "mpsim/mps_state.hpp"

namespace mpsim {

struct OneBitOp {
  int index = 1;
  OneBitGate gate;
  friend bool operator==(const OneBitOp&, const OneBitOp&) = default;
};

/// Gate acting on (first, second): A writes `first`, B writes `second`.
struct TwoBitOp {
  int first = 1;
  int second = 2;
  TwoBitGate gate;
  friend bool operator==(const TwoBitOp&, const TwoBitOp&) = default;
};

struct InsertOp {
  int position = 0;
  int value = 0;
  friend bool operator==(const InsertOp&, const InsertOp&) = default;
};

struct RemoveOp {
  int index = 1;
  friend bool operator==(const RemoveOp&, const RemoveOp&) = default;
};

struct SweepOp {
  friend bool operator==(const SweepOp&, const SweepOp&) = default;
};

using CircuitOp = std::variant<OneBitOp, TwoBitOp, InsertOp, RemoveOp, SweepOp>;

struct Circuit {
  int n_declared = 1;
  std::vector<int> input_bits;
  std::vector<int> output_bits;
  std::vector<CircuitOp> ops;
  std::map<std::string, TwoBitGate> custom_gates;

  /// Bit count after all ops.
  int final_bits() const {
    int n = n_declared;
    for (const auto& op : ops) {
      if (std::holds_alternative<InsertOp>(op)) ++n;
      if (std::holds_alternative<RemoveOp>(op)) --n;
    }
    return n;
  }

  /// Largest bit count reached at any point.
  int max_bits() const {
    int n = n_declared;
    int peak = n;
    for (const auto& op : ops) {
      if (std::holds_alternative<InsertOp>(op)) peak = std::max(peak, ++n);
      if (std::holds_alternative<RemoveOp>(op)) --n;
    }
    return peak;
  }

  std::size_t two_bit_gate_count() const {
    return static_cast<std::size_t>(
        std::count_if(ops.begin(), ops.end(), [](const auto& op) { return std::holds_alternative<TwoBitOp>(op); }));
  }

  /// True when no one-bit gate is stochastic.
  bool deterministic() const {
    return std::all_of(ops.begin(), ops.end(), [](const auto& op) {
      const auto* g = std::get_if<OneBitOp>(&op);
      return g == nullptr || g->gate.deterministic();
    });
  }

  bool routed() const {
    return std::all_of(ops.begin(), ops.end(), [](const auto& op) {
      const auto* g = std::get_if<TwoBitOp>(&op);
      return g == nullptr || std::abs(g->first - g->second) == 1;
    });
  }

  friend bool operator==(const Circuit&, const Circuit&) = default;
};

namespace detail {

inline std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline int parse_int(std::string_view tok, int line, const char* what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw ParseError(line, fmt::format("{} '{}' is not an integer", what, tok));
  return v;
}

inline double parse_probability(std::string_view tok, int line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw ParseError(line, fmt::format("'{}' is not a decimal number", tok));
  if (!(v >= 0.0 && v <= 1.0)) throw ParseError(line, fmt::format("probability {} outside [0, 1]", tok));
  return v;
}

inline int parse_bit_index(std::string_view tok, int line, int current_bits) {
  const int v = parse_int(tok, line, "bit index");
  if (v < 1 || v > current_bits)
    throw ParseError(line, fmt::format("bit index {} out of range 1..{}", v, current_bits));
  return v;
}

inline std::vector<int> parse_index_list(const std::vector<std::string_view>& toks, int line, int bits) {
  if (toks.size() < 2) throw ParseError(line, fmt::format("'{}' needs at least one bit index", toks[0]));
  std::vector<int> out;
  std::set<int> seen;
  for (std::size_t k = 1; k < toks.size(); ++k) {
    const int v = parse_bit_index(toks[k], line, bits);
    if (!seen.insert(v).second) throw ParseError(line, fmt::format("duplicate bit index {}", v));
    out.push_back(v);
  }
  return out;
}

inline void expect_args(const std::vector<std::string_view>& toks, std::size_t count, int line) {
  if (toks.size() != count + 1)
    throw ParseError(line, fmt::format("'{}' takes {} argument(s), got {}", toks[0], count, toks.size() - 1));
}

}  // namespace detail

/// Parse circuit text. Throws ParseError carrying the offending line.
inline Circuit parse_circuit(std::string_view text) {
  using detail::expect_args;
  Circuit c;
  bool have_bits = false;
  bool have_input = false;
  bool have_output = false;
  int output_line = 0;
  int current = 0;
  int line_no = 0;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto toks = detail::split_tokens(line);
    if (toks.empty()) continue;
    const std::string_view kw = toks[0];

    if (kw == "bits") {
      if (have_bits) throw ParseError(line_no, "'bits' declared twice");
      expect_args(toks, 1, line_no);
      c.n_declared = detail::parse_int(toks[1], line_no, "bit count");
      if (c.n_declared < 1) throw ParseError(line_no, "bit count must be positive");
      current = c.n_declared;
      have_bits = true;
      continue;
    }
    if (!have_bits) throw ParseError(line_no, "'bits' must be declared before anything else");

    if (kw == "input") {
      if (have_input) throw ParseError(line_no, "'input' declared twice");
      c.input_bits = detail::parse_index_list(toks, line_no, c.n_declared);
      have_input = true;
    } else if (kw == "output") {
      if (have_output) throw ParseError(line_no, "'output' declared twice");
      // Range is checked against the final bit count once all ops are read.
      c.output_bits = detail::parse_index_list(toks, line_no, std::numeric_limits<int>::max());
      have_output = true;
      output_line = line_no;
    } else if (kw == "gate") {
      if (toks.size() < 3) throw ParseError(line_no, "'gate' needs a name and bit indices");
      const std::string name(toks[1]);
      if (auto g1 = one_bit::builtin(name)) {
        if (toks.size() != 3) throw ParseError(line_no, fmt::format("one-bit gate {} takes 1 bit index", name));
        c.ops.push_back(OneBitOp{detail::parse_bit_index(toks[2], line_no, current), *g1});
        continue;
      }
      std::optional<TwoBitGate> g2 = two_bit::builtin(name);
      if (!g2) {
        auto it = c.custom_gates.find(name);
        if (it == c.custom_gates.end()) throw ParseError(line_no, fmt::format("unknown gate '{}'", name));
        g2 = it->second;
      }
      if (toks.size() != 4) throw ParseError(line_no, fmt::format("two-bit gate {} takes 2 bit indices", name));
      const int i = detail::parse_bit_index(toks[2], line_no, current);
      const int j = detail::parse_bit_index(toks[3], line_no, current);
      if (i == j) throw ParseError(line_no, fmt::format("duplicate bit index {}", i));
      c.ops.push_back(TwoBitOp{i, j, *g2});
    } else if (kw == "pgate") {
      expect_args(toks, 3, line_no);
      OneBitOp op;
      op.index = detail::parse_bit_index(toks[1], line_no, current);
      op.gate.p = detail::parse_probability(toks[2], line_no);
      op.gate.q = detail::parse_probability(toks[3], line_no);
      c.ops.push_back(op);
    } else if (kw == "table2") {
      expect_args(toks, 5, line_no);
      const std::string name(toks[1]);
      if (one_bit::builtin(name) || two_bit::builtin(name))
        throw ParseError(line_no, fmt::format("'{}' is a built-in gate name", name));
      if (c.custom_gates.count(name)) throw ParseError(line_no, fmt::format("gate '{}' defined twice", name));
      TwoBitGate g;
      g.name = name;
      for (std::size_t k = 0; k < 4; ++k) {
        const auto cell = toks[k + 2];
        if (cell.size() != 2 || (cell[0] != '0' && cell[0] != '1') || (cell[1] != '0' && cell[1] != '1'))
          throw ParseError(line_no, fmt::format("truth table cell '{}' must be two binary digits", cell));
        g.logic_a[k] = cell[0] - '0';
        g.logic_b[k] = cell[1] - '0';
      }
      c.custom_gates.emplace(name, g);
    } else if (kw == "insert") {
      expect_args(toks, 2, line_no);
      const int p = detail::parse_int(toks[1], line_no, "insert position");
      if (p < 0 || p > current)
        throw ParseError(line_no, fmt::format("insert position {} out of range 0..{}", p, current));
      const int v = detail::parse_int(toks[2], line_no, "bit value");
      if (v != 0 && v != 1) throw ParseError(line_no, fmt::format("bit value {} is not 0 or 1", v));
      c.ops.push_back(InsertOp{p, v});
      ++current;
    } else if (kw == "remove") {
      expect_args(toks, 1, line_no);
      if (current < 2) throw ParseError(line_no, "cannot remove the last remaining bit");
      c.ops.push_back(RemoveOp{detail::parse_bit_index(toks[1], line_no, current)});
      --current;
    } else if (kw == "sweep") {
      expect_args(toks, 0, line_no);
      c.ops.push_back(SweepOp{});
    } else {
      throw ParseError(line_no, fmt::format("unknown directive '{}'", kw));
    }
  }
  if (!have_bits) throw ParseError(0, "missing 'bits' declaration");
  for (int b : c.output_bits)
    if (b > current)
      throw ParseError(output_line, fmt::format("output bit {} out of range 1..{} at end of circuit", b, current));
  return c;
}

inline std::string format_op(const CircuitOp& op) {
  return std::visit(
      [](const auto& o) -> std::string {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, OneBitOp>) {
          if (!o.gate.name.empty()) return fmt::format("gate {} {}", o.gate.name, o.index);
          return fmt::format("pgate {} {} {}", o.index, o.gate.p, o.gate.q);
        } else if constexpr (std::is_same_v<T, TwoBitOp>) {
          return fmt::format("gate {} {} {}", o.gate.name, o.first, o.second);
        } else if constexpr (std::is_same_v<T, InsertOp>) {
          return fmt::format("insert {} {}", o.position, o.value);
        } else if constexpr (std::is_same_v<T, RemoveOp>) {
          return fmt::format("remove {}", o.index);
        } else {
          return "sweep";
        }
      },
      op);
}

/// Canonical text form; parse_circuit(format_circuit(c)) == c.
inline std::string format_circuit(const Circuit& c) {
  std::string out = fmt::format("bits {}\n", c.n_declared);
  if (!c.input_bits.empty()) out += fmt::format("input {}\n", fmt::join(c.input_bits, " "));
  for (const auto& [name, g] : c.custom_gates) {
    out += fmt::format("table2 {}", name);
    for (std::size_t k = 0; k < 4; ++k) out += fmt::format(" {}{}", g.logic_a[k], g.logic_b[k]);
    out += '\n';
  }
  for (const auto& op : c.ops) out += format_op(op) + '\n';
  if (!c.output_bits.empty()) out += fmt::format("output {}\n", fmt::join(c.output_bits, " "));
  return out;
}

/// Replace each long-range two-bit gate by a SWAP chain that brings its
/// second operand next to the first, the gate itself, and the reverse chain.
inline Circuit route_nearest_neighbor(const Circuit& circuit) {
  Circuit out = circuit;
  out.ops.clear();
  const TwoBitGate swap = two_bit::SWAP();
  for (const auto& op : circuit.ops) {
    const auto* g = std::get_if<TwoBitOp>(&op);
    if (g == nullptr || std::abs(g->first - g->second) == 1) {
      out.ops.push_back(op);
      continue;
    }
    const int i = g->first;
    const int j = g->second;
    std::vector<TwoBitOp> chain;
    if (j > i) {
      for (int k = j - 1; k > i; --k) chain.push_back(TwoBitOp{k, k + 1, swap});
      for (const auto& s : chain) out.ops.push_back(s);
      out.ops.push_back(TwoBitOp{i, i + 1, g->gate});
    } else {
      for (int k = j; k < i - 1; ++k) chain.push_back(TwoBitOp{k, k + 1, swap});
      for (const auto& s : chain) out.ops.push_back(s);
      out.ops.push_back(TwoBitOp{i, i - 1, g->gate});
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) out.ops.push_back(*it);
  }
  return out;
}

/// Called after every executed op with the op index (SIZE_MAX for the
/// initial state).
using StepObserver = std::function<void(const MpsState&, const CircuitOp*, std::size_t)>;

struct ExecOptions {
  bool record_log = false;
  StepObserver observer;
};

/// Apply one op in place. Removal is followed by the mandatory sweeps.
inline void apply_op(MpsState& state, const CircuitOp& op, const SvdConfig& cfg) {
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, OneBitOp>) {
          state = apply_one_bit(std::move(state), o.index, o.gate);
        } else if constexpr (std::is_same_v<T, TwoBitOp>) {
          if (o.second == o.first + 1)
            state = apply_two_bit(std::move(state), o.first, o.gate, cfg);
          else if (o.first == o.second + 1)
            state = apply_two_bit(std::move(state), o.second, o.gate.reversed(), cfg);
          else
            throw std::invalid_argument(
                fmt::format("gate on bits {} and {} is not nearest-neighbour; route the circuit first",
                            o.first, o.second));
        } else if constexpr (std::is_same_v<T, InsertOp>) {
          state = insert_bit(std::move(state), o.position, o.value);
        } else if constexpr (std::is_same_v<T, RemoveOp>) {
          state = remove_bit(std::move(state), o.index);
          state = recompress_sweeps(std::move(state), cfg);
        } else {
          state = recompress_sweeps(std::move(state), cfg);
        }
      },
      op);
}

/// Initial state for a circuit: free inputs uniform, pinned inputs fixed,
/// every non-input bit fixed to 0.
inline MpsState initial_state(const Circuit& circuit, const BitAssignment& fixed_inputs) {
  BitAssignment fixed;
  for (int b = 1; b <= circuit.n_declared; ++b) fixed.set(b, 0);
  for (int b : circuit.input_bits) fixed.erase(b);
  for (const auto& [bit, value] : fixed_inputs) {
    if (std::find(circuit.input_bits.begin(), circuit.input_bits.end(), bit) == circuit.input_bits.end())
      throw std::invalid_argument(fmt::format("bit {} is not a declared input", bit));
    fixed.set(bit, value);
  }
  return init_state(circuit.n_declared, fixed);
}

/// Run a routed circuit from its initial state.
inline MpsState execute(const Circuit& circuit, const BitAssignment& fixed_inputs = {}, const SvdConfig& cfg = {},
                        const ExecOptions& opts = {}) {
  if (!circuit.routed()) throw std::invalid_argument("circuit has long-range gates; route it before executing");
  MpsState state = initial_state(circuit, fixed_inputs);
  if (opts.record_log) record_step(state.profile, "init", state.bond_dims());
  if (opts.observer) opts.observer(state, nullptr, SIZE_MAX);
  for (std::size_t k = 0; k < circuit.ops.size(); ++k) {
    const auto& op = circuit.ops[k];
    apply_op(state, op, cfg);
    if (opts.record_log) record_step(state.profile, format_op(op), state.bond_dims());
    if (opts.observer) opts.observer(state, &op, k);
  }
  return state;
}

/// Constraint pinning the output register to `values` (in output order).
inline BitAssignment output_constraint(const Circuit& circuit, const std::vector<int>& values) {
  if (values.size() != circuit.output_bits.size())
    throw std::invalid_argument(
        fmt::format("{} output values given for {} output bits", values.size(), circuit.output_bits.size()));
  BitAssignment a;
  for (std::size_t k = 0; k < values.size(); ++k) a.set(circuit.output_bits[k], values[k]);
  return a;
}

}  // namespace mpsim
