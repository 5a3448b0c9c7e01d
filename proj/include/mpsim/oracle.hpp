#pragma once

// Brute-force reference: the full 2^n probability vector pushed through the
// circuit op by op, plus exhaustive deterministic evaluation for counting.
// Nothing here touches the matrix-product code path.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <type_traits>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "mpsim/bit_assignment.hpp"
#include "mpsim/circuit.hpp"

namespace mpsim {

inline constexpr int kOracleBitCap = 20;

/// probs[i] = P(x) where bit 1 is the most significant bit of i.
struct DenseDistribution {
  int n = 0;
  std::vector<double> probs;

  std::uint64_t mask(int bit) const { return std::uint64_t{1} << (n - bit); }

  double marginal(const BitAssignment& constraint) const {
    double total = 0.0;
    for (std::uint64_t i = 0; i < probs.size(); ++i) {
      bool match = true;
      for (const auto& [bit, value] : constraint)
        if (((i & mask(bit)) != 0) != (value == 1)) { match = false; break; }
      if (match) total += probs[i];
    }
    return total;
  }

  double sum() const { return std::accumulate(probs.begin(), probs.end(), 0.0); }
};

namespace oracle_detail {

inline void one_bit(DenseDistribution& d, int bit, const OneBitGate& g) {
  const std::uint64_t m = d.mask(bit);
  for (std::uint64_t i = 0; i < d.probs.size(); ++i) {
    if (i & m) continue;
    const double p0 = d.probs[i];
    const double p1 = d.probs[i | m];
    d.probs[i] = g.transfer(0, 0) * p0 + g.transfer(0, 1) * p1;
    d.probs[i | m] = g.transfer(1, 0) * p0 + g.transfer(1, 1) * p1;
  }
}

inline void two_bit(DenseDistribution& d, int first, int second, const TwoBitGate& g) {
  const std::uint64_t ma = d.mask(first);
  const std::uint64_t mb = d.mask(second);
  std::vector<double> out(d.probs.size(), 0.0);
  for (std::uint64_t i = 0; i < d.probs.size(); ++i) {
    const int a = (i & ma) ? 1 : 0;
    const int b = (i & mb) ? 1 : 0;
    std::uint64_t j = i & ~(ma | mb);
    if (g.A(a, b)) j |= ma;
    if (g.B(a, b)) j |= mb;
    out[j] += d.probs[i];
  }
  d.probs = std::move(out);
}

// New bit lands at index position + 1.
inline void insert(DenseDistribution& d, int position, int value) {
  const int n = d.n;
  const int low_bits = n - position;  // bits after the insertion point
  const std::uint64_t low_mask = (std::uint64_t{1} << low_bits) - 1;
  std::vector<double> out(d.probs.size() * 2, 0.0);
  for (std::uint64_t i = 0; i < d.probs.size(); ++i) {
    const std::uint64_t hi = i >> low_bits;
    const std::uint64_t lo = i & low_mask;
    const std::uint64_t j = (((hi << 1) | static_cast<std::uint64_t>(value)) << low_bits) | lo;
    out[j] = d.probs[i];
  }
  d.n = n + 1;
  d.probs = std::move(out);
}

inline void remove(DenseDistribution& d, int bit) {
  const int n = d.n;
  const int low_bits = n - bit;
  const std::uint64_t low_mask = (std::uint64_t{1} << low_bits) - 1;
  std::vector<double> out(d.probs.size() / 2, 0.0);
  for (std::uint64_t i = 0; i < d.probs.size(); ++i) {
    const std::uint64_t hi = i >> (low_bits + 1);
    const std::uint64_t lo = i & low_mask;
    out[(hi << low_bits) | lo] += d.probs[i];
  }
  d.n = n - 1;
  d.probs = std::move(out);
}

inline int apply_deterministic(const OneBitGate& g, int in) {
  if (!g.deterministic()) throw std::invalid_argument("stochastic one-bit gate in deterministic evaluation");
  return in == 0 ? (g.p == 1.0 ? 0 : 1) : (g.q == 1.0 ? 1 : 0);
}

}  // namespace oracle_detail

/// Exact dense simulation. Accepts long-range gates directly.
inline DenseDistribution oracle_execute(const Circuit& circuit, const BitAssignment& fixed_inputs = {},
                                        int bit_cap = kOracleBitCap) {
  if (circuit.max_bits() > bit_cap)
    throw std::invalid_argument(fmt::format("circuit reaches {} bits, oracle cap is {}", circuit.max_bits(), bit_cap));
  DenseDistribution d;
  d.n = circuit.n_declared;
  d.probs.assign(std::size_t{1} << d.n, 0.0);

  std::vector<int> free_bits;
  std::uint64_t base = 0;
  for (int b : circuit.input_bits) {
    const int v = fixed_inputs.get(b);
    if (v < 0) free_bits.push_back(b);
    if (v == 1) base |= d.mask(b);
  }
  for (const auto& [bit, value] : fixed_inputs) {
    if (std::find(circuit.input_bits.begin(), circuit.input_bits.end(), bit) == circuit.input_bits.end())
      throw std::invalid_argument(fmt::format("bit {} is not a declared input", bit));
  }
  const double weight = 1.0 / static_cast<double>(std::uint64_t{1} << free_bits.size());
  for (std::uint64_t k = 0; k < (std::uint64_t{1} << free_bits.size()); ++k) {
    std::uint64_t idx = base;
    for (std::size_t f = 0; f < free_bits.size(); ++f)
      if ((k >> f) & 1U) idx |= d.mask(free_bits[f]);
    d.probs[idx] = weight;
  }

  for (const auto& op : circuit.ops) {
    std::visit(
        [&](const auto& o) {
          using T = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<T, OneBitOp>) oracle_detail::one_bit(d, o.index, o.gate);
          else if constexpr (std::is_same_v<T, TwoBitOp>) oracle_detail::two_bit(d, o.first, o.second, o.gate);
          else if constexpr (std::is_same_v<T, InsertOp>) oracle_detail::insert(d, o.position, o.value);
          else if constexpr (std::is_same_v<T, RemoveOp>) oracle_detail::remove(d, o.index);
        },
        op);
  }
  return d;
}

/// Final register of a deterministic circuit for one concrete input
/// (values listed in input_bits order).
inline std::vector<int> oracle_evaluate(const Circuit& circuit, const std::vector<int>& input_values) {
  if (input_values.size() != circuit.input_bits.size())
    throw std::invalid_argument("input value count does not match declared inputs");
  std::vector<int> bits(static_cast<std::size_t>(circuit.n_declared), 0);
  for (std::size_t k = 0; k < input_values.size(); ++k)
    bits[static_cast<std::size_t>(circuit.input_bits[k] - 1)] = input_values[k];
  for (const auto& op : circuit.ops) {
    std::visit(
        [&](const auto& o) {
          using T = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<T, OneBitOp>) {
            auto& b = bits[static_cast<std::size_t>(o.index - 1)];
            b = oracle_detail::apply_deterministic(o.gate, b);
          } else if constexpr (std::is_same_v<T, TwoBitOp>) {
            auto& a = bits[static_cast<std::size_t>(o.first - 1)];
            auto& b = bits[static_cast<std::size_t>(o.second - 1)];
            const int na = o.gate.A(a, b);
            const int nb = o.gate.B(a, b);
            a = na;
            b = nb;
          } else if constexpr (std::is_same_v<T, InsertOp>) {
            bits.insert(bits.begin() + o.position, o.value);
          } else if constexpr (std::is_same_v<T, RemoveOp>) {
            bits.erase(bits.begin() + (o.index - 1));
          }
        },
        op);
  }
  return bits;
}

namespace oracle_detail {

// Calls visit(x) for each input assignment x with f(x) = target, in
// lexicographic order of input_bits.
template <typename Visit>
void for_each_solution(const Circuit& circuit, const BitAssignment& target, int input_cap, Visit&& visit) {
  const int n_in = static_cast<int>(circuit.input_bits.size());
  if (n_in > input_cap)
    throw std::invalid_argument(fmt::format("{} inputs exceeds oracle cap {}", n_in, input_cap));
  if (!circuit.deterministic())
    throw std::invalid_argument("circuit has stochastic gates beyond input randomization");
  target.check_range(circuit.final_bits());
  std::vector<int> x(static_cast<std::size_t>(n_in));
  for (std::uint64_t k = 0; k < (std::uint64_t{1} << n_in); ++k) {
    for (int b = 0; b < n_in; ++b) x[static_cast<std::size_t>(b)] = static_cast<int>((k >> (n_in - 1 - b)) & 1U);
    const auto y = oracle_evaluate(circuit, x);
    bool match = true;
    for (const auto& [bit, value] : target)
      if (y[static_cast<std::size_t>(bit - 1)] != value) { match = false; break; }
    if (match) visit(x);
  }
}

}  // namespace oracle_detail

/// Every input assignment x (input_bits order, lexicographic) with f(x) = target.
inline std::vector<std::vector<int>> oracle_solutions(const Circuit& circuit, const BitAssignment& target,
                                                      int input_cap = kOracleBitCap) {
  std::vector<std::vector<int>> out;
  oracle_detail::for_each_solution(circuit, target, input_cap, [&](const std::vector<int>& x) { out.push_back(x); });
  return out;
}

/// Exhaustive count of inputs with f(x) = target. Only the initial input
/// randomization may be stochastic.
inline std::uint64_t oracle_count(const Circuit& circuit, const BitAssignment& target,
                                  int input_cap = kOracleBitCap) {
  std::uint64_t count = 0;
  oracle_detail::for_each_solution(circuit, target, input_cap, [&](const std::vector<int>&) { ++count; });
  return count;
}

}  // namespace mpsim
