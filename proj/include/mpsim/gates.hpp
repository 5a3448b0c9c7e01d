#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/SVD>
#include <fmt/format.h>

#include "mpsim/errors.hpp"
#include "mpsim/heights.hpp"
#include "mpsim/mps_state.hpp"

namespace mpsim {

/// Probabilistic one-bit gate: 0 -> 0 with probability p, 1 -> 1 with
/// probability q.
struct OneBitGate {
  double p = 1.0;
  double q = 1.0;
  std::string name;  // empty for an anonymous pgate

  /// t^{out,in}
  double transfer(int out, int in) const {
    if (in == 0) return out == 0 ? p : 1.0 - p;
    return out == 1 ? q : 1.0 - q;
  }

  bool deterministic() const noexcept {
    return (p == 0.0 || p == 1.0) && (q == 0.0 || q == 1.0);
  }

  friend bool operator==(const OneBitGate&, const OneBitGate&) = default;
};

namespace one_bit {
inline OneBitGate make(double p, double q) {
  if (!(p >= 0.0 && p <= 1.0) || !(q >= 0.0 && q <= 1.0))
    throw std::invalid_argument(fmt::format("gate probabilities ({}, {}) outside [0, 1]", p, q));
  return OneBitGate{p, q, {}};
}
inline OneBitGate NOT() { return {0.0, 0.0, "NOT"}; }
inline OneBitGate RAND() { return {0.5, 0.5, "RAND"}; }
inline OneBitGate RST() { return {1.0, 0.0, "RST"}; }
inline OneBitGate SET() { return {0.0, 1.0, "SET"}; }

inline std::optional<OneBitGate> builtin(const std::string& name) {
  if (name == "NOT") return NOT();
  if (name == "RAND") return RAND();
  if (name == "RST") return RST();
  if (name == "SET") return SET();
  return std::nullopt;
}
}  // namespace one_bit

/// Deterministic two-bit gate (a, b) -> (A(a, b), B(a, b)). Truth tables are
/// indexed by 2a + b.
struct TwoBitGate {
  std::array<int, 4> logic_a{0, 0, 1, 1};
  std::array<int, 4> logic_b{0, 1, 0, 1};
  std::string name = "ID";

  int A(int a, int b) const { return logic_a[static_cast<std::size_t>(2 * a + b)]; }
  int B(int a, int b) const { return logic_b[static_cast<std::size_t>(2 * a + b)]; }

  /// T^{a'b', ab}: 1 iff a' = A(a,b) and b' = B(a,b).
  int transfer(int a_out, int b_out, int a, int b) const {
    return (A(a, b) == a_out && B(a, b) == b_out) ? 1 : 0;
  }

  /// Same gate with its operands exchanged, so it can act on (b, a).
  TwoBitGate reversed() const {
    TwoBitGate g;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        g.logic_a[static_cast<std::size_t>(2 * a + b)] = B(b, a);
        g.logic_b[static_cast<std::size_t>(2 * a + b)] = A(b, a);
      }
    g.name = name;
    return g;
  }

  friend bool operator==(const TwoBitGate&, const TwoBitGate&) = default;
};

namespace two_bit {
inline TwoBitGate from_functions(std::string name, auto fa, auto fb) {
  TwoBitGate g;
  g.name = std::move(name);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      g.logic_a[static_cast<std::size_t>(2 * a + b)] = fa(a, b);
      g.logic_b[static_cast<std::size_t>(2 * a + b)] = fb(a, b);
    }
  return g;
}

inline TwoBitGate ID() {
  return from_functions("ID", [](int a, int) { return a; }, [](int, int b) { return b; });
}
inline TwoBitGate SWAP() {
  return from_functions("SWAP", [](int, int b) { return b; }, [](int a, int) { return a; });
}
inline TwoBitGate CNAND() {
  return from_functions("CNAND", [](int a, int) { return a; }, [](int a, int b) { return 1 - (a & b); });
}
inline TwoBitGate CAND() {
  return from_functions("CAND", [](int a, int) { return a; }, [](int a, int b) { return a & b; });
}
inline TwoBitGate COR() {
  return from_functions("COR", [](int a, int) { return a; }, [](int a, int b) { return a | b; });
}
inline TwoBitGate CXOR() {
  return from_functions("CXOR", [](int a, int) { return a; }, [](int a, int b) { return a ^ b; });
}
inline TwoBitGate CNOR() {
  return from_functions("CNOR", [](int a, int) { return a; }, [](int a, int b) { return 1 - (a | b); });
}

inline std::optional<TwoBitGate> builtin(const std::string& name) {
  if (name == "ID") return ID();
  if (name == "SWAP") return SWAP();
  if (name == "CNAND") return CNAND();
  if (name == "CAND") return CAND();
  if (name == "COR") return COR();
  if (name == "CXOR") return CXOR();
  if (name == "CNOR") return CNOR();
  return std::nullopt;
}
}  // namespace two_bit

struct SvdConfig {
  double rank_tol = 1e-12;                 // relative to the largest singular value
  std::optional<Eigen::Index> trunc_max_rank;  // lossy cap, off by default

  bool lossy() const noexcept { return trunc_max_rank.has_value(); }
};

/// M^x <- sum_x' t^{x,x'} M^x'. Bond dimensions and heights are untouched.
inline MpsState apply_one_bit(MpsState state, int index, const OneBitGate& gate) {
  if (index < 1 || index > state.bits())
    throw std::out_of_range(fmt::format("one-bit gate index {} out of range 1..{}", index, state.bits()));
  auto& site = state.sites[static_cast<std::size_t>(index - 1)];
  Matrix m0 = gate.transfer(0, 0) * site.m0 + gate.transfer(0, 1) * site.m1;
  Matrix m1 = gate.transfer(1, 0) * site.m0 + gate.transfer(1, 1) * site.m1;
  site.m0 = std::move(m0);
  site.m1 = std::move(m1);
  return state;
}

/// The 2 D_left x 2 D_right matrix whose block (a', b') is
/// sum_{a,b} T^{a'b',ab} M_left^a M_right^b. Row blocks follow the new left
/// bit, column blocks the new right bit.
inline Matrix assemble_gate_blocks(const SiteMatrices& left, const SiteMatrices& right, const TwoBitGate& gate) {
  if (left.cols() != right.rows() || left.m0.cols() != left.m1.cols() || right.m0.rows() != right.m1.rows())
    throw CorruptState(fmt::format("cannot join sites of shape {}x{} and {}x{}", left.rows(), left.cols(),
                                   right.rows(), right.cols()));
  const Eigen::Index dl = left.rows();
  const Eigen::Index dr = right.cols();
  Matrix blocks = Matrix::Zero(2 * dl, 2 * dr);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const int ao = gate.A(a, b);
      const int bo = gate.B(a, b);
      blocks.block(ao * dl, bo * dr, dl, dr).noalias() += left[a] * right[b];
    }
  return blocks;
}

struct SplitResult {
  SiteMatrices left;
  SiteMatrices right;
  bool truncated = false;  // a lossy cap dropped a nonzero singular value
};

/// Factor `blocks` = [L^0; L^1] [R^0 R^1] through an SVD, keeping singular
/// values above rank_tol * sigma_max and splitting sqrt(sigma) into each side.
inline SplitResult svd_split(const Matrix& blocks, const SvdConfig& cfg = {}) {
  if (blocks.rows() % 2 != 0 || blocks.cols() % 2 != 0 || blocks.size() == 0)
    throw CorruptState(fmt::format("block matrix {}x{} is not 2x2 blocked", blocks.rows(), blocks.cols()));
  if (!blocks.allFinite()) throw CorruptState("block matrix has non-finite entries");

  Eigen::BDCSVD<Matrix> svd(blocks, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sigma = svd.singularValues();
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  if (!(sigma_max > 0.0)) throw CorruptState("two-bit gate produced an all-zero block matrix");

  Eigen::Index rank = 0;
  while (rank < sigma.size() && sigma(rank) > cfg.rank_tol * sigma_max) ++rank;
  rank = std::max<Eigen::Index>(rank, 1);
  SplitResult out;
  if (cfg.trunc_max_rank && rank > *cfg.trunc_max_rank) {
    rank = std::max<Eigen::Index>(*cfg.trunc_max_rank, 1);
    out.truncated = true;
  }

  const Eigen::ArrayXd root = sigma.head(rank).array().sqrt();
  const Matrix lhs = svd.matrixU().leftCols(rank) * root.matrix().asDiagonal();
  const Matrix rhs = root.matrix().asDiagonal() * svd.matrixV().leftCols(rank).transpose();

  const Eigen::Index dl = blocks.rows() / 2;
  const Eigen::Index dr = blocks.cols() / 2;
  out.left.m0 = lhs.topRows(dl);
  out.left.m1 = lhs.bottomRows(dl);
  out.right.m0 = rhs.leftCols(dr);
  out.right.m1 = rhs.rightCols(dr);
  return out;
}

namespace detail {
inline void replace_pair(MpsState& state, int left_index, const TwoBitGate& gate, const SvdConfig& cfg) {
  auto& left = state.sites[static_cast<std::size_t>(left_index - 1)];
  auto& right = state.sites[static_cast<std::size_t>(left_index)];
  auto split = svd_split(assemble_gate_blocks(left, right, gate), cfg);
  left = std::move(split.left);
  right = std::move(split.right);
  state.approximate = state.approximate || split.truncated;
  state.note_bond_dims();
}
}  // namespace detail

/// Deterministic gate on bits (left_index, left_index + 1).
inline MpsState apply_two_bit(MpsState state, int left_index, const TwoBitGate& gate, const SvdConfig& cfg = {}) {
  if (left_index < 1 || left_index > state.bits() - 1)
    throw std::out_of_range(
        fmt::format("two-bit gate left index {} out of range 1..{}", left_index, state.bits() - 1));
  detail::replace_pair(state, left_index, gate, cfg);
  update_on_gate(state.profile, left_index);
  return state;
}

/// Identity gates on (1,2) ... (n-1,n) then back down to (1,2). Bond
/// dimensions settle at the numerical ranks of the distribution; tracked
/// heights are rebuilt from them. Every identity gate counts toward n_g.
inline MpsState recompress_sweeps(MpsState state, const SvdConfig& cfg = {}) {
  const int n = state.bits();
  if (n < 2) {
    state.profile.stale = false;
    return state;
  }
  const TwoBitGate id = two_bit::ID();
  for (int j = 1; j <= n - 1; ++j) detail::replace_pair(state, j, id, cfg);
  for (int j = n - 1; j >= 1; --j) detail::replace_pair(state, j, id, cfg);
  state.profile.gate_count += 2 * static_cast<std::int64_t>(n - 1);
  const auto dims = state.bond_dims();
  recompute_from_dims(state.profile, dims);
  return state;
}

}  // namespace mpsim
