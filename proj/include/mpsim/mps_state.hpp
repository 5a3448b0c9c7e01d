#pragma once

// Matrix-product representation of a probability distribution over n bits:
//
//   P(x_1 ... x_n) = M_1^{x_1} M_2^{x_2} ... M_n^{x_n}
//
// with M_1 a row vector and M_n a column vector (open boundaries, D_0 = D_n = 1).

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "mpsim/bit_assignment.hpp"
#include "mpsim/errors.hpp"
#include "mpsim/heights.hpp"

namespace mpsim {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

/// The pair (M^0, M^1) for one bit.
struct SiteMatrices {
  Matrix m0;
  Matrix m1;

  Eigen::Index rows() const noexcept { return m0.rows(); }
  Eigen::Index cols() const noexcept { return m0.cols(); }

  const Matrix& operator[](int value) const { return value == 0 ? m0 : m1; }
  Matrix& operator[](int value) { return value == 0 ? m0 : m1; }

  /// M^0 + M^1, the site with its bit traced out.
  Matrix traced() const { return m0 + m1; }

  static SiteMatrices scalar(double v0, double v1) {
    SiteMatrices s{Matrix(1, 1), Matrix(1, 1)};
    s.m0(0, 0) = v0;
    s.m1(0, 0) = v1;
    return s;
  }
};

struct MpsState {
  std::vector<SiteMatrices> sites;
  HeightProfile profile;
  std::size_t peak_bond_dim = 1;
  // Set once a lossy rank cap has discarded singular values.
  bool approximate = false;

  int bits() const noexcept { return static_cast<int>(sites.size()); }
  std::int64_t gate_count() const noexcept { return profile.gate_count; }
  const std::vector<int>& tracked_heights() const noexcept { return profile.heights; }

  /// D_0..D_n.
  std::vector<std::size_t> bond_dims() const {
    std::vector<std::size_t> dims;
    dims.reserve(sites.size() + 1);
    dims.push_back(sites.empty() ? 1 : static_cast<std::size_t>(sites.front().rows()));
    for (const auto& s : sites) dims.push_back(static_cast<std::size_t>(s.cols()));
    return dims;
  }

  std::size_t max_bond_dim() const {
    std::size_t d = 1;
    for (const auto& s : sites) d = std::max(d, static_cast<std::size_t>(s.cols()));
    return d;
  }

  void note_bond_dims() { peak_bond_dim = std::max(peak_bond_dim, max_bond_dim()); }

  /// Throws CorruptState on a broken chain.
  void validate() const {
    if (sites.empty()) throw CorruptState("state has no bits");
    if (profile.heights.size() != sites.size() + 1)
      throw CorruptState("height profile length does not match bit count");
    if (sites.front().rows() != 1 || sites.back().cols() != 1)
      throw CorruptState("boundary bond dimensions must be 1");
    for (std::size_t j = 0; j < sites.size(); ++j) {
      const auto& s = sites[j];
      if (s.m0.rows() != s.m1.rows() || s.m0.cols() != s.m1.cols())
        throw CorruptState(fmt::format("bit {}: M^0 and M^1 differ in shape", j + 1));
      if (j + 1 < sites.size() && s.cols() != sites[j + 1].rows())
        throw CorruptState(fmt::format("bond {} dimension mismatch ({} vs {})", j + 1, s.cols(),
                                       sites[j + 1].rows()));
    }
  }
};

/// Product state: free bits uniform, fixed bits pinned to their value.
inline MpsState init_state(int n, const BitAssignment& fixed = {}) {
  if (n < 1) throw std::invalid_argument(fmt::format("bit count {} must be positive", n));
  fixed.check_range(n);
  MpsState state;
  state.sites.reserve(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) {
    switch (fixed.get(j)) {
      case 0: state.sites.push_back(SiteMatrices::scalar(1.0, 0.0)); break;
      case 1: state.sites.push_back(SiteMatrices::scalar(0.0, 1.0)); break;
      default: state.sites.push_back(SiteMatrices::scalar(0.5, 0.5)); break;
    }
  }
  state.profile = HeightProfile::flat(n);
  return state;
}

/// Marginal probability of the constrained bits. Unconstrained bits are
/// summed out through M^0 + M^1. Contraction runs as a row vector swept
/// left to right, O(n D^2).
inline double evaluate_probability(const MpsState& state, const BitAssignment& constraint = {}) {
  state.validate();
  constraint.check_range(state.bits());
  RowVector acc = RowVector::Ones(1);
  for (int j = 1; j <= state.bits(); ++j) {
    const auto& site = state.sites[static_cast<std::size_t>(j - 1)];
    const int v = constraint.get(j);
    if (v < 0)
      acc = acc * site.traced();
    else
      acc = acc * site[v];
  }
  return acc(0);
}

/// Insert a bit with a pinned value after bit `position` (0 prepends). The
/// new site is identity/zero of the cut's bond dimension.
inline MpsState insert_bit(MpsState state, int position, int value) {
  const int n = state.bits();
  if (position < 0 || position > n)
    throw std::out_of_range(fmt::format("insert position {} out of range 0..{}", position, n));
  if (value != 0 && value != 1) throw std::invalid_argument("inserted bit value must be 0 or 1");
  const auto dims = state.bond_dims();
  const auto d = static_cast<Eigen::Index>(dims[static_cast<std::size_t>(position)]);
  SiteMatrices site{Matrix::Zero(d, d), Matrix::Zero(d, d)};
  site[value] = Matrix::Identity(d, d);
  state.sites.insert(state.sites.begin() + position, std::move(site));
  insert_cut(state.profile, position);
  return state;
}

/// Trace out bit `index`, absorbing it into its right neighbour (left
/// neighbour for the last bit). Tracked heights are stale afterwards; run
/// recompress_sweeps to restore them.
inline MpsState remove_bit(MpsState state, int index) {
  const int n = state.bits();
  if (n < 2) throw std::invalid_argument("cannot remove a bit from a 1-bit state");
  if (index < 1 || index > n)
    throw std::out_of_range(fmt::format("remove index {} out of range 1..{}", index, n));
  const auto pos = static_cast<std::size_t>(index - 1);
  const Matrix traced = state.sites[pos].traced();
  if (index == n) {
    auto& left = state.sites[pos - 1];
    left.m0 = left.m0 * traced;
    left.m1 = left.m1 * traced;
  } else {
    auto& right = state.sites[pos + 1];
    right.m0 = traced * right.m0;
    right.m1 = traced * right.m1;
  }
  state.sites.erase(state.sites.begin() + static_cast<std::ptrdiff_t>(pos));
  remove_cut(state.profile, index);
  return state;
}

/// All 2^n probabilities, bit 1 as the most significant bit of the index.
inline std::vector<double> full_distribution(const MpsState& state, int max_bits = 24) {
  state.validate();
  const int n = state.bits();
  if (n > max_bits)
    throw std::invalid_argument(fmt::format("{} bits exceeds dense cap {}", n, max_bits));
  // Row i of `prefix` is the partial product for prefix bit string i.
  Matrix prefix = Matrix::Ones(1, 1);
  for (const auto& site : state.sites) {
    Matrix next(prefix.rows() * 2, site.cols());
    for (Eigen::Index i = 0; i < prefix.rows(); ++i) {
      next.row(2 * i) = prefix.row(i) * site.m0;
      next.row(2 * i + 1) = prefix.row(i) * site.m1;
    }
    prefix = std::move(next);
  }
  return std::vector<double>(prefix.data(), prefix.data() + prefix.size());
}

}  // namespace mpsim
