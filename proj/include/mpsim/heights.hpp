#pragma once

// Worst-case entanglement heights h_j = log2 D_j and the bond-dimension
// bounds that follow from the height difference constraint (hdc).

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstddef>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mpsim/errors.hpp"

namespace mpsim {

/// Snapshot taken after one executed operation.
struct StepRecord {
  std::size_t step = 0;
  std::string op;
  std::vector<int> heights;             // h_0..h_n
  std::vector<std::size_t> bond_dims;   // D_0..D_n
  std::int64_t gate_count = 0;
};

struct HeightProfile {
  std::vector<int> heights;  // h_0..h_n
  std::int64_t gate_count = 0;
  // Set by bit removal; heights may violate the hdc until the next sweep.
  bool stale = false;
  std::vector<StepRecord> log;

  static HeightProfile flat(int n) {
    HeightProfile p;
    p.heights.assign(static_cast<std::size_t>(n) + 1, 0);
    return p;
  }

  int bits() const noexcept { return static_cast<int>(heights.size()) - 1; }
};

/// Smallest h with 2^h >= dim (dim >= 1).
inline int ceil_log2(std::size_t dim) {
  int h = 0;
  while ((std::size_t{1} << h) < dim) ++h;
  return h;
}

inline std::int64_t isqrt(std::int64_t v) {
  if (v <= 0) return 0;
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(v)));
  while (r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

/// floor(sqrt(2 n_g)) capped by floor(n/2).
inline int max_height_bound(int n, std::int64_t gate_count) {
  return static_cast<int>(std::min<std::int64_t>(isqrt(2 * gate_count), n / 2));
}

/// min(2^floor(sqrt(2 n_g)), 2^floor(n/2)).
inline std::uint64_t max_bond_dim_bound(int n, std::int64_t gate_count) {
  int h = max_height_bound(n, gate_count);
  return h >= 63 ? UINT64_MAX : (std::uint64_t{1} << h);
}

inline bool satisfies_hdc(std::span<const int> heights) {
  for (std::size_t j = 1; j < heights.size(); ++j)
    if (std::abs(heights[j] - heights[j - 1]) > 1) return false;
  return true;
}

/// Two-bit gate on bits (cut, cut+1): h_cut <- min(min(h_{cut-1}, h_{cut+1}) + 1, min(cut, n - cut)).
inline void update_on_gate(HeightProfile& profile, int cut) {
  const int n = profile.bits();
  if (cut < 1 || cut > n - 1)
    throw std::out_of_range(fmt::format("gate cut {} out of range 1..{}", cut, n - 1));
  auto& h = profile.heights;
  const int grown = std::min(h[cut - 1], h[cut + 1]) + 1;
  h[cut] = std::min(grown, std::min(cut, n - cut));
  profile.gate_count += 1;
  if (!profile.stale && !satisfies_hdc(h))
    throw InvariantFailure(fmt::format("hdc violated after gate at cut {}", cut));
}

/// New bit inserted after bit `position`: the cut height is duplicated.
inline void insert_cut(HeightProfile& profile, int position) {
  auto& h = profile.heights;
  h.insert(h.begin() + position, h[position]);
}

/// Bit `index` traced out. The dropped cut is the one shared with the
/// neighbour that absorbs the bit.
inline void remove_cut(HeightProfile& profile, int index) {
  const int n = profile.bits();
  auto& h = profile.heights;
  const int dropped = index == n ? n - 1 : index;
  h.erase(h.begin() + dropped);
  profile.stale = true;
}

/// Replace tracked heights by ceil(log2 D_j) lifted to the lowest profile
/// that dominates them and satisfies the hdc. Clears the stale flag.
inline void recompute_from_dims(HeightProfile& profile, std::span<const std::size_t> bond_dims) {
  const std::size_t cuts = bond_dims.size();
  std::vector<int> raw(cuts);
  for (std::size_t j = 0; j < cuts; ++j) raw[j] = ceil_log2(bond_dims[j]);
  std::vector<int> lifted(raw);
  for (std::size_t j = 1; j < cuts; ++j) lifted[j] = std::max(lifted[j], lifted[j - 1] - 1);
  for (std::size_t j = cuts - 1; j-- > 0;) lifted[j] = std::max(lifted[j], lifted[j + 1] - 1);
  profile.heights = std::move(lifted);
  profile.stale = false;
}

inline void record_step(HeightProfile& profile, std::string op, std::vector<std::size_t> bond_dims) {
  StepRecord rec;
  rec.step = profile.log.size();
  rec.op = std::move(op);
  rec.heights = profile.heights;
  rec.bond_dims = std::move(bond_dims);
  rec.gate_count = profile.gate_count;
  profile.log.push_back(std::move(rec));
}

struct BoundReport {
  int n = 0;
  std::int64_t gate_count = 0;
  int h_max = 0;
  int h_max_bound = 0;
  std::int64_t area = 0;
  std::int64_t area_bound = 0;
  std::size_t peak_dim = 0;
  std::uint64_t dim_bound = 0;
  bool hdc = true;
  bool boundary = true;
  bool clamp = true;
  bool dominance = true;
  bool stale = false;
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }
};

/// Check the hdc, the area bound, the h_max bound and dominance of the
/// actual bond dimensions by the tracked heights.
inline BoundReport check_bounds(const HeightProfile& profile, std::span<const std::size_t> bond_dims) {
  BoundReport r;
  const auto& h = profile.heights;
  r.n = profile.bits();
  r.gate_count = profile.gate_count;
  r.stale = profile.stale;
  for (int hj : h) {
    r.h_max = std::max(r.h_max, hj);
    r.area += hj;
  }
  r.h_max_bound = max_height_bound(r.n, r.gate_count);
  r.area_bound = 2 * r.gate_count;
  r.dim_bound = max_bond_dim_bound(r.n, r.gate_count);
  for (std::size_t d : bond_dims) r.peak_dim = std::max(r.peak_dim, d);

  if (r.stale) r.violations.push_back("heights are stale (bit removed without sweep)");
  if (h.empty() || h.front() != 0 || h.back() != 0) {
    r.boundary = false;
    r.violations.push_back("boundary heights h_0, h_n must be 0");
  }
  if (!satisfies_hdc(h)) {
    r.hdc = false;
    r.violations.push_back("height difference constraint violated");
  }
  for (int j = 0; j <= r.n; ++j) {
    if (h[j] > std::min(j, r.n - j)) {
      r.clamp = false;
      r.violations.push_back(fmt::format("h_{} = {} exceeds min(j, n-j)", j, h[j]));
    }
  }
  if (r.h_max > r.h_max_bound)
    r.violations.push_back(fmt::format("h_max {} exceeds bound {}", r.h_max, r.h_max_bound));
  if (r.area > r.area_bound)
    r.violations.push_back(fmt::format("sum of heights {} exceeds 2 n_g = {}", r.area, r.area_bound));
  if (bond_dims.size() == h.size()) {
    for (std::size_t j = 0; j < h.size(); ++j) {
      if (ceil_log2(bond_dims[j]) > h[j]) {
        r.dominance = false;
        r.violations.push_back(
            fmt::format("bond dim D_{} = {} exceeds 2^h = 2^{}", j, bond_dims[j], h[j]));
      }
    }
  } else {
    r.dominance = false;
    r.violations.push_back("bond dimension list does not match heights");
  }
  if (r.peak_dim > r.dim_bound)
    r.violations.push_back(fmt::format("peak bond dim {} exceeds bound {}", r.peak_dim, r.dim_bound));
  return r;
}

/// CSV: step,op,h_1..h_{N-1},D_1..D_{N-1},n_g with N the largest bit count
/// seen in the log. Rows from narrower states leave trailing cells empty.
inline std::string export_profile(const HeightProfile& profile) {
  int width = 0;
  for (const auto& rec : profile.log) width = std::max(width, static_cast<int>(rec.heights.size()) - 1);

  std::ostringstream out;
  out << "step,op";
  for (int j = 1; j < width; ++j) out << ",h_" << j;
  for (int j = 1; j < width; ++j) out << ",D_" << j;
  out << ",n_g\n";
  for (const auto& rec : profile.log) {
    const int n = static_cast<int>(rec.heights.size()) - 1;
    out << rec.step << ',' << rec.op;
    for (int j = 1; j < width; ++j) {
      out << ',';
      if (j < n) out << rec.heights[j];
    }
    for (int j = 1; j < width; ++j) {
      out << ',';
      if (j < n) out << rec.bond_dims[j];
    }
    out << ',' << rec.gate_count << '\n';
  }
  return out.str();
}

}  // namespace mpsim
