#pragma once

#include <cstddef>
#include <initializer_list>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

#include <fmt/format.h>

namespace mpsim {

/// Partial assignment of bit values, keyed by 1-based bit index.
class BitAssignment {
public:
  using map_type = std::map<int, int>;
  using const_iterator = map_type::const_iterator;

  BitAssignment() = default;
  BitAssignment(std::initializer_list<std::pair<const int, int>> entries) {
    for (const auto& [bit, value] : entries) set(bit, value);
  }

  void set(int bit, int value) {
    if (bit < 1) throw std::out_of_range(fmt::format("bit index {} must be >= 1", bit));
    if (value != 0 && value != 1)
      throw std::invalid_argument(fmt::format("bit value {} is not 0 or 1", value));
    entries_[bit] = value;
  }

  void erase(int bit) { entries_.erase(bit); }

  bool contains(int bit) const { return entries_.count(bit) != 0; }

  /// Value at `bit`, or -1 if unconstrained.
  int get(int bit) const {
    auto it = entries_.find(bit);
    return it == entries_.end() ? -1 : it->second;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const_iterator begin() const noexcept { return entries_.begin(); }
  const_iterator end() const noexcept { return entries_.end(); }

  /// Largest constrained index, 0 when empty.
  int max_index() const noexcept { return entries_.empty() ? 0 : entries_.rbegin()->first; }

  /// Throws std::out_of_range when any index exceeds n.
  void check_range(int n) const {
    if (max_index() > n)
      throw std::out_of_range(fmt::format("bit index {} out of range 1..{}", max_index(), n));
  }

  /// "1=0,3=1" form, ascending by index.
  std::string to_string() const {
    std::string out;
    for (const auto& [bit, value] : entries_) {
      if (!out.empty()) out += ',';
      out += fmt::format("{}={}", bit, value);
    }
    return out;
  }

  friend bool operator==(const BitAssignment&, const BitAssignment&) = default;

private:
  map_type entries_;
};

}  // namespace mpsim
