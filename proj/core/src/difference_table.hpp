#pragma once

#include <vector>

#include "mra/ring.hpp"

namespace mra::detail {

// Incremental collision-free point set. Adding x keeps the set collision free
// iff no difference x - p is already used and the new differences are
// distinct among themselves; the latter fails exactly when 2x = p + q for
// points p, q (p == q covers the self-inverse difference L/2).
class DifferenceTable {
 public:
  explicit DifferenceTable(std::size_t length)
      : length_(length), used_(length, 0), member_(length, 0), pair_sum_(length, 0) {}

  bool can_add(Index x) const {
    const Index rx = residue(x, length_);
    if (member_[rx] || pair_sum_[residue(2 * rx, length_)]) return false;
    for (Index p : points_)
      if (used_[residue(rx - p, length_)]) return false;
    return true;
  }

  bool try_add(Index x) {
    if (!can_add(x)) return false;
    const Index rx = residue(x, length_);
    for (Index p : points_) {
      ++used_[residue(rx - p, length_)];
      ++used_[residue(p - rx, length_)];
      ++pair_sum_[residue(rx + p, length_)];
    }
    ++pair_sum_[residue(2 * rx, length_)];
    member_[rx] = 1;
    points_.push_back(rx);
    return true;
  }

  void pop() {
    const Index rx = points_.back();
    points_.pop_back();
    member_[rx] = 0;
    --pair_sum_[residue(2 * rx, length_)];
    for (Index p : points_) {
      --used_[residue(rx - p, length_)];
      --used_[residue(p - rx, length_)];
      --pair_sum_[residue(rx + p, length_)];
    }
  }

  std::size_t size() const { return points_.size(); }
  const std::vector<Index>& points() const { return points_; }

 private:
  std::size_t length_;
  std::vector<int> used_;
  std::vector<char> member_;
  std::vector<int> pair_sum_;
  std::vector<Index> points_;
};

}  // namespace mra::detail
