#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mra {

// Signed index into Z_L in the standard parametrization
// {floor(-(L-1)/2), ..., floor((L-1)/2)}.
using Index = long;

Index first_index(std::size_t length);
Index last_index(std::size_t length);
// Representative of i in [0, L).
Index residue(Index i, std::size_t length);
// Representative of i in the standard parametrization.
Index standard(Index i, std::size_t length);

// Real function on Z_L. Values are stored in standard-parametrization order,
// so values()[0] holds index first_index(L).
class Signal {
 public:
  Signal() = default;
  explicit Signal(std::size_t length);
  explicit Signal(std::vector<double> values);

  static Signal delta(std::size_t length, Index at, double value = 1.0);
  static Signal from_support(std::size_t length, std::span<const Index> support,
                             std::span<const double> values);

  std::size_t size() const { return values_.size(); }
  Index first() const { return first_index(size()); }
  Index last() const { return last_index(size()); }

  double operator()(Index i) const { return values_[slot(i)]; }
  double& operator()(Index i) { return values_[slot(i)]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  // Indices with nonzero value, ascending.
  std::vector<Index> support() const;
  double sum() const;
  double mean() const;
  double squared_norm() const;
  double norm() const;

  Signal& operator+=(const Signal& other);
  Signal& operator-=(const Signal& other);
  Signal& operator*=(double scale);

  bool operator==(const Signal& other) const = default;

 private:
  std::size_t slot(Index i) const;
  std::vector<double> values_;
};

Signal operator+(Signal a, const Signal& b);
Signal operator-(Signal a, const Signal& b);
Signal operator*(double scale, Signal a);
double dot(const Signal& a, const Signal& b);

enum class GroupKind { cyclic, dihedral };

// x -> flip ? -(x + shift) : x + shift acting on indices, so that
// [g . v](i) = v(i + g) for a pure shift and reflection sends v(i) to v(-i).
struct GroupElement {
  Index shift = 0;
  bool flip = false;
  bool operator==(const GroupElement&) const = default;
};

// act(compose(a, b), v) == act(a, act(b, v)).
GroupElement compose(GroupElement a, GroupElement b, std::size_t length);
GroupElement inverse(GroupElement a, std::size_t length);

std::size_t group_order(std::size_t length, GroupKind kind);
// Shifts 0..L-1 first, then the reflected elements when dihedral. This is the
// order used by orbit_inner_products.
std::vector<GroupElement> group_elements(std::size_t length, GroupKind kind);

Signal shift(const Signal& v, Index g);
Signal reflect(const Signal& v);
Signal act(GroupElement g, const Signal& v);

// <y, G theta> for every group element, in group_elements order. y is a
// length-L vector in standard order. Uses direct summation for L <= 64, in
// which case the result is a bit-exact permutation under theta -> G theta.
std::vector<double> orbit_inner_products(std::span<const double> y, const Signal& theta,
                                         GroupKind kind = GroupKind::cyclic);

struct OrbitMatch {
  double distance = 0.0;
  GroupElement element;  // minimizer of ||theta - G phi||
};

OrbitMatch rho(const Signal& theta, const Signal& phi, GroupKind kind = GroupKind::cyclic);
double varrho(const Signal& theta, const Signal& phi, GroupKind kind = GroupKind::cyclic);

// Enumerates every group element; used as an oracle.
OrbitMatch rho_brute_force(const Signal& theta, const Signal& phi,
                           GroupKind kind = GroupKind::cyclic);

}  // namespace mra
