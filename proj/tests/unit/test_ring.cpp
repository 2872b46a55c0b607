#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "mra/error.hpp"
#include "mra/ring.hpp"

namespace mra {
namespace {

using testing::case_rng;
using testing::random_signal;

TEST(Indexing, StandardParametrization) {
  EXPECT_EQ(first_index(5), -2);
  EXPECT_EQ(last_index(5), 2);
  EXPECT_EQ(first_index(4), -2);
  EXPECT_EQ(last_index(4), 1);
  EXPECT_EQ(residue(-1, 7), 6);
  EXPECT_EQ(standard(6, 7), -1);
  EXPECT_EQ(standard(2, 4), -2);
  for (Index i = -20; i <= 20; ++i) EXPECT_EQ(residue(standard(i, 6), 6), residue(i, 6));
}

TEST(SignalType, SupportIsExactlyTheNonzeroIndices) {
  Signal v(std::vector<double>{0.0, 1.5, 0.0, -2.0, 0.0});
  EXPECT_EQ(v.support(), (std::vector<Index>{-1, 1}));
  v(-1) = 0.0;
  EXPECT_EQ(v.support(), (std::vector<Index>{1}));
  EXPECT_EQ(v(6), v(1));  // indices are taken mod L
}

TEST(Shift, IdentityLeavesSignalUnchanged) {
  const Signal v(std::vector<double>{1, 2, 3, 4});
  EXPECT_EQ(shift(v, 0), v);
}

TEST(Shift, ByOneRotatesStorage) {
  const Signal v(std::vector<double>{1, 2, 3, 4});
  const Signal w = shift(v, 1);
  EXPECT_EQ(std::vector<double>(w.values().begin(), w.values().end()), (std::vector<double>{2, 3, 4, 1}));
}

TEST(Shift, GroupLawAndIsometry) {
  for (int c = 0; c < 200; ++c) {
    Rng rng = case_rng(1, c);
    const std::size_t L = testing::random_length(rng, 1, 40);
    const Signal v = random_signal(L, rng);
    const Index a = testing::random_index(L, rng), b = testing::random_index(L, rng);
    EXPECT_EQ(shift(shift(v, a), b), shift(v, a + b)) << "case " << c;
    EXPECT_NEAR(shift(v, a).norm(), v.norm(), 1e-12 * (1 + v.norm()));
    for (Index i = v.first(); i <= v.last(); ++i) EXPECT_EQ(shift(v, a)(i), v(i + a));
  }
}

TEST(Reflect, SymmetricSignalIsFixed) {
  Rng rng = case_rng(2, 0);
  for (std::size_t L : {3u, 4u, 7u, 10u}) {
    const Signal v = testing::random_symmetric_signal(L, rng);
    EXPECT_EQ(reflect(v), v);
  }
}

TEST(Reflect, IsAnInvolution) {
  for (int c = 0; c < 100; ++c) {
    Rng rng = case_rng(3, c);
    const Signal v = random_signal(testing::random_length(rng, 1, 30), rng);
    EXPECT_EQ(reflect(reflect(v)), v);
  }
}

TEST(Reflect, MovesDeltaToNegatedIndex) {
  EXPECT_EQ(reflect(Signal::delta(5, 1)), Signal::delta(5, -1));
}

TEST(Group, ComposeMatchesSuccessiveActions) {
  for (int c = 0; c < 200; ++c) {
    Rng rng = case_rng(4, c);
    const std::size_t L = testing::random_length(rng, 2, 20);
    const Signal v = random_signal(L, rng);
    const GroupElement a{testing::random_index(L, rng), c % 2 == 0};
    const GroupElement b{testing::random_index(L, rng), c % 3 == 0};
    EXPECT_EQ(act(compose(a, b, L), v), act(a, act(b, v))) << "case " << c;
    EXPECT_EQ(act(compose(a, inverse(a, L), L), v), v);
  }
}

TEST(Group, ElementsAreDistinctAndComplete) {
  EXPECT_EQ(group_elements(6, GroupKind::cyclic).size(), 6u);
  const auto d = group_elements(6, GroupKind::dihedral);
  EXPECT_EQ(d.size(), 12u);
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = i + 1; j < d.size(); ++j) EXPECT_FALSE(d[i] == d[j]);
}

TEST(Rho, ZeroOnOrbit) {
  for (int c = 0; c < 100; ++c) {
    Rng rng = case_rng(5, c);
    const std::size_t L = testing::random_length(rng, 1, 100);
    const Signal v = random_signal(L, rng);
    EXPECT_EQ(rho(v, shift(v, testing::random_index(L, rng))).distance, 0.0) << "case " << c;
    EXPECT_EQ(rho(v, reflect(v), GroupKind::dihedral).distance, 0.0);
  }
}

TEST(Rho, TwoPointExample) {
  const Signal theta(std::vector<double>{1, 0});
  const Signal phi(std::vector<double>{0, 2});
  const OrbitMatch m = rho(theta, phi);
  EXPECT_DOUBLE_EQ(m.distance, 1.0);
  EXPECT_EQ(act(m.element, phi), Signal(std::vector<double>{2, 0}));
  EXPECT_DOUBLE_EQ(varrho(theta, phi), 1.0 / std::sqrt(2.0));
}

TEST(Rho, FrozenValue) {
  // Enumerated independently over all shifts.
  const Signal t(std::vector<double>{0.3, -1.2, 2.0, 0.7, -0.4});
  const Signal p(std::vector<double>{1.1, 0.2, -0.9, 0.5, 1.7});
  EXPECT_NEAR(rho(t, p).distance, 2.222611077089287, 1e-13);
  EXPECT_NEAR(rho(t, p, GroupKind::dihedral).distance, 2.222611077089287, 1e-13);
}

TEST(Rho, MatchesBruteForce) {
  for (int c = 0; c < 200; ++c) {
    Rng rng = case_rng(6, c);
    const std::size_t L = testing::random_length(rng, 1, 150);
    const Signal a = random_signal(L, rng), b = random_signal(L, rng);
    for (GroupKind kind : {GroupKind::cyclic, GroupKind::dihedral}) {
      const double fast = rho(a, b, kind).distance;
      const double slow = rho_brute_force(a, b, kind).distance;
      EXPECT_LE(std::abs(fast - slow), 1e-12 * std::max(1.0, slow)) << "case " << c << " L " << L;
    }
  }
}

TEST(Rho, IsAPseudometric) {
  for (int c = 0; c < 200; ++c) {
    Rng rng = case_rng(7, c);
    const std::size_t L = testing::random_length(rng, 1, 50);
    const Signal a = random_signal(L, rng), b = random_signal(L, rng), d = random_signal(L, rng);
    for (GroupKind kind : {GroupKind::cyclic, GroupKind::dihedral}) {
      const double ab = rho(a, b, kind).distance, ba = rho(b, a, kind).distance;
      EXPECT_NEAR(ab, ba, 1e-12 * (1 + ab));
      EXPECT_LE(ab, rho(a, d, kind).distance + rho(d, b, kind).distance + 1e-12);
    }
  }
}

TEST(Rho, VarrhoIsScaledRho) {
  for (int c = 0; c < 50; ++c) {
    Rng rng = case_rng(8, c);
    const std::size_t L = testing::random_length(rng, 1, 64);
    const Signal a = random_signal(L, rng), b = random_signal(L, rng);
    EXPECT_DOUBLE_EQ(varrho(a, b), rho(a, b).distance / std::sqrt(static_cast<double>(L)));
  }
}

TEST(Rho, LengthMismatchThrows) {
  EXPECT_THROW(rho(Signal(3), Signal(4)), LengthMismatch);
}

TEST(OrbitInnerProducts, PermuteExactlyUnderShift) {
  Rng rng = case_rng(9, 0);
  const std::size_t L = 13;
  const Signal theta = random_signal(L, rng), y = random_signal(L, rng);
  const auto base = orbit_inner_products(y.values(), theta);
  const auto moved = orbit_inner_products(y.values(), shift(theta, 4));
  auto a = base, b = moved;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
  for (std::size_t g = 0; g < L; ++g)
    EXPECT_NEAR(base[g], dot(y, act(group_elements(L, GroupKind::cyclic)[g], theta)), 1e-12);
}

}  // namespace
}  // namespace mra
