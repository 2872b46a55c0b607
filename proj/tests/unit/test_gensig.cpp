#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "generators.hpp"
#include "mra/error.hpp"
#include "mra/gensig.hpp"
#include "mra/signal_io.hpp"
#include "mra/spectral.hpp"

namespace mra {
namespace {

using testing::case_rng;

TEST(DifferenceMultiset, SmallCases) {
  EXPECT_TRUE(difference_multiset(std::vector<Index>{2}, 7).empty());
  EXPECT_EQ(difference_multiset(std::vector<Index>{0, 1}, 5), (DifferenceMultiset{{-1, 1}, {1, 1}}));
  EXPECT_EQ(difference_multiset(std::vector<Index>{0, 1, 3}, 7),
            (DifferenceMultiset{{-3, 1}, {-2, 1}, {-1, 1}, {1, 1}, {2, 1}, {3, 1}}));
}

TEST(CollisionFree, SmallCases) {
  EXPECT_TRUE(is_collision_free(std::vector<Index>{0, 1, 3}, 7));
  EXPECT_FALSE(is_collision_free(std::vector<Index>{0, 1, 2}, 7));
  EXPECT_TRUE(is_collision_free(std::vector<Index>{4}, 9));
  // +1 and -1 coincide in Z_2.
  EXPECT_FALSE(is_collision_free(std::vector<Index>{0, 1}, 2));
  // Planar difference set of order 4.
  EXPECT_TRUE(is_collision_free(std::vector<Index>{0, 1, 4, 14, 16}, 21));
  EXPECT_TRUE(is_collision_free(std::vector<Index>{3, 6, 7, 12, 14}, 21));
}

TEST(CollisionFree, AgreesWithPairwiseDefinition) {
  for (int c = 0; c < 300; ++c) {
    Rng rng = case_rng(40, c);
    const std::size_t L = testing::random_length(rng, 2, 40);
    const std::size_t s = testing::random_length(rng, 1, std::min<std::size_t>(L, 6));
    const auto support = testing::random_support(L, s, rng);
    bool distinct = true;
    std::vector<Index> seen;
    for (Index a : support)
      for (Index b : support)
        if (a != b) seen.push_back(residue(a - b, L));
    std::sort(seen.begin(), seen.end());
    distinct = std::adjacent_find(seen.begin(), seen.end()) == seen.end();
    EXPECT_EQ(is_collision_free(support, L), distinct) << "case " << c;
    std::size_t total = 0;
    for (const auto& [d, m] : difference_multiset(support, L)) {
      EXPECT_NE(residue(d, L), 0);
      total += m;
    }
    EXPECT_EQ(total, s * (s - 1));
  }
}

TEST(DiluteSpec, Admissibility) {
  DiluteClassSpec spec{101, 8, 1.0, 1.5, 1.5};
  EXPECT_TRUE(spec.admissible());
  EXPECT_NEAR(spec.max_slack(), 8.0 / 2.25 - 2.0, 1e-15);
  spec.slack = 2.0;
  EXPECT_FALSE(spec.admissible());
  EXPECT_NO_THROW(spec.validate_feasible());
  EXPECT_THROW((DiluteClassSpec{20, 5, 1.0, 1.0, 0.0}.validate_feasible()), InvalidArgument);
  EXPECT_THROW((DiluteClassSpec{20, 2, 2.0, 1.0, 0.0}.validate_feasible()), InvalidArgument);
}

TEST(GenCollisionFree, SingleSpike) {
  Rng rng = case_rng(41, 0);
  const Signal v = gen_collision_free({9, 1, 0.5, 2.0, 0.0}, rng);
  ASSERT_EQ(v.support().size(), 1u);
  const double a = std::fabs(v(v.support()[0]));
  EXPECT_GE(a, 0.5);
  EXPECT_LE(a, 2.0);
}

TEST(GenCollisionFree, OutputsAreInClass) {
  for (int c = 0; c < 300; ++c) {
    Rng rng = case_rng(42, c);
    const std::size_t s = 1 + c % 8;
    const DiluteClassSpec spec{101, s, 1.0, 1.5, 0.0};
    const Signal v = gen_collision_free(spec, rng);
    const auto support = v.support();
    EXPECT_EQ(support.size(), s);
    EXPECT_TRUE(is_collision_free(support, 101));
    for (Index i : support) {
      EXPECT_GE(std::fabs(v(i)), 1.0);
      EXPECT_LE(std::fabs(v(i)), 1.5);
    }
  }
}

TEST(GenCollisionFree, ThousandDrawsAtLength101) {
  Rng rng = case_rng(43, 0);
  std::size_t attempts = 0;
  for (int c = 0; c < 1000; ++c) {
    CollisionFreeStats stats;
    const auto support = random_collision_free_support(101, 5, rng, &stats);
    EXPECT_TRUE(is_collision_free(support, 101));
    EXPECT_FALSE(stats.used_greedy);
    attempts += stats.rejection_attempts;
  }
  // About 61% of uniform 5-subsets of Z_101 are collision-free, so the mean
  // attempt count sits near 1.65.
  const double mean = static_cast<double>(attempts) / 1000.0;
  EXPECT_GT(mean, 1.2);
  EXPECT_LT(mean, 2.4);
}

TEST(GenCollisionFree, PerfectDifferenceSetCapacity) {
  Rng rng = case_rng(44, 0);
  CollisionFreeStats stats;
  // s(s-1) = 20 = L - 1: only perfect difference sets qualify.
  const auto support = random_collision_free_support(21, 5, rng, &stats);
  EXPECT_TRUE(is_collision_free(support, 21));
  EXPECT_EQ(support.size(), 5u);
}

TEST(SymmetricBernoulliGaussian, ExactSymmetry) {
  for (int c = 0; c < 200; ++c) {
    Rng rng = case_rng(45, c);
    const std::size_t L = testing::random_length(rng, 2, 200);
    const auto f = gen_symm_bernoulli_gaussian(L, std::max(1.0, L / 8.0), 1.3, rng);
    EXPECT_EQ(reflect(f.signal), f.signal);
    EXPECT_EQ(f.empty_support, f.signal.support().empty());
  }
}

TEST(SymmetricBernoulliGaussian, PositivePartSizeHasBinomialMean) {
  const std::size_t L = 101, draws = 10000;
  const double s = 20.0;
  const double half = static_cast<double>(last_index(L) + 1);  // indices 0..50
  double sum = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    Rng rng = case_rng(46, d);
    const auto f = gen_symm_bernoulli_gaussian(L, s, 1.0, rng);
    for (Index i : f.signal.support()) sum += i >= 0 ? 1.0 : 0.0;
  }
  const double p = s / L, mean = sum / draws;
  const double se = std::sqrt(half * p * (1 - p) / draws);
  EXPECT_LE(std::abs(mean - half * p), 3.0 * se);
}

TEST(SymmetricBernoulliGaussian, TypicallySparseAtLength4096) {
  std::size_t pass = 0;
  for (int d = 0; d < 200; ++d) {
    Rng rng = case_rng(47, d);
    const auto f = gen_symm_bernoulli_gaussian(4096, 64, 1.0, rng);
    pass += check_typically_sparse(f.signal.support().size(), 64, 0.5, 2.0) ? 1 : 0;
  }
  EXPECT_GE(pass, 190u);
}

TEST(SymmetricBernoulliGaussian, SpectrumVarianceMatchesCosineFunctional) {
  // hat f(xi) ~ N(0, zeta^2 V(Xi, xi)) for a fixed symmetric support.
  const std::size_t L = 31;
  const std::vector<Index> xi{-7, -3, 0, 3, 7};
  const double zeta = 0.8;
  const std::size_t draws = 20000;
  std::vector<double> sum2(L, 0.0);
  Rng rng = case_rng(48, 0);
  for (std::size_t d = 0; d < draws; ++d) {
    Signal f(L);
    for (Index k : {0, 3, 7}) {
      const double v = zeta * standard_normal(rng);
      f(k) = v;
      f(-k) = v;
    }
    const Spectrum s = dft(f);
    for (Index a = first_index(L); a <= last_index(L); ++a) sum2[residue(a, L)] += std::norm(s(a));
  }
  for (Index a = first_index(L); a <= last_index(L); ++a) {
    const double want = zeta * zeta * cosine_functional(xi, a, L);
    // The sample variance of a centred Gaussian has relative SE sqrt(2 / n).
    EXPECT_LE(std::abs(sum2[residue(a, L)] / draws - want), 4.0 * want * std::sqrt(2.0 / draws) + 1e-12) << a;
  }
}

TEST(SymmetricInterval, SupportAndVariance) {
  Rng rng = case_rng(49, 0);
  const Signal v = gen_symm_interval(21, 4, 1.0, rng);
  EXPECT_EQ(reflect(v), v);
  EXPECT_EQ(v.support().size(), 9u);
  EXPECT_EQ(v.support().front(), -4);
  EXPECT_THROW(gen_symm_interval(8, 4, 1.0, rng), InvalidArgument);
  const double zeta = 1.7;
  double s2 = 0.0;
  const int draws = 5000;
  for (int d = 0; d < draws; ++d) {
    const Signal w = gen_symm_interval(21, 4, zeta, rng);
    for (Index i = 0; i <= 4; ++i) s2 += w(i) * w(i);
  }
  const double n = 5.0 * draws, var = s2 / n;
  EXPECT_LE(std::abs(var - zeta * zeta), 3.0 * zeta * zeta * std::sqrt(2.0 / n));
}

TEST(CosineFunctional, SmallCases) {
  for (Index a = -5; a <= 5; ++a) EXPECT_EQ(cosine_functional(std::vector<Index>{0}, a, 11), 1.0);
  EXPECT_EQ(cosine_functional(std::vector<Index>{-2, 0, 1, 3}, 0, 11), 7.0);
  EXPECT_EQ(cosine_functional(std::vector<Index>{-2, 1, 3}, 0, 11), 6.0);
  EXPECT_NEAR(cosine_functional(std::vector<Index>{-2, 0, 1, 3}, 2, 11), 4.044077960612611, 1e-13);
}

TEST(CosineFunctional, EvenAndPeriodicExactly) {
  for (int c = 0; c < 100; ++c) {
    Rng rng = case_rng(50, c);
    const std::size_t L = testing::random_length(rng, 2, 500);
    const auto xi = testing::random_support(L, std::min<std::size_t>(L, 10), rng);
    const Index a = testing::random_index(L, rng);
    const double v = cosine_functional(xi, a, L);
    EXPECT_EQ(v, cosine_functional(xi, -a, L));
    EXPECT_EQ(v, cosine_functional(xi, a + static_cast<Index>(L), L));
  }
}

TEST(CosineGeneric, IntervalSupport) {
  std::vector<Index> xi;
  for (Index k = -32; k <= 32; ++k) xi.push_back(k);
  const auto g = check_cosine_generic(xi, 4096, 2.0);
  EXPECT_TRUE(g.generic);
  EXPECT_GE(g.min_value, 2.0);
  EXPECT_EQ(g.min_value, cosine_functional(xi, g.argmin, 4096));
  EXPECT_FALSE(check_cosine_generic(xi, 4096, g.min_value * 1.0001).generic);
}

TEST(TypicallySparse, Bounds) {
  EXPECT_TRUE(check_typically_sparse(5, 5, 1.0, 1.0));
  EXPECT_FALSE(check_typically_sparse(0, 5, 0.5, 2.0));
  EXPECT_FALSE(check_typically_sparse(11, 5, 0.5, 2.0));
}

TEST(SignalJson, BitExactRoundTrip) {
  for (int c = 0; c < 50; ++c) {
    Rng rng = case_rng(51, c);
    const std::size_t L = testing::random_length(rng, 1, 60);
    Signal v = testing::random_signal(L, rng);
    v(v.first()) = 0.0;
    const nlohmann::json j = signal_to_json(v);
    EXPECT_EQ(j["format"], "standard-parametrization");
    EXPECT_EQ(j["L"], L);
    EXPECT_EQ(signal_from_json(nlohmann::json::parse(j.dump())), v);
  }
}

TEST(SignalJson, SparseValuesAndErrors) {
  const nlohmann::json sparse = {{"L", 7}, {"format", "standard-parametrization"}, {"support", {-1, 2}}, {"values", {0.5, -3.0}}};
  const Signal v = signal_from_json(sparse);
  EXPECT_EQ(v.support(), (std::vector<Index>{-1, 2}));
  EXPECT_EQ(v(2), -3.0);
  nlohmann::json bad = sparse;
  bad["format"] = "machine";
  EXPECT_THROW(signal_from_json(bad), InvalidArgument);
  Signal nan(3);
  nan(0) = std::nan("");
  EXPECT_THROW(signal_to_json(nan), InvalidArgument);
}

TEST(SignalJson, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "mra_signal_roundtrip.json";
  Rng rng = case_rng(52, 0);
  const Signal v = testing::random_signal(13, rng);
  write_signal(path, v);
  EXPECT_EQ(read_signal(path), v);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace mra
