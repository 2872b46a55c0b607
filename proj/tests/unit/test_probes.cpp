#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "mra/error.hpp"
#include "mra/probes.hpp"
#include "mra/spectral.hpp"

namespace mra {
namespace {

using testing::case_rng;

TEST(DiluteProbe, PassesOnCollisionFreeSignal) {
  const DiluteClassSpec spec{101, 8, 1.0, 1.5, 1.5};
  Rng rng = case_rng(90, 0);
  const Signal theta0 = gen_collision_free(spec, rng);
  DiluteCheckOptions opt;
  opt.trials = 200;
  const auto r = dilute_lower_bound_check(theta0, spec, 3, opt);
  EXPECT_TRUE(r.class_ok);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.bound, std::sqrt(3.0 / 3.5), 1e-15);
  EXPECT_GE(r.min_ratio, 0.95 * r.bound);
  EXPECT_NEAR(r.h_norm, 1e-3, 1e-18);
  EXPECT_GE(r.min_ratio, r.worst_direction_ratio * (1 - 1e-6));
  EXPECT_GE(r.worst_direction_ratio, 0.95 * r.bound);
  ASSERT_EQ(r.sensitivity.size(), 3u);
  // Same seed, same report.
  EXPECT_EQ(dilute_lower_bound_check(theta0, spec, 3, opt).min_ratio, r.min_ratio);
}

TEST(DiluteProbe, SingleCoordinateDirection) {
  const DiluteClassSpec spec{101, 8, 1.0, 1.5, 1.5};
  Rng rng = case_rng(91, 0);
  const Signal theta0 = gen_collision_free(spec, rng);
  const double L = 101, s = 8;
  for (Index i : theta0.support()) {
    const Signal h = Signal::delta(101, i, 1e-3);
    const double ratio = delta2_frobenius(theta0, h) / (std::sqrt(s / L) * h.norm());
    EXPECT_GE(ratio, std::sqrt(3.0 / 3.5) * 0.95);
  }
}

TEST(DiluteProbe, ClassViolationIsRejected) {
  const DiluteClassSpec spec{101, 3, 1.0, 1.5, 0.2};
  const Signal repeated = Signal::from_support(101, std::vector<Index>{0, 1, 2}, std::vector<double>{1.0, 1.2, -1.1});
  EXPECT_THROW(dilute_lower_bound_check(repeated, spec, 1), InvalidArgument);
}

TEST(DiluteProbe, RepeatedDifferenceBreaksTheBound) {
  // {0, 1, 2} repeats the difference 1; with equal magnitudes a direction on
  // the support kills the leading-order curvature down to the bound's scale.
  const std::size_t L = 101;
  const DiluteClassSpec spec{L, 8, 1.0, 1.0, 1.5};
  std::vector<Index> support{0, 1, 2, 3, 4, 5, 6, 7};
  const Signal theta0 = Signal::from_support(L, support, std::vector<double>(8, 1.0));
  DiluteCheckOptions opt;
  opt.trials = 50;
  opt.enforce_class = false;
  const auto r = dilute_lower_bound_check(theta0, spec, 5, opt);
  EXPECT_FALSE(r.class_ok);
  EXPECT_LT(r.worst_direction_ratio, 0.95 * r.bound);
  EXPECT_FALSE(r.pass);
}

TEST(MinLinearCurvature, MatchesRandomDirectionsFromBelow) {
  Rng rng = case_rng(92, 0);
  const Signal theta0 = gen_collision_free({61, 5, 1.0, 1.5, 0.0}, rng);
  const auto support = theta0.support();
  const double kappa = min_linear_curvature(theta0, support);
  for (int t = 0; t < 100; ++t) {
    Signal h(61);
    for (Index i : support) h(i) = standard_normal(rng);
    h *= 1e-6 / h.norm();
    EXPECT_GE(delta2_frobenius(theta0, h) / h.norm(), kappa * (1 - 1e-4));
  }
}

TEST(Adversarial, CancelsTheLinearTerm) {
  for (std::size_t L : {8u, 17u, 64u}) {
    for (int c = 0; c < 20; ++c) {
      Rng rng = case_rng(93, L * 100 + c);
      const Signal theta0 = testing::random_signal(L, rng);
      const auto dir = adversarial_direction(theta0, 1e-3);
      EXPECT_TRUE(dir.skipped.empty());
      const auto chk = check_adversarial(theta0, dir.h);
      EXPECT_LE(chk.linear_relative, kAdversarialLinearTolerance);
      EXPECT_LE(std::abs(chk.mean), 1e-15);
      EXPECT_LE(chk.delta2, chk.quadratic_bound * (1 + 1e-12));
      EXPECT_TRUE(chk.pass);
    }
  }
}

TEST(Adversarial, SpectrumHasTheRequiredShape) {
  Rng rng = case_rng(94, 0);
  const Signal theta0 = testing::random_signal(10, rng);
  const auto dir = adversarial_direction(theta0, 0.01);
  const Spectrum h = dft(dir.h), t = dft(theta0);
  EXPECT_LE(std::abs(h(0)), 1e-15);
  EXPECT_LE(std::abs(h(-5)), 1e-15);  // L/2 is left at zero
  for (Index xi = 1; xi <= 4; ++xi) {
    EXPECT_NEAR(std::abs(h(xi)), 0.01, 1e-15);
    // Zero real part of hat theta0 conj(hat h) at every used frequency.
    EXPECT_NEAR((t(xi) * std::conj(h(xi))).real(), 0.0, 1e-14);
  }
}

TEST(Adversarial, DeadFrequencyIsSkipped) {
  Rng rng = case_rng(95, 0);
  Signal theta0 = testing::random_signal(9, rng);
  Spectrum s = dft(theta0);
  s(2) = 0.0;
  s(-2) = 0.0;
  theta0 = idft(s);
  const auto dir = adversarial_direction(theta0, 0.01);
  EXPECT_FALSE(dir.warnings.empty());
  ASSERT_EQ(dir.skipped.size(), 1u);
  EXPECT_EQ(dir.skipped[0], 2);
}

TEST(Uup, FullSetGivesExactlyOne) {
  const FrequencySet all = uup_sample(40, 40.0, 1);
  ASSERT_EQ(all.members.size(), 40u);
  for (int c = 0; c < 100; ++c) {
    Rng rng = case_rng(96, c);
    Signal h = testing::random_signal(40, rng);
    ASSERT_EQ(uup_ratio(all, h), 1.0);
  }
  const auto r = uup_check(all, 5, 500, 2);
  EXPECT_EQ(r.c1_hat, 1.0);
  EXPECT_EQ(r.c2_hat, 1.0);
}

TEST(Uup, SpikeHasFlatSpectrum) {
  const FrequencySet lambda = uup_sample(64, 20.0, 7);
  ASSERT_FALSE(lambda.members.empty());
  const auto r = uup_check(lambda, 1, 200, 3);
  EXPECT_NEAR(r.c1_hat, 1.0, 1e-12);
  EXPECT_NEAR(r.c2_hat, 1.0, 1e-12);
}

TEST(Uup, SampleSizeIsBinomial) {
  const std::size_t L = 200;
  const double a = 60.0;
  double sum = 0.0;
  const int draws = 2000;
  for (int d = 0; d < draws; ++d) sum += static_cast<double>(uup_sample(L, a, d).members.size());
  const double p = a / L, se = std::sqrt(L * p * (1 - p) / draws);
  EXPECT_LE(std::abs(sum / draws - a), 3.0 * se);
  EXPECT_THROW(uup_sample(L, 0.0, 1), InvalidArgument);
  FrequencySet empty;
  empty.length = L;
  EXPECT_THROW(uup_check(empty, 2, 10, 1), InvalidArgument);
}

TEST(Uup, ModerateSizeConstantsAreBounded) {
  const FrequencySet lambda = uup_sample(512, 256.0, 11);
  const auto r = uup_check(lambda, 8, 2000, 12);
  EXPECT_LE(r.c1_hat, 1.0);
  EXPECT_GE(r.c2_hat, 1.0);
  EXPECT_GE(r.c1_hat, 0.05);
  EXPECT_LE(r.c2_hat, 20.0);
}

TEST(NegativeMoment, ClosedForm) {
  EXPECT_NEAR(negative_moment_constant(0.75), 0.8194096482202468, 1e-14);
  EXPECT_NEAR(negative_moment_constant(0.5), 0.8600399873245196, 1e-14);
  EXPECT_THROW(negative_moment_constant(1.0), InvalidArgument);
  // (1 - eta) E|Z|^{-eta} by Monte Carlo.
  Rng rng = case_rng(97, 0);
  double acc = 0.0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) acc += std::pow(std::abs(standard_normal(rng)), -0.5);
  EXPECT_NEAR(0.5 * acc / n, negative_moment_constant(0.5), 0.01);
}

TEST(GoodSet, SpikeHasFlatSpectrum) {
  GoodSetParams p;
  const auto big = good_set_report(Signal::delta(32, 0, 1.5), p);
  EXPECT_EQ(big.good_set.size(), 32u);
  EXPECT_EQ(big.fraction, 1.0);
  const auto small = good_set_report(Signal::delta(32, 0, 0.5), p);
  EXPECT_TRUE(small.good_set.empty());
  EXPECT_THROW(good_set_report(Signal(32), p), InvalidArgument);
}

TEST(GoodSet, ShrinksAsThresholdRises) {
  Rng rng = case_rng(98, 0);
  const auto f = gen_symm_bernoulli_gaussian(256, 24, 1.0, rng).signal;
  std::size_t prev = 257;
  // Larger kappa lowers |Xi|^{-kappa}; smaller kappa raises it toward 1.
  for (double kappa : {2.0, 1.0, 0.5, 0.1, 0.01}) {
    GoodSetParams p;
    p.kappa = kappa;
    const auto r = good_set_report(f, p);
    EXPECT_LE(r.good_set.size(), prev);
    prev = r.good_set.size();
  }
}

TEST(GoodSet, BernoulliGaussianFractionIsLarge) {
  GoodSetParams p;
  const auto r = good_set_resample(1024, 64, p, 200, 5);
  std::size_t high = 0;
  for (double f : r.fractions) high += f >= 0.9 ? 1 : 0;
  EXPECT_GE(static_cast<double>(high), 0.9 * static_cast<double>(r.fractions.size()));
  EXPECT_EQ(r.draws, 200u);
}

Signal symmetric_with_dead_frequency(std::size_t L, Index dead, Rng& rng) {
  Spectrum s = dft(testing::random_symmetric_signal(L, rng));
  s(dead) = 0.0;
  s(-dead) = 0.0;
  const Signal raw = idft(s);
  Signal out(L);
  for (Index i = out.first(); i <= out.last(); ++i) out(i) = 0.5 * (raw(i) + raw(-i));
  return out;
}

TEST(Lambda, FlatSpectrumSucceedsFirstRound) {
  const Signal spike = Signal::delta(64, 0, 1.0);
  const auto lambda = lambda_construct(spike, 1, 32.0, 10, 4);
  EXPECT_EQ(lambda.rounds, 1u);
  ASSERT_TRUE(lambda.spectral_floor.has_value());
  EXPECT_NEAR(*lambda.spectral_floor, 1.0, 1e-15);
}

TEST(Lambda, DeadFrequencyIsExcluded) {
  Rng rng = case_rng(99, 0);
  const Signal theta = symmetric_with_dead_frequency(64, 5, rng);
  ASSERT_LT(std::abs(dft(theta)(5)), 1e-12);
  const auto lambda = lambda_construct(theta, 64, 32.0, 50, 6);
  EXPECT_EQ(std::count(lambda.members.begin(), lambda.members.end(), 5), 0);
  EXPECT_EQ(std::count(lambda.members.begin(), lambda.members.end(), -5), 0);
  EXPECT_GE(*lambda.spectral_floor, lambda_floor(64, {}));
}

TEST(Lambda, ExhaustionCarriesDiagnostics) {
  Rng rng = case_rng(100, 0);
  const Signal theta = symmetric_with_dead_frequency(64, 5, rng);
  try {
    lambda_construct(theta, 64, 64.0, 3, 1);  // a = L always contains the dead frequency
    FAIL() << "expected LambdaConstructionError";
  } catch (const LambdaConstructionError& e) {
    EXPECT_EQ(e.floor_failures, 3u);
    EXPECT_EQ(e.best.members.size(), 64u);
  }
  EXPECT_THROW(lambda_construct(testing::random_signal(64, rng), 8, 32.0, 3, 1), InvalidArgument);
}

TEST(Moderate, CurvatureChainHolds) {
  Rng rng = case_rng(101, 0);
  const Signal theta0 = gen_symm_bernoulli_gaussian(256, 16, 1.0, rng).signal;
  const auto lambda = lambda_construct(theta0, theta0.support().size(), 128.0, 50, 7);
  const auto r = moderate_curvature_check(theta0, lambda, 100, 1e-3, 8);
  EXPECT_TRUE(r.chain_holds);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.c3, std::sqrt(r.c1_hat / r.c2_hat), 1e-15);
  EXPECT_EQ(r.c4, 2.0 * r.c3);
  EXPECT_GE(r.min_chain_ratio, 1.0);
}

TEST(Sandwich, IdenticalSignalsGiveZero) {
  const Signal t = Signal(std::vector<double>{-0.5, 0.25, 0.75, -0.5});
  const std::vector<double> sigmas{2.0};
  const auto r = moment_sandwich_probe(t, t, sigmas, 1000, 1);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].kl, 0.0);
  EXPECT_EQ(r.rows[0].delta2, 0.0);
  EXPECT_EQ(r.rows[0].delta3, 0.0);
}

TEST(Sandwich, FrozenMomentGapsAndScaling) {
  const Signal t(std::vector<double>{-.375, -.375, -.375, -.375, .625, .625, -.375, .625});
  const Signal p(std::vector<double>{-.375, -.375, -.375, -.375, .825, .225, -.375, .825});
  const std::vector<double> sigmas{2.0, 4.0, 8.0};
  const auto r = moment_sandwich_probe(t, p, sigmas, 200000, 11);
  ASSERT_EQ(r.rows.size(), 3u);
  for (const auto& row : r.rows) {
    EXPECT_NEAR(row.delta1, 0.0, 1e-15);
    EXPECT_NEAR(row.delta2, 0.307896086366813, 1e-12);
    EXPECT_NEAR(row.delta3, 0.6353723317866462, 1e-12);
  }
  EXPECT_TRUE(r.pass);
  // sigma^-4 dominance: KL sigma^4 / (||Delta_2||^2 / 2) stays in a factor-4 band.
  double lo = INFINITY, hi = 0.0;
  for (const auto& row : r.rows) {
    const double v = row.kl * std::pow(row.sigma, 4) / (row.delta2 * row.delta2 / 2.0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_LE(hi / lo, 4.0);
}

TEST(Sandwich, RejectsUncenteredInputs) {
  const Signal t(std::vector<double>{1.0, 0.0, 0.0, 0.0});
  const std::vector<double> sigmas{2.0};
  EXPECT_THROW(moment_sandwich_probe(t, t, sigmas, 100, 1), InvalidArgument);
}

}  // namespace
}  // namespace mra
