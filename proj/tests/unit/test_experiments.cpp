#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mra/error.hpp"
#include "mra/experiments.hpp"
#include "mra/parallel.hpp"
#include "mra/stats.hpp"

namespace mra {
namespace {

TEST(Stats, LinearFitRecoversALine) {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.0};
  const std::vector<double> y{1.0, 3.0, 5.0, 7.0};
  const auto f = linear_fit(x, y);
  ASSERT_TRUE(f);
  EXPECT_NEAR(f->slope, 2.0, 1e-15);
  EXPECT_NEAR(f->intercept, 1.0, 1e-15);
  EXPECT_NEAR(f->r_squared, 1.0, 1e-15);
  EXPECT_FALSE(linear_fit(std::vector<double>{1.0}, std::vector<double>{2.0}));
  EXPECT_FALSE(linear_fit(std::vector<double>{1.0, 1.0}, std::vector<double>{2.0, 3.0}));
}

TEST(Stats, MedianAndQuantile) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_EQ(quantile({0.0, 10.0}, 0.25), 2.5);
  EXPECT_EQ(quantile({5.0, 1.0, 3.0}, 0.0), 1.0);
  EXPECT_EQ(quantile({5.0, 1.0, 3.0}, 1.0), 5.0);
}

TEST(Stats, ConfigHashIsStable) {
  const nlohmann::json a{{"x", 1}, {"y", {1, 2}}};
  EXPECT_EQ(config_hash(a), config_hash(nlohmann::json::parse(a.dump())));
  EXPECT_NE(config_hash(a), config_hash(nlohmann::json{{"x", 2}, {"y", {1, 2}}}));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

ExperimentConfig small_kl_scan() {
  return ExperimentConfig::from_json(nlohmann::json::parse(R"({
    "schema": 1, "scenario": "kl-curvature-scan",
    "grid": {"sigma": [2, 4], "L": [8]},
    "trials": 2, "seed": 99, "bootstrap": 50,
    "signal": {"support": [0, 1, 3], "band": [1, 1], "full_band": [1, 2]},
    "kl": {"n_mc": 4000, "h_norm": 0.05, "classes": ["dilute", "adversarial"]}
  })"));
}

TEST(ExperimentConfig, JsonRoundTripAndHash) {
  ExperimentConfig cfg = small_kl_scan();
  EXPECT_EQ(cfg.sigma, (std::vector<double>{2.0, 4.0}));
  EXPECT_EQ(cfg.n_mc, 4000u);
  EXPECT_EQ(cfg.bootstrap, 50u);
  const ExperimentConfig back = ExperimentConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.hash(), cfg.hash());
  ExperimentConfig moved = cfg;
  moved.csv_path = "elsewhere.csv";
  EXPECT_EQ(moved.hash(), cfg.hash());
  moved.seed = 100;
  EXPECT_NE(moved.hash(), cfg.hash());
}

TEST(ExperimentConfig, ValidationAndWindows) {
  ExperimentConfig cfg = small_kl_scan();
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.window("adversarial"), (std::pair<double, double>{-6.8, -5.2}));
  EXPECT_EQ(cfg.window("dilute"), (std::pair<double, double>{-4.6, -3.4}));
  cfg.windows["dilute"] = {-5.0, -3.0};
  EXPECT_EQ(cfg.window("dilute L=8"), (std::pair<double, double>{-5.0, -3.0}));
  ExperimentConfig bad = small_kl_scan();
  bad.trials = 0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = small_kl_scan();
  bad.h_norm = 0.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = small_kl_scan();
  bad.scenario = "unknown";
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = small_kl_scan();
  bad.schema = 2;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(KlScan, RecordsAreCompleteAndReproducible) {
  const ExperimentConfig cfg = small_kl_scan();
  set_worker_count(1);
  const ExperimentResult a = run_experiment(cfg);
  set_worker_count(3);
  const ExperimentResult b = run_experiment(cfg);
  set_worker_count(0);
  // 2 classes x 2 sigmas x 2 trials.
  ASSERT_EQ(a.records.size(), 8u);
  ASSERT_EQ(b.records.size(), a.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_TRUE(a.records[k].same_result(b.records[k])) << k;
    EXPECT_EQ(a.records[k].config_hash, cfg.hash());
    EXPECT_FALSE(a.records[k].failed);
  }
  ASSERT_EQ(a.fits.size(), b.fits.size());
  for (std::size_t k = 0; k < a.fits.size(); ++k) {
    EXPECT_EQ(a.fits[k].slope, b.fits[k].slope);
    EXPECT_EQ(a.fits[k].ci_low, b.fits[k].ci_low);
  }
}

TEST(KlScan, FitsRecomputeFromCsv) {
  const ExperimentResult a = run_experiment(small_kl_scan());
  std::stringstream csv;
  a.write_csv(csv);
  const auto records = read_records_csv(csv);
  ASSERT_EQ(records.size(), a.records.size());
  for (std::size_t k = 0; k < records.size(); ++k) EXPECT_TRUE(records[k].same_result(a.records[k])) << k;
  ExperimentResult offline;
  offline.config = a.config;
  offline.config_hash = a.config_hash;
  offline.records = records;
  fit_records(offline);
  ASSERT_EQ(offline.fits.size(), a.fits.size());
  for (std::size_t k = 0; k < a.fits.size(); ++k) {
    EXPECT_EQ(offline.fits[k].label, a.fits[k].label);
    EXPECT_EQ(offline.fits[k].median, a.fits[k].median);
    EXPECT_EQ(offline.fits[k].slope, a.fits[k].slope);
    EXPECT_EQ(offline.fits[k].ci_low, a.fits[k].ci_low);
    EXPECT_EQ(offline.fits[k].ci_high, a.fits[k].ci_high);
  }
  const auto summary = a.summary();
  EXPECT_EQ(summary.at("config_hash"), a.config_hash);
}

TEST(RateScan, SinglePointGridHasNoSlope) {
  const auto cfg = ExperimentConfig::from_json(nlohmann::json::parse(R"({
    "schema": 1, "scenario": "dilute-rate",
    "grid": {"sigma": [0.5], "n": [300], "L": [21]},
    "trials": 2, "seed": 5, "bootstrap": 20,
    "signal": {"support": [0, 1, 4, 14, 16], "band": [1, 1.4], "epsilon": 0.5},
    "estimator": {"max_iters": 200, "tol": 1e-7, "accelerate": true, "init": "power-spectrum"}
  })"));
  const ExperimentResult r = run_experiment(cfg);
  ASSERT_EQ(r.records.size(), 2u);
  ASSERT_EQ(r.fits.size(), 1u);
  EXPECT_FALSE(r.fits[0].slope.has_value());
  EXPECT_NE(r.fits[0].note.find("slope undefined"), std::string::npos);
  EXPECT_FALSE(r.pass);
  for (const auto& rec : r.records) {
    EXPECT_FALSE(rec.failed) << rec.message;
    EXPECT_NEAR(rec.metric, std::sqrt(300.0) * rec.error, 1e-12 * rec.metric);
  }
}

TEST(SparsityScan, SinglePointGridHasNoSlope) {
  const auto cfg = ExperimentConfig::from_json(nlohmann::json::parse(R"({
    "schema": 1, "scenario": "sparsity-scan", "branch": "moderate",
    "grid": {"s": [8], "L": [128]},
    "trials": 3, "seed": 6, "bootstrap": 20
  })"));
  const ExperimentResult r = run_experiment(cfg);
  ASSERT_EQ(r.records.size(), 3u);
  ASSERT_EQ(r.fits.size(), 1u);
  EXPECT_FALSE(r.fits[0].slope.has_value());
}

}  // namespace
}  // namespace mra
