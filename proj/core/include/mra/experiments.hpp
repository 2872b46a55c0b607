#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mra/ring.hpp"

namespace mra {

struct EstimatorSettings {
  std::size_t max_iters = 2000;
  double tol = 1e-9;
  bool accelerate = true;
  // "power-spectrum" (dilute default), "adversarial" (full-support default) or "truth".
  std::string init;
};

// Experiment description, read from JSON with "schema": 1. See docs/experiments.md.
struct ExperimentConfig {
  int schema = 1;
  std::string scenario;  // dilute-rate | fullsupport-rate | sparsity-scan | kl-curvature-scan
  std::vector<double> sigma;
  std::vector<std::size_t> n;     // explicit sample sizes, used when n_scale is unset
  std::optional<double> n_scale;  // n = n_scale sigma^4 per cell
  std::vector<std::size_t> s;
  std::vector<std::size_t> L;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  EstimatorSettings estimator;

  std::optional<std::vector<Index>> support;  // fixed dilute support
  std::pair<double, double> band{1.0, 1.0};   // dilute magnitudes [m, M]
  std::pair<double, double> full_band{1.0, 2.0};
  double epsilon = 0.0;                       // dilute class slack
  std::string branch = "dilute";              // sparsity-scan: dilute | moderate
  double init_offset = 0.05;                  // norm of the adversarial init offset
  double zeta = 1.0;                          // moderate branch signal scale

  std::size_t n_mc = 1000000;
  double h_norm = 0.01;
  std::vector<std::string> classes{"dilute", "adversarial"};

  std::size_t bootstrap = 1000;
  // Acceptance window per slice label; "*" applies to slices without their own.
  std::map<std::string, std::pair<double, double>> windows;

  std::string csv_path;
  std::string summary_path;

  void validate() const;
  // Everything except output paths, with defaults filled in.
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  std::string hash() const;
  // Window for a slice label, falling back to "*" and then to the scenario default.
  std::pair<double, double> window(const std::string& label) const;
};

struct ExperimentRecord {
  std::size_t cell = 0;
  std::string cls;          // signal class or branch
  double sigma = 0.0;
  std::size_t n = 0;
  std::size_t s = 0;
  std::size_t L = 0;
  std::size_t trial = 0;
  double error = 0.0;       // varrho, KL or curvature depending on the scenario
  double metric = 0.0;      // quantity whose medians are fitted
  double metric_se = 0.0;   // Monte-Carlo standard error when available
  double wall_time = 0.0;   // seconds; not part of reproducibility
  std::size_t iterations = 0;
  bool converged = true;
  bool failed = false;
  std::string message;
  std::uint64_t seed = 0;
  std::string config_hash;

  // Equality ignoring wall time.
  bool same_result(const ExperimentRecord& other) const;
};

struct SliceFit {
  std::string label;
  std::string x_name;  // sigma or s
  std::vector<double> x;
  std::vector<double> median;
  std::optional<double> slope, ci_low, ci_high, r_squared;
  std::pair<double, double> window;
  bool pass = false;
  std::string note;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string config_hash;
  std::vector<ExperimentRecord> records;
  std::vector<SliceFit> fits;
  double failure_rate = 0.0;
  bool pass = false;

  nlohmann::json summary() const;
  void write_csv(std::ostream& out) const;
  // Writes the CSV and summary to the configured paths (when set).
  void save() const;
};

std::vector<ExperimentRecord> read_records_csv(std::istream& in);

// Fits and acceptance from records alone; run_* call this on their own output.
void fit_records(ExperimentResult& result);

ExperimentResult run_rate_scan(const ExperimentConfig& cfg);
ExperimentResult run_sparsity_scan(const ExperimentConfig& cfg);
ExperimentResult run_kl_curvature_scan(const ExperimentConfig& cfg);
// Dispatches on cfg.scenario.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

constexpr double kMaxCellFailureRate = 0.10;

}  // namespace mra
