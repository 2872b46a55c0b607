#pragma once

#include <cstddef>
#include <limits>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mra/gensig.hpp"
#include "mra/ring.hpp"
#include "mra/rng.hpp"

namespace mra {

struct MraConfig {
  std::size_t length = 0;
  double sigma = 1.0;
  GroupKind group = GroupKind::cyclic;

  void validate() const;
};

// n observations stored row-major in standard order.
struct Dataset {
  MraConfig config;
  std::size_t count = 0;
  std::vector<double> observations;
  std::optional<Signal> truth;           // set by simulate
  std::vector<GroupElement> latent;      // set by simulate

  std::span<const double> observation(std::size_t i) const {
    return {observations.data() + i * config.length, config.length};
  }
  void append(const Dataset& other);
};

// y_i = G_i theta0 + sigma z_i with G_i uniform on the configured group.
Dataset simulate(const Signal& theta0, const MraConfig& config, std::size_t n, Rng& rng);

// log p_theta(y): uniform mixture of N(G theta, sigma^2 I) over the group,
// evaluated by log-sum-exp. Exactly invariant under theta -> G theta for L <= 64.
double log_density(const Signal& theta, std::span<const double> y, double sigma,
                   GroupKind group = GroupKind::cyclic);
double log_likelihood(const Signal& theta, const Dataset& data);

enum class KlEstimator {
  // mean of r = log p0(Y) - log p(Y)
  naive,
  // mean of r + (p(Y)/p0(Y) - 1): the added term has mean exactly zero under
  // p0, and the sum is nonnegative with variance of order KL^2.
  ratio_control,
};

struct KlOptions {
  GroupKind group = GroupKind::cyclic;
  KlEstimator estimator = KlEstimator::ratio_control;
  std::size_t jackknife_blocks = 100;
};

struct KlEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;  // delete-one-block jackknife
  std::size_t samples = 0;
};

// Monte-Carlo KL(p_theta0 || p_theta) from n_mc draws of p_theta0.
KlEstimate kl_monte_carlo(const Signal& theta0, const Signal& theta, double sigma,
                          std::size_t n_mc, Rng& rng, const KlOptions& options = {});

// Constraint set for the restricted MLE. Constraints compose; projection
// applies support zeroing, then symmetrization, then the magnitude clamp.
struct RestrictedClass {
  std::optional<std::vector<Index>> support;
  bool symmetric = false;
  std::optional<double> floor_m;
  std::optional<double> cap_M;

  static RestrictedClass none() { return {}; }
  static RestrictedClass support_fixed(std::vector<Index> support);
  static RestrictedClass symmetric_support_fixed(std::vector<Index> support);
  static RestrictedClass magnitude_band(double m, double M,
                                        std::optional<std::vector<Index>> support = std::nullopt);
  // Support plus magnitude band of a dilute signal.
  static RestrictedClass dilute(const Signal& theta0, const DiluteClassSpec& spec);

  std::string kind() const;
  // clamped is set when the magnitude clamp changed any entry.
  Signal project(const Signal& theta, bool* clamped = nullptr) const;

  nlohmann::json to_json() const;
  static RestrictedClass from_json(const nlohmann::json& j);
};

struct EmOptions {
  std::size_t max_iters = 1000;
  double tol = 1e-8;  // stop when varrho(theta_t, theta_{t+1}) < tol
  // SQUAREM extrapolation of the projected EM map.
  bool accelerate = false;
  // Also evaluate the likelihood at every pre-projection M-step output.
  bool track_monotonicity = false;
  std::string init_policy = "user";
};

struct EmDiagnostics {
  std::size_t iterations = 0;
  std::size_t e_steps = 0;
  double final_log_likelihood = 0.0;
  std::vector<double> steps;           // varrho between successive iterates
  std::vector<double> log_likelihood;  // at each iterate
  std::vector<double> pre_projection_log_likelihood;
  bool converged = false;
  bool clamp_activated = false;
  bool accelerated = false;
  std::string init_policy;

  nlohmann::json to_json() const;
};

struct EmResult {
  Signal estimate;
  EmDiagnostics diagnostics;
};

// One E-step at theta followed by the unprojected M-step.
struct EmStep {
  Signal m_step;
  double log_likelihood = 0.0;  // at theta
};
EmStep em_step(const Dataset& data, const Signal& theta);

EmResult em_restricted_mle(const Dataset& data, const RestrictedClass& cls, const Signal& init,
                           const EmOptions& options = {});

// Power spectrum estimate from the bias-corrected empirical second moment.
Signal estimate_power_spectrum(const Dataset& data);

// EM starting point from the phase-retrieval pipeline applied to the empirical
// power spectrum; the sign and reflection left open by the spectrum are
// resolved by likelihood.
Signal init_from_power_spectrum(const Dataset& data, const DiluteClassSpec& spec);

}  // namespace mra
