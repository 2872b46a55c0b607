#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mra/error.hpp"
#include "mra/gensig.hpp"
#include "mra/ring.hpp"

namespace mra {

// ---- dilute curvature lower bound ----

struct DiluteCheckOptions {
  std::size_t trials = 1000;
  std::optional<double> h_norm;  // default 1e-3 * m
  double slack = 0.05;
  // Class checks (collision-free support of size s, band, admissibility) throw
  // when enforced; disable to run controls outside the class.
  bool enforce_class = true;
  // Also report the exact leading-order infimum over all directions on the support.
  bool worst_direction = true;
  // Extra h norms (as multiples of m) for the sensitivity sweep.
  std::vector<double> sensitivity = {1e-2, 1e-3, 1e-4};
};

struct DiluteCheckReport {
  std::size_t trials = 0;
  double h_norm = 0.0;
  double slack = 0.0;
  double epsilon = 0.0;
  double floor_m = 0.0;
  // m sqrt(2 eps / (2 + eps)): the lower bound on the normalized ratio
  // ||Delta_2||_F sqrt(L / s) / ||h||.
  double bound = 0.0;
  double min_ratio = 0.0;
  double worst_direction_ratio = 0.0;  // NaN when not computed
  bool class_ok = false;
  bool pass = false;
  std::vector<std::pair<double, double>> sensitivity;  // (h_norm, min ratio)
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

DiluteCheckReport dilute_lower_bound_check(const Signal& theta0, const DiluteClassSpec& spec,
                                           std::uint64_t seed,
                                           const DiluteCheckOptions& options = {});

// ||Delta_2(theta0 + h, theta0)||_F computed from the expansion (no cancellation).
double delta2_frobenius(const Signal& theta0, const Signal& h);
// Smallest ||linear part of Delta_2||_F / ||h|| over h supported on `support`
// (optionally symmetric h), via the SVD of the linear map.
double min_linear_curvature(const Signal& theta0, std::span<const Index> support,
                            bool symmetric_directions = false);

// ---- adversarial direction ----

struct AdversarialDirection {
  Signal h;
  std::vector<Index> skipped;  // frequencies where hat theta0 vanished
  std::vector<std::string> warnings;
};

// h with hat h(0) = 0, |hat h(xi)| = delta and phase making the linear part of
// Delta_2(theta0 + h, theta0) vanish; hat h(L/2) = 0 for even L.
AdversarialDirection adversarial_direction(const Signal& theta0, double delta);

struct AdversarialCheck {
  double linear_relative = 0.0;  // ||linear part||_F / (sqrt(L) ||theta0|| ||h||)
  double mean = 0.0;             // mean of h
  double delta2 = 0.0;           // ||Delta_2(theta0 + h, theta0)||_F
  double quadratic_bound = 0.0;  // L ||h||^2
  bool pass = false;

  nlohmann::json to_json() const;
};

constexpr double kAdversarialLinearTolerance = 1e-8;

AdversarialCheck check_adversarial(const Signal& theta0, const Signal& h);

// ---- frequency sets ----

struct FrequencySet {
  std::size_t length = 0;
  std::vector<Index> members;
  double a = 0.0;
  double c1_hat = 0.0;
  double c2_hat = 0.0;
  std::optional<double> spectral_floor;  // min over members of |hat theta|
  std::size_t rounds = 0;

  nlohmann::json to_json() const;
};

FrequencySet uup_sample(std::size_t length, double a, std::uint64_t seed);

struct UupRatios {
  double c1_hat = 0.0;
  double c2_hat = 0.0;
};

// Ratio of (1/|Lambda|) sum_Lambda |hat h|^2 to (1/L) sum |hat h|^2 over random
// unit-norm s-sparse h (uniform support, Gaussian values).
UupRatios uup_check(const FrequencySet& lambda, std::size_t s, std::size_t trials,
                    std::uint64_t seed);
// Same ratio over h supported inside `support`.
UupRatios uup_check_on_support(const FrequencySet& lambda, std::span<const Index> support,
                               std::size_t trials, std::uint64_t seed,
                               bool symmetric_directions = false);
double uup_ratio(const FrequencySet& lambda, const Signal& h);

// ---- good frequency sets ----

struct GoodSetParams {
  double kappa = 1.0;
  double eta = 0.75;
  double tau = 1.0;
  double zeta = 1.0;

  void validate() const;
};

// C(eta) = (1 - eta) E|Z|^{-eta} for standard normal Z, the smallest constant
// for which E|Z|^{-eta} <= C (1 - eta)^{-1}.
double negative_moment_constant(double eta);

struct GoodSetReport {
  std::vector<Index> good_set;  // {xi : |hat f(xi)| >= |Xi|^{-kappa}}
  double threshold = 0.0;
  double fraction = 0.0;         // |good_set| / L
  double constant_C = 0.0;
  double frak_a = 0.0;
  double floor = 0.0;            // 1 - frak_a |Xi|^{-kappa eta / 2}
  bool meets_floor = false;

  nlohmann::json to_json() const;
};

GoodSetReport good_set_report(const Signal& f, const GoodSetParams& params);

struct GoodSetResampleReport {
  std::size_t draws = 0;
  std::vector<double> fractions;
  double share_meeting_floor = 0.0;
  double bound_probability = 0.0;  // 1 - frak_a |Xi|^{-kappa eta / 2}, averaged over draws
  std::size_t empty_draws = 0;

  nlohmann::json to_json() const;
};

// Resamples symmetric Bernoulli-Gaussian f and reports how often the good set
// meets the floor.
GoodSetResampleReport good_set_resample(std::size_t length, double s, const GoodSetParams& params,
                                        std::size_t draws, std::uint64_t seed);

// ---- Lambda construction ----

struct LambdaOptions {
  double floor_c = 1.0;  // floor = c min(s^{tau - 4}, 1)
  double tau = 1.0;
  std::size_t uup_trials = 200;
  double c1_min = 0.05;
  double c2_max = 20.0;
};

class LambdaConstructionError : public BudgetExceeded {
 public:
  LambdaConstructionError(const std::string& what, FrequencySet best, std::size_t floor_failures,
                          std::size_t uup_failures)
      : BudgetExceeded(what), best(std::move(best)), floor_failures(floor_failures),
        uup_failures(uup_failures) {}
  FrequencySet best;
  std::size_t floor_failures;
  std::size_t uup_failures;
};

double lambda_floor(std::size_t s, const LambdaOptions& options);

FrequencySet lambda_construct(const Signal& theta, std::size_t s, double a, std::size_t max_tries,
                              std::uint64_t seed, const LambdaOptions& options = {});

// ---- moderate-regime curvature ----

struct ModerateCheckOptions {
  double slack = 0.05;
};

struct ModerateCheckReport {
  std::size_t trials = 0;
  double h_norm = 0.0;
  double spectral_floor = 0.0;  // frak m = min over Lambda of |hat theta0|
  double c1_hat = 0.0;
  double c2_hat = 0.0;          // max of Lambda's c2_hat and the ratio seen on theta0 * h
  double c3 = 0.0;              // sqrt(c1_hat / c2_hat)
  double c4 = 0.0;              // 2 c3, the leading-order constant of the bound
  double min_ratio = 0.0;       // min ||Delta_2||_F sqrt(L) / (frak m rho)
  double min_chain_ratio = 0.0; // min (1/L) sum |hat theta hat h|^2 / (c3^2 frak m^2 ||h||^2)
  bool chain_holds = false;
  bool pass = false;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

ModerateCheckReport moderate_curvature_check(const Signal& theta0, const FrequencySet& lambda,
                                             std::size_t trials, double h_norm,
                                             std::uint64_t seed,
                                             const ModerateCheckOptions& options = {});

// ---- moment sandwich ----

struct SandwichRow {
  double sigma = 0.0;
  double kl = 0.0;
  double kl_se = 0.0;
  double delta1 = 0.0, delta2 = 0.0, delta3 = 0.0;
  double lower_series = 0.0;  // sum_m ||Delta_m||^2 / ((sqrt(3) sigma)^{2m} m!)
  double ratio = 0.0;
  bool pass = false;
};

struct SandwichReport {
  std::vector<SandwichRow> rows;
  double fitted_lower_constant = 0.0;  // min observed ratio
  bool pass = false;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

constexpr std::size_t kSandwichGuard = 16;

SandwichReport moment_sandwich_probe(const Signal& theta, const Signal& phi,
                                     std::span<const double> sigma_grid, std::size_t n_mc,
                                     std::uint64_t seed);

}  // namespace mra
