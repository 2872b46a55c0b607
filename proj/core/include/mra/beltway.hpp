#pragma once

#include <cstddef>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <vector>

#include "mra/gensig.hpp"
#include "mra/ring.hpp"
#include "mra/rng.hpp"

namespace mra {

// Multiset of nonzero cyclic differences, keyed by standard representative.
// For even L the self-inverse difference L/2 is keyed as -L/2.
struct DifferenceProfile {
  std::size_t length = 0;
  DifferenceMultiset multiplicity;

  static DifferenceProfile of_support(std::span<const Index> support, std::size_t length);
  std::size_t total() const;
  // mult(d) == mult(-d) for every d.
  bool symmetric() const;

  nlohmann::json to_json() const;
  static DifferenceProfile from_json(const nlohmann::json& j);
};

// Canonical representative of the support's orbit under rotations and
// reflections: the lexicographically smallest sorted residue list, returned as
// sorted standard indices.
std::vector<Index> canonical_orbit(std::span<const Index> support, std::size_t length);

struct BeltwayOptions {
  std::size_t node_budget = 200'000'000;
};

struct BeltwayStats {
  std::size_t nodes = 0;
};

// Every support S with difference_multiset(S) == D, one per rotation/reflection
// orbit, each in canonical form and sorted. Empty when D is infeasible. Throws
// BudgetExceeded if the search needs more than node_budget nodes.
std::vector<std::vector<Index>> solve_beltway(const DifferenceProfile& profile, std::size_t s,
                                              const BeltwayOptions& options = {},
                                              BeltwayStats* stats = nullptr);

struct PhaseRetrievalOptions {
  // Lags with |A(l)| above this are treated as support differences. Defaults
  // to m^2 / 2 from the class hint.
  std::optional<double> threshold;
  // Relative residual || |hat theta|^2 - P || / ||P|| a candidate must meet.
  double tolerance = 1e-8;
  int refine_iterations = 100;
  BeltwayOptions beltway;
};

struct PhaseRetrievalCandidate {
  Signal signal;
  double residual = 0.0;
};

// Sparse signals in the dilute class whose power spectrum matches P, with
// canonical support placement and sign (first nonzero value positive).
// P is indexed by frequency in standard order.
std::vector<PhaseRetrievalCandidate> recover_from_power_spectrum(
    const Signal& power, const DiluteClassSpec& class_hint,
    const PhaseRetrievalOptions& options = {});

// Gauss-Newton/Levenberg-Marquardt fit of the values on the given support to P.
Signal refine_on_support(const Signal& start, const Signal& power, int iterations);

double power_spectrum_residual(const Signal& theta, const Signal& power);

struct LocalUniquenessReport {
  std::size_t trials = 0;
  double radius = 0.0;
  double min_ratio = 0.0;           // min ||Delta_2||_F / rho
  double min_normalized = 0.0;      // min_ratio * sqrt(L / s)
  double curvature_floor = 0.0;         // m sqrt(2 eps / (2 + eps)) sqrt(s / L)
  double max_observed_varrho = 0.0;

  nlohmann::json to_json() const;
};

// Random in-class perturbations theta of theta0 with 0 < varrho(theta, theta0) <= radius.
LocalUniquenessReport local_uniqueness_probe(const Signal& theta0, const DiluteClassSpec& spec,
                                             double radius, std::size_t trials, Rng& rng);

// ||Delta_2(theta0 + t h, theta0)||_F / rho at each step size t (h fixed).
std::vector<double> uniqueness_ratio_along(const Signal& theta0, const Signal& direction,
                                           std::span<const double> steps);

constexpr std::size_t kMaxCollisionFreeGuard = 40;

// Exact largest collision-free subset size of Z_L by branch and bound.
std::size_t max_collision_free_size(std::size_t length);

struct ProbabilityEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

// P[uniform random s-subset of Z_L is collision free] by sequential importance
// sampling: points are drawn among those that keep the set collision free and
// weighted by prod_k (#valid_k / (L - k)). Unbiased, and usable far below the
// probabilities plain rejection sampling can resolve.
ProbabilityEstimate collision_free_probability(std::size_t length, std::size_t s,
                                               std::size_t samples, Rng& rng);

}  // namespace mra
