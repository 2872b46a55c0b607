#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "mra/ring.hpp"
#include "mra/rng.hpp"

namespace mra {

// Dilute class: collision-free support of size s, magnitudes in [m, M].
struct DiluteClassSpec {
  std::size_t length = 0;
  std::size_t sparsity = 0;
  double floor_m = 1.0;
  double cap_M = 1.0;
  double slack = 0.0;  // epsilon

  // s(s-1) <= L - 1 and 0 < m <= M.
  void validate_feasible() const;
  // s >= (2 + epsilon) M^2 / m^2.
  bool admissible() const;
  // Largest epsilon for which the class is admissible: s m^2 / M^2 - 2.
  double max_slack() const;
};

struct GenericSignalSpec {
  std::size_t length = 0;
  double sparsity = 0.0;
  double zeta = 1.0;
  double alpha = 0.5;
  double beta = 2.0;
  double tau = 1.0;

  void validate() const;
};

// Nonzero cyclic differences i - j (i != j) keyed by standard representative.
using DifferenceMultiset = std::map<Index, std::size_t>;

DifferenceMultiset difference_multiset(std::span<const Index> support, std::size_t length);
bool is_collision_free(std::span<const Index> support, std::size_t length);

struct CollisionFreeStats {
  std::size_t rejection_attempts = 0;
  bool used_greedy = false;
};

constexpr std::size_t kRejectionBudget = 10000;

// Uniformly random s-subset by rejection, falling back to greedy incremental
// construction once the budget is exhausted. Sorted, standard indices.
std::vector<Index> random_collision_free_support(std::size_t length, std::size_t s, Rng& rng,
                                                 CollisionFreeStats* stats = nullptr);

// Collision-free support with magnitudes uniform on [m, M] and fair random signs.
Signal gen_collision_free(const DiluteClassSpec& spec, Rng& rng,
                          CollisionFreeStats* stats = nullptr);

struct SymmetricSample {
  Signal signal;
  bool empty_support = false;
};

// Positive part {0, ..., floor((L-1)/2)} sampled with probability s/L per index,
// mirrored, with i.i.d. N(0, zeta^2) values mirrored as well.
SymmetricSample gen_symm_bernoulli_gaussian(std::size_t length, double s, double zeta, Rng& rng);

// Symmetric N(0, zeta^2) values on [-s, s].
Signal gen_symm_interval(std::size_t length, std::size_t s, double zeta, Rng& rng);

// V(Xi, a) = 1{0 in Xi} + 2 sum_{k in Xi, k != 0} cos^2(2 pi a k / L).
double cosine_functional(std::span<const Index> xi, Index a, std::size_t length);

struct CosineGenericity {
  bool generic = false;
  Index argmin = 0;
  double min_value = 0.0;
};

CosineGenericity check_cosine_generic(std::span<const Index> xi, std::size_t length, double gamma);

// alpha s <= |Xi| <= beta s
bool check_typically_sparse(std::size_t support_size, double s, double alpha, double beta);

}  // namespace mra
