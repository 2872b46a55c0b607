#pragma once

// Hand-rolled generators for property tests. Each case draws from its own
// stream so failures reproduce from the printed case number.

#include <algorithm>
#include <numeric>
#include <vector>

#include "mra/ring.hpp"
#include "mra/rng.hpp"

namespace mra::testing {

inline Rng case_rng(std::uint64_t test_id, std::uint64_t case_id) { return make_rng(test_id, case_id); }

inline std::size_t random_length(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline Signal random_signal(std::size_t length, Rng& rng, double scale = 1.0) {
  Signal v(length);
  for (double& x : v.values()) x = scale * standard_normal(rng);
  return v;
}

inline Signal random_symmetric_signal(std::size_t length, Rng& rng) {
  Signal v(length);
  for (Index i = 0; i <= v.last(); ++i) {
    const double x = standard_normal(rng);
    v(i) = x;
    v(-i) = x;
  }
  return v;
}

inline Index random_index(std::size_t length, Rng& rng) {
  return standard(std::uniform_int_distribution<Index>(0, static_cast<Index>(length) - 1)(rng), length);
}

// Uniform s-subset, sorted standard indices.
inline std::vector<Index> random_support(std::size_t length, std::size_t s, Rng& rng) {
  std::vector<Index> all(length);
  std::iota(all.begin(), all.end(), Index{0});
  std::shuffle(all.begin(), all.end(), rng);
  std::vector<Index> out;
  for (std::size_t k = 0; k < s; ++k) out.push_back(standard(all[k], length));
  std::sort(out.begin(), out.end());
  return out;
}

inline double relative_error(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace mra::testing
