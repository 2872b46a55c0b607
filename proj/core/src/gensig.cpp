#include "mra/gensig.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "difference_table.hpp"
#include "mra/error.hpp"

namespace mra {

void DiluteClassSpec::validate_feasible() const {
  if (length < 2) throw InvalidArgument("dilute class needs L >= 2");
  if (sparsity == 0) throw InvalidArgument("dilute class needs s >= 1");
  if (!(floor_m > 0.0) || !(cap_M >= floor_m))
    throw InvalidArgument("dilute class needs 0 < m <= M");
  if (sparsity * (sparsity - 1) > length - 1)
    throw InvalidArgument("no collision-free support of size " + std::to_string(sparsity) +
                          " exists in Z_" + std::to_string(length) + " (s(s-1) > L-1)");
}

bool DiluteClassSpec::admissible() const {
  return slack > 0.0 &&
         static_cast<double>(sparsity) * floor_m * floor_m >= (2.0 + slack) * cap_M * cap_M;
}

double DiluteClassSpec::max_slack() const {
  return static_cast<double>(sparsity) * floor_m * floor_m / (cap_M * cap_M) - 2.0;
}

void GenericSignalSpec::validate() const {
  if (length < 2) throw InvalidArgument("generic signal spec needs L >= 2");
  if (!(sparsity > 0.0) || !(zeta > 0.0) || !(alpha > 0.0) || !(tau > 0.0))
    throw InvalidArgument("generic signal spec parameters must be positive");
  if (alpha > beta) throw InvalidArgument("generic signal spec needs alpha <= beta");
}

DifferenceMultiset difference_multiset(std::span<const Index> support, std::size_t length) {
  DifferenceMultiset out;
  for (Index i : support)
    for (Index j : support)
      if (residue(i - j, length) != 0) ++out[standard(i - j, length)];
  return out;
}

bool is_collision_free(std::span<const Index> support, std::size_t length) {
  detail::DifferenceTable table(length);
  for (Index p : support)
    if (!table.try_add(p)) return false;
  return true;
}

std::vector<Index> random_collision_free_support(std::size_t length, std::size_t s, Rng& rng,
                                                 CollisionFreeStats* stats) {
  if (s == 0) throw InvalidArgument("support size must be positive");
  if (s > length) throw InvalidArgument("support size exceeds L");
  CollisionFreeStats local;
  std::vector<Index> pool(length);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<Index> chosen;
  auto finish = [&](std::vector<Index> pts) {
    for (Index& p : pts) p = standard(p, length);
    std::sort(pts.begin(), pts.end());
    if (stats) *stats = local;
    return pts;
  };

  for (std::size_t attempt = 0; attempt < kRejectionBudget; ++attempt) {
    ++local.rejection_attempts;
    // Partial Fisher-Yates draw of a uniform s-subset.
    for (std::size_t k = 0; k < s; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, length - 1);
      std::swap(pool[k], pool[pick(rng)]);
    }
    chosen.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(s));
    if (is_collision_free(chosen, length)) return finish(chosen);
  }

  local.used_greedy = true;
  constexpr int kGreedyRestarts = 1000;
  for (int restart = 0; restart < kGreedyRestarts; ++restart) {
    detail::DifferenceTable table(length);
    chosen.clear();
    std::vector<Index> candidates;
    while (chosen.size() < s) {
      candidates.clear();
      for (std::size_t x = 0; x < length; ++x)
        if (table.can_add(static_cast<Index>(x))) candidates.push_back(static_cast<Index>(x));
      if (candidates.empty()) break;
      std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
      const Index x = candidates[pick(rng)];
      table.try_add(x);
      chosen.push_back(x);
    }
    if (chosen.size() == s) return finish(chosen);
  }
  throw BudgetExceeded("collision-free generation failed for s = " + std::to_string(s) +
                       " in Z_" + std::to_string(length));
}

Signal gen_collision_free(const DiluteClassSpec& spec, Rng& rng, CollisionFreeStats* stats) {
  spec.validate_feasible();
  const auto support = random_collision_free_support(spec.length, spec.sparsity, rng, stats);
  std::uniform_real_distribution<double> magnitude(spec.floor_m, spec.cap_M);
  std::bernoulli_distribution sign(0.5);
  Signal out(spec.length);
  for (Index i : support) {
    const double v = magnitude(rng);
    out(i) = sign(rng) ? v : -v;
  }
  return out;
}

SymmetricSample gen_symm_bernoulli_gaussian(std::size_t length, double s, double zeta, Rng& rng) {
  if (!(s >= 1.0) || s > static_cast<double>(length))
    throw InvalidArgument("symmetric Bernoulli-Gaussian needs 1 <= s <= L");
  std::bernoulli_distribution include(s / static_cast<double>(length));
  std::normal_distribution<double> value(0.0, zeta);
  Signal out(length);
  const Index top = (static_cast<Index>(length) - 1) / 2;
  for (Index i = 0; i <= top; ++i) {
    if (!include(rng)) continue;
    const double v = value(rng);
    out(i) = v;
    out(-i) = v;
  }
  SymmetricSample sample{std::move(out), false};
  sample.empty_support = sample.signal.support().empty();
  return sample;
}

Signal gen_symm_interval(std::size_t length, std::size_t s, double zeta, Rng& rng) {
  if (2 * s + 1 > length) throw InvalidArgument("interval [-s, s] does not fit in Z_L");
  std::normal_distribution<double> value(0.0, zeta);
  Signal out(length);
  for (Index i = 0; i <= static_cast<Index>(s); ++i) {
    double v = value(rng);
    while (v == 0.0) v = value(rng);
    out(i) = v;
    out(-i) = v;
  }
  return out;
}

double cosine_functional(std::span<const Index> xi, Index a, std::size_t length) {
  const auto n = static_cast<Index>(length);
  double acc = 0.0;
  for (Index k : xi) {
    if (residue(k, length) == 0) {
      acc += 1.0;
      continue;
    }
    // Reduce a k mod L and fold r -> min(r, L - r); cos^2 is invariant under
    // both, which keeps V exactly even and periodic in a.
    Index r = residue(residue(a, length) * residue(k, length), length);
    r = std::min(r, n - r);
    const double c = std::cos(2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(n));
    acc += 2.0 * c * c;
  }
  return acc;
}

CosineGenericity check_cosine_generic(std::span<const Index> xi, std::size_t length, double gamma) {
  CosineGenericity out;
  out.min_value = std::numeric_limits<double>::infinity();
  for (Index a = first_index(length); a <= last_index(length); ++a) {
    const double v = cosine_functional(xi, a, length);
    if (v < out.min_value) {
      out.min_value = v;
      out.argmin = a;
    }
  }
  out.generic = out.min_value >= gamma;
  return out;
}

bool check_typically_sparse(std::size_t support_size, double s, double alpha, double beta) {
  const auto size = static_cast<double>(support_size);
  return alpha * s <= size && size <= beta * s;
}

}  // namespace mra
