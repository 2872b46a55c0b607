#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace mra::detail {

// Sum in a canonical order (ascending magnitude, ties by value) so that the
// result depends only on the multiset of terms.
inline double canonical_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end(), [](double a, double b) {
    const double fa = std::fabs(a), fb = std::fabs(b);
    return fa < fb || (fa == fb && a < b);
  });
  double acc = 0.0;
  for (double t : terms) acc += t;
  return acc;
}

// log sum exp, also order-canonical.
inline double log_sum_exp(std::vector<double>& x) {
  std::sort(x.begin(), x.end());
  const double top = x.back();
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - top);
  return top + std::log(acc);
}

}  // namespace mra::detail
