#include "mra/ring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fft.hpp"
#include "mra/error.hpp"

namespace mra {

Index first_index(std::size_t length) { return -static_cast<Index>(length / 2); }

Index last_index(std::size_t length) {
  return first_index(length) + static_cast<Index>(length) - 1;
}

Index residue(Index i, std::size_t length) {
  const auto n = static_cast<Index>(length);
  Index r = i % n;
  return r < 0 ? r + n : r;
}

Index standard(Index i, std::size_t length) {
  return residue(i - first_index(length), length) + first_index(length);
}

Signal::Signal(std::size_t length) : values_(length, 0.0) {
  if (length == 0) throw InvalidArgument("signal length must be positive");
}

Signal::Signal(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw InvalidArgument("signal length must be positive");
}

Signal Signal::delta(std::size_t length, Index at, double value) {
  Signal s(length);
  s(at) = value;
  return s;
}

Signal Signal::from_support(std::size_t length, std::span<const Index> support,
                            std::span<const double> values) {
  if (support.size() != values.size()) throw LengthMismatch(support.size(), values.size());
  Signal s(length);
  for (std::size_t k = 0; k < support.size(); ++k) s(support[k]) = values[k];
  return s;
}

std::size_t Signal::slot(Index i) const {
  return static_cast<std::size_t>(residue(i - first(), size()));
}

std::vector<Index> Signal::support() const {
  std::vector<Index> out;
  for (std::size_t k = 0; k < values_.size(); ++k)
    if (values_[k] != 0.0) out.push_back(first() + static_cast<Index>(k));
  return out;
}

double Signal::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }
double Signal::mean() const { return sum() / static_cast<double>(size()); }

double Signal::squared_norm() const {
  double acc = 0.0;
  for (double v : values_) acc += v * v;
  return acc;
}

double Signal::norm() const { return std::sqrt(squared_norm()); }

Signal& Signal::operator+=(const Signal& other) {
  if (other.size() != size()) throw LengthMismatch(size(), other.size());
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

Signal& Signal::operator-=(const Signal& other) {
  if (other.size() != size()) throw LengthMismatch(size(), other.size());
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

Signal& Signal::operator*=(double scale) {
  for (double& v : values_) v *= scale;
  return *this;
}

Signal operator+(Signal a, const Signal& b) { return a += b; }
Signal operator-(Signal a, const Signal& b) { return a -= b; }
Signal operator*(double scale, Signal a) { return a *= scale; }

double dot(const Signal& a, const Signal& b) {
  if (a.size() != b.size()) throw LengthMismatch(a.size(), b.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a.values()[k] * b.values()[k];
  return acc;
}

GroupElement compose(GroupElement a, GroupElement b, std::size_t length) {
  const Index g = a.flip ? a.shift - b.shift : a.shift + b.shift;
  return {standard(g, length), a.flip != b.flip};
}

GroupElement inverse(GroupElement a, std::size_t length) {
  if (a.flip) return {standard(a.shift, length), true};
  return {standard(-a.shift, length), false};
}

std::size_t group_order(std::size_t length, GroupKind kind) {
  return kind == GroupKind::dihedral ? 2 * length : length;
}

std::vector<GroupElement> group_elements(std::size_t length, GroupKind kind) {
  std::vector<GroupElement> out;
  out.reserve(group_order(length, kind));
  for (int f = 0; f < (kind == GroupKind::dihedral ? 2 : 1); ++f)
    for (std::size_t g = 0; g < length; ++g)
      out.push_back({standard(static_cast<Index>(g), length), f == 1});
  return out;
}

Signal shift(const Signal& v, Index g) {
  Signal out(v.size());
  for (Index i = v.first(); i <= v.last(); ++i) out(i) = v(i + g);
  return out;
}

Signal reflect(const Signal& v) {
  Signal out(v.size());
  for (Index i = v.first(); i <= v.last(); ++i) out(i) = v(-i);
  return out;
}

Signal act(GroupElement g, const Signal& v) {
  return g.flip ? shift(reflect(v), g.shift) : shift(v, g.shift);
}

namespace {

constexpr std::size_t kDirectLimit = 64;

// c[g] = sum_k a[k] b[(k + g) mod L] over residue-ordered storage. The offset
// between residue and standard order cancels in the cyclic sum.
void cyclic_correlation(std::span<const double> a, std::span<const double> b, double* out) {
  const std::size_t n = a.size();
  if (n <= kDirectLimit) {
    for (std::size_t g = 0; g < n; ++g) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        std::size_t j = k + g;
        if (j >= n) j -= n;
        acc += a[k] * b[j];
      }
      out[g] = acc;
    }
    return;
  }
  const std::size_t half = n / 2 + 1;
  std::vector<detail::cplx> fa(half), fb(half);
  detail::fft_r2c(a.data(), fa.data(), n);
  detail::fft_r2c(b.data(), fb.data(), n);
  for (std::size_t j = 0; j < half; ++j) fa[j] = std::conj(fa[j]) * fb[j];
  detail::fft_c2r(fa.data(), out, n);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t g = 0; g < n; ++g) out[g] *= scale;
}

}  // namespace

// In storage coordinates a pure shift by g correlates at lag g (shift(theta,g)
// has storage T[(k + g) mod L]). The residue of the standard shift is the lag.
std::vector<double> orbit_inner_products(std::span<const double> y, const Signal& theta,
                                         GroupKind kind) {
  const std::size_t n = theta.size();
  if (y.size() != n) throw LengthMismatch(y.size(), n);
  std::vector<double> out(group_order(n, kind));
  std::vector<double> lag(n);
  cyclic_correlation(y, theta.values(), lag.data());
  // group_elements lists shifts by standard(g) for g = 0..L-1, i.e. lag g.
  std::copy(lag.begin(), lag.end(), out.begin());
  if (kind == GroupKind::dihedral) {
    const Signal r = reflect(theta);
    cyclic_correlation(y, r.values(), lag.data());
    std::copy(lag.begin(), lag.end(), out.begin() + static_cast<std::ptrdiff_t>(n));
  }
  return out;
}

namespace {

double distance_at(const Signal& theta, const Signal& phi, GroupElement g) {
  const Signal moved = act(g, phi);
  double acc = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double d = theta.values()[k] - moved.values()[k];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

OrbitMatch rho(const Signal& theta, const Signal& phi, GroupKind kind) {
  if (theta.size() != phi.size()) throw LengthMismatch(theta.size(), phi.size());
  const auto elements = group_elements(theta.size(), kind);
  const auto ip = orbit_inner_products(theta.values(), phi, kind);
  const double best = *std::max_element(ip.begin(), ip.end());
  // Correlations from the FFT path carry rounding; every element within a
  // small window of the maximum is re-evaluated exactly.
  const double window =
      1e-9 * (theta.squared_norm() + phi.squared_norm()) + std::numeric_limits<double>::min();
  OrbitMatch match{std::numeric_limits<double>::infinity(), {}};
  for (std::size_t k = 0; k < ip.size(); ++k) {
    if (ip[k] < best - window) continue;
    const double d = distance_at(theta, phi, elements[k]);
    if (d < match.distance) match = {d, elements[k]};
  }
  return match;
}

double varrho(const Signal& theta, const Signal& phi, GroupKind kind) {
  return rho(theta, phi, kind).distance / std::sqrt(static_cast<double>(theta.size()));
}

OrbitMatch rho_brute_force(const Signal& theta, const Signal& phi, GroupKind kind) {
  if (theta.size() != phi.size()) throw LengthMismatch(theta.size(), phi.size());
  OrbitMatch match{std::numeric_limits<double>::infinity(), {}};
  for (const auto& g : group_elements(theta.size(), kind)) {
    const double d = distance_at(theta, phi, g);
    if (d < match.distance) match = {d, g};
  }
  return match;
}

}  // namespace mra
