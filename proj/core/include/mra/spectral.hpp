#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "mra/ring.hpp"

namespace mra {

using Complex = std::complex<double>;

// DFT coefficients indexed by frequency in the standard parametrization.
class Spectrum {
 public:
  Spectrum() = default;
  explicit Spectrum(std::vector<Complex> values);

  std::size_t size() const { return values_.size(); }
  Complex operator()(Index xi) const { return values_[slot(xi)]; }
  Complex& operator()(Index xi) { return values_[slot(xi)]; }
  std::span<const Complex> values() const { return values_; }
  std::span<Complex> values() { return values_; }

 private:
  std::size_t slot(Index xi) const;
  std::vector<Complex> values_;
};

// Unnormalized forward transform: hat(xi) = sum_k v(k) exp(-2 pi i xi k / L).
Spectrum dft(const Signal& v);
// Inverse with the 1/L factor; imaginary parts are dropped.
Signal idft(const Spectrum& s);
// Inverse keeping the imaginary part.
std::vector<Complex> idft_complex(const Spectrum& s);

// [u * v](k) = sum_g u(g) v(k - g)
Signal convolve(const Signal& u, const Signal& v);
Signal convolve_direct(const Signal& u, const Signal& v);

// [M(v)]_{ij} = v(i - j); rows and columns in standard order.
Eigen::MatrixXd toeplitz(const Signal& v);

// Group-averaged moment tensor of order 1, 2 or 3 (or a difference of two).
// Order-2 tensors built from signals are circulant and keep only their
// generator J with entry(i, j) = J(j - i); the dense matrix is built on demand.
class MomentTensor {
 public:
  static MomentTensor first(std::vector<double> mean_vector);
  static MomentTensor circulant(Signal generator);
  static MomentTensor dense(Eigen::MatrixXd matrix);
  // entries(i, j, k) = table(j - i, k - i) for a shift-invariant third moment.
  static MomentTensor third(std::size_t length, std::vector<double> table);

  int order() const { return order_; }
  std::size_t length() const { return length_; }
  bool is_circulant() const { return generator_.has_value(); }
  const Signal& generator() const { return *generator_; }

  double at(Index i) const;
  double at(Index i, Index j) const;
  double at(Index i, Index j, Index k) const;

  // Order 1 vector, order 2 dense matrix.
  Eigen::VectorXd vector() const;
  Eigen::MatrixXd matrix() const;
  double frobenius_norm() const;

  MomentTensor& operator*=(double scale);
  MomentTensor& operator-=(const MomentTensor& other);
  MomentTensor& operator+=(const MomentTensor& other);

 private:
  int order_ = 0;
  std::size_t length_ = 0;
  std::vector<double> entries_;  // order 1 vector, dense order 2, third-moment table
  std::optional<Signal> generator_;
};

MomentTensor operator-(MomentTensor a, const MomentTensor& b);
MomentTensor operator+(MomentTensor a, const MomentTensor& b);

MomentTensor first_moment(const Signal& theta);
// (1/L) M(theta * reflect(theta)), stored as its generator A_theta / L.
MomentTensor second_moment(const Signal& theta);
// Brute-force average over all shifts. Requires L <= 64.
MomentTensor third_moment(const Signal& theta);
// (1/L) sum_g (G theta)(G theta)^T as a dense matrix; oracle for second_moment.
Eigen::MatrixXd second_moment_brute_force(const Signal& theta);

constexpr std::size_t kThirdMomentGuard = 64;

// E[(G theta)^{(x)m}] - E[(G phi)^{(x)m}] for m in {1, 2, 3}.
MomentTensor delta_m(const Signal& theta, const Signal& phi, int m);

struct SecondMomentExpansion {
  MomentTensor linear;     // (1/L)[M(theta * h_check) + M(theta_check * h)]
  MomentTensor quadratic;  // (1/L) M(h * h_check)
};
// Splits Delta_2(theta + h, theta) into parts linear and quadratic in h.
SecondMomentExpansion second_moment_difference_expansion(const Signal& theta, const Signal& h);

// Sample mean (m = 1) or bias-corrected (1/n) sum y y^T - sigma^2 I (m = 2) of
// row-major observations with `length` columns.
MomentTensor empirical_moments(std::span<const double> observations, std::size_t length, int m,
                               double sigma);

// |hat theta(xi)|^2 indexed by frequency.
Signal power_spectrum(const Signal& theta);
// A(l) = sum_i theta(i) theta(i + l); equals idft(power_spectrum(theta)).
Signal autocorrelation(const Signal& theta);
Signal autocorrelation_direct(const Signal& theta);

}  // namespace mra
