#include "mra/spectral.hpp"

#include <cmath>
#include <numbers>

#include "fft.hpp"
#include "mra/error.hpp"
#include "mra/parallel.hpp"
#include "numeric.hpp"

namespace mra {

namespace {

constexpr std::size_t kDirectConvolution = 64;
// Autocorrelations below this length are summed directly in canonical order,
// which makes moment tensors bit-exactly shift invariant.
constexpr std::size_t kDirectAutocorrelation = 256;

void require_same(std::size_t a, std::size_t b) {
  if (a != b) throw LengthMismatch(a, b);
}

// Residue-ordered copy of a signal: out[r] = v(r).
std::vector<detail::cplx> to_residue(const Signal& v) {
  const std::size_t n = v.size();
  std::vector<detail::cplx> out(n);
  for (Index i = v.first(); i <= v.last(); ++i) out[residue(i, n)] = v(i);
  return out;
}

}  // namespace

Spectrum::Spectrum(std::vector<Complex> values) : values_(std::move(values)) {
  if (values_.empty()) throw InvalidArgument("spectrum length must be positive");
}

std::size_t Spectrum::slot(Index xi) const {
  return static_cast<std::size_t>(residue(xi - first_index(size()), size()));
}

Spectrum dft(const Signal& v) {
  const std::size_t n = v.size();
  auto in = to_residue(v);
  std::vector<detail::cplx> out(n);
  detail::fft_forward(in.data(), out.data(), n);
  Spectrum s{std::vector<Complex>(n)};
  for (Index xi = first_index(n); xi <= last_index(n); ++xi) s(xi) = out[residue(xi, n)];
  return s;
}

std::vector<Complex> idft_complex(const Spectrum& s) {
  const std::size_t n = s.size();
  std::vector<detail::cplx> in(n), out(n);
  for (Index xi = first_index(n); xi <= last_index(n); ++xi) in[residue(xi, n)] = s(xi);
  detail::fft_backward(in.data(), out.data(), n);
  std::vector<Complex> values(n);
  const double scale = 1.0 / static_cast<double>(n);
  for (Index i = first_index(n); i <= last_index(n); ++i)
    values[static_cast<std::size_t>(i - first_index(n))] = out[residue(i, n)] * scale;
  return values;
}

Signal idft(const Spectrum& s) {
  const auto values = idft_complex(s);
  std::vector<double> real(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) real[k] = values[k].real();
  return Signal(std::move(real));
}

Signal convolve_direct(const Signal& u, const Signal& v) {
  require_same(u.size(), v.size());
  Signal out(u.size());
  for (Index k = u.first(); k <= u.last(); ++k) {
    double acc = 0.0;
    for (Index g = u.first(); g <= u.last(); ++g) acc += u(g) * v(k - g);
    out(k) = acc;
  }
  return out;
}

Signal convolve(const Signal& u, const Signal& v) {
  require_same(u.size(), v.size());
  if (u.size() <= kDirectConvolution) return convolve_direct(u, v);
  Spectrum a = dft(u);
  const Spectrum b = dft(v);
  for (std::size_t k = 0; k < a.size(); ++k) a.values()[k] *= b.values()[k];
  return idft(a);
}

Eigen::MatrixXd toeplitz(const Signal& v) {
  const std::size_t n = v.size();
  Eigen::MatrixXd m(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          v(static_cast<Index>(a) - static_cast<Index>(b));
  return m;
}

// ---- MomentTensor ----

MomentTensor MomentTensor::first(std::vector<double> mean_vector) {
  MomentTensor t;
  t.order_ = 1;
  t.length_ = mean_vector.size();
  t.entries_ = std::move(mean_vector);
  return t;
}

MomentTensor MomentTensor::circulant(Signal generator) {
  MomentTensor t;
  t.order_ = 2;
  t.length_ = generator.size();
  t.generator_ = std::move(generator);
  return t;
}

MomentTensor MomentTensor::dense(Eigen::MatrixXd matrix) {
  if (matrix.rows() != matrix.cols())
    throw LengthMismatch(static_cast<std::size_t>(matrix.rows()),
                         static_cast<std::size_t>(matrix.cols()));
  MomentTensor t;
  t.order_ = 2;
  t.length_ = static_cast<std::size_t>(matrix.rows());
  t.entries_.assign(matrix.data(), matrix.data() + matrix.size());  // column major
  return t;
}

MomentTensor MomentTensor::third(std::size_t length, std::vector<double> table) {
  require_same(table.size(), length * length);
  MomentTensor t;
  t.order_ = 3;
  t.length_ = length;
  t.entries_ = std::move(table);
  return t;
}

double MomentTensor::at(Index i) const {
  if (order_ != 1) throw InvalidArgument("order-1 access on a higher-order tensor");
  return entries_[static_cast<std::size_t>(residue(i - first_index(length_), length_))];
}

double MomentTensor::at(Index i, Index j) const {
  if (order_ != 2) throw InvalidArgument("order-2 access on a tensor of another order");
  if (generator_) return (*generator_)(j - i);
  const auto a = static_cast<std::size_t>(residue(i - first_index(length_), length_));
  const auto b = static_cast<std::size_t>(residue(j - first_index(length_), length_));
  return entries_[b * length_ + a];
}

double MomentTensor::at(Index i, Index j, Index k) const {
  if (order_ != 3) throw InvalidArgument("order-3 access on a tensor of another order");
  const auto a = static_cast<std::size_t>(residue(j - i, length_));
  const auto b = static_cast<std::size_t>(residue(k - i, length_));
  return entries_[a * length_ + b];
}

Eigen::VectorXd MomentTensor::vector() const {
  if (order_ != 1) throw InvalidArgument("vector() requires an order-1 tensor");
  return Eigen::Map<const Eigen::VectorXd>(entries_.data(),
                                           static_cast<Eigen::Index>(entries_.size()));
}

Eigen::MatrixXd MomentTensor::matrix() const {
  if (order_ != 2) throw InvalidArgument("matrix() requires an order-2 tensor");
  const auto n = static_cast<Eigen::Index>(length_);
  if (!generator_) return Eigen::Map<const Eigen::MatrixXd>(entries_.data(), n, n);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) m(a, b) = (*generator_)(static_cast<Index>(b - a));
  return m;
}

double MomentTensor::frobenius_norm() const {
  double acc = 0.0;
  if (generator_) {
    // Each generator entry appears L times in the circulant matrix.
    acc = static_cast<double>(length_) * generator_->squared_norm();
  } else {
    for (double v : entries_) acc += v * v;
    if (order_ == 3) acc *= static_cast<double>(length_);
  }
  return std::sqrt(acc);
}

MomentTensor& MomentTensor::operator*=(double scale) {
  if (generator_) *generator_ *= scale;
  for (double& v : entries_) v *= scale;
  return *this;
}

MomentTensor& MomentTensor::operator-=(const MomentTensor& other) {
  MomentTensor neg = other;
  neg *= -1.0;
  return *this += neg;
}

MomentTensor& MomentTensor::operator+=(const MomentTensor& other) {
  if (order_ != other.order_) throw InvalidArgument("moment tensors of different order");
  require_same(length_, other.length_);
  if (generator_ && other.generator_) {
    *generator_ += *other.generator_;
    return *this;
  }
  if (order_ == 2 && (generator_ || other.generator_)) {
    const Eigen::MatrixXd sum = matrix() + other.matrix();
    *this = dense(sum);
    return *this;
  }
  for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] += other.entries_[k];
  return *this;
}

MomentTensor operator-(MomentTensor a, const MomentTensor& b) { return a -= b; }

MomentTensor operator+(MomentTensor a, const MomentTensor& b) { return a += b; }

}  // namespace mra

namespace mra {

MomentTensor first_moment(const Signal& theta) {
  std::vector<double> terms(theta.values().begin(), theta.values().end());
  const double mean = detail::canonical_sum(terms) / static_cast<double>(theta.size());
  return MomentTensor::first(std::vector<double>(theta.size(), mean));
}

Signal autocorrelation_direct(const Signal& theta) {
  Signal out(theta.size());
  std::vector<double> terms(theta.size());
  for (Index l = theta.first(); l <= theta.last(); ++l) {
    std::size_t k = 0;
    for (Index i = theta.first(); i <= theta.last(); ++i) terms[k++] = theta(i) * theta(i + l);
    out(l) = detail::canonical_sum(terms);
  }
  return out;
}

Signal power_spectrum(const Signal& theta) {
  const Spectrum s = dft(theta);
  std::vector<double> p(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) p[k] = std::norm(s.values()[k]);
  return Signal(std::move(p));
}

Signal autocorrelation(const Signal& theta) {
  if (theta.size() <= kDirectAutocorrelation) return autocorrelation_direct(theta);
  const Signal p = power_spectrum(theta);
  std::vector<Complex> values(p.values().begin(), p.values().end());
  return idft(Spectrum(std::move(values)));
}

MomentTensor second_moment(const Signal& theta) {
  Signal gen = autocorrelation(theta);
  gen *= 1.0 / static_cast<double>(theta.size());
  return MomentTensor::circulant(std::move(gen));
}

Eigen::MatrixXd second_moment_brute_force(const Signal& theta) {
  const auto n = static_cast<Eigen::Index>(theta.size());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  for (Index g = theta.first(); g <= theta.last(); ++g) {
    const Signal moved = shift(theta, g);
    const Eigen::Map<const Eigen::VectorXd> v(moved.values().data(), n);
    acc += v * v.transpose();
  }
  return acc / static_cast<double>(n);
}

MomentTensor third_moment(const Signal& theta) {
  const std::size_t n = theta.size();
  if (n > kThirdMomentGuard)
    throw SizeGuardError("third moment is brute force only; L = " + std::to_string(n) +
                         " exceeds the guard " + std::to_string(kThirdMomentGuard));
  std::vector<double> table(n * n);
  std::vector<double> terms(n);
  const auto L = static_cast<Index>(n);
  for (Index a = 0; a < L; ++a) {
    for (Index b = 0; b < L; ++b) {
      std::size_t k = 0;
      for (Index m = theta.first(); m <= theta.last(); ++m)
        terms[k++] = theta(m) * theta(m + a) * theta(m + b);
      table[static_cast<std::size_t>(a * L + b)] =
          detail::canonical_sum(terms) / static_cast<double>(n);
    }
  }
  return MomentTensor::third(n, std::move(table));
}

MomentTensor delta_m(const Signal& theta, const Signal& phi, int m) {
  require_same(theta.size(), phi.size());
  switch (m) {
    case 1:
      return first_moment(theta) - first_moment(phi);
    case 2:
      return second_moment(theta) - second_moment(phi);
    case 3:
      return third_moment(theta) - third_moment(phi);
    default:
      throw InvalidArgument("moment order must be 1, 2 or 3");
  }
}

SecondMomentExpansion second_moment_difference_expansion(const Signal& theta, const Signal& h) {
  require_same(theta.size(), h.size());
  const double inv = 1.0 / static_cast<double>(theta.size());
  // entry(i, j) = (1/L)[(theta * h_check)(i - j) + (theta_check * h)(i - j)],
  // so the generator indexed by j - i is the reflection of the bracket.
  Signal bracket = convolve(theta, reflect(h)) + convolve(reflect(theta), h);
  Signal linear = reflect(bracket);
  linear *= inv;
  Signal quadratic = autocorrelation(h);
  quadratic *= inv;
  return {MomentTensor::circulant(std::move(linear)), MomentTensor::circulant(std::move(quadratic))};
}

MomentTensor empirical_moments(std::span<const double> observations, std::size_t length, int m,
                               double sigma) {
  if (length == 0 || observations.size() % length != 0)
    throw InvalidArgument("observation buffer is not a whole number of rows");
  const std::size_t n = observations.size() / length;
  if (n == 0) throw InvalidArgument("empirical moments of an empty dataset");
  if (m != 1 && m != 2) throw InvalidArgument("empirical moments support orders 1 and 2");
  constexpr std::size_t kChunk = 4096;
  const auto L = static_cast<Eigen::Index>(length);
  if (m == 1) {
    std::vector<Eigen::VectorXd> partial(chunk_count(n, kChunk));
    for_each_chunk(n, kChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(L);
      for (std::size_t i = begin; i < end; ++i)
        acc += Eigen::Map<const Eigen::VectorXd>(observations.data() + i * length, L);
      partial[c] = std::move(acc);
    });
    Eigen::VectorXd total = Eigen::VectorXd::Zero(L);
    for (const auto& p : partial) total += p;
    total /= static_cast<double>(n);
    return MomentTensor::first(std::vector<double>(total.data(), total.data() + L));
  }
  std::vector<Eigen::MatrixXd> partial(chunk_count(n, kChunk));
  for_each_chunk(n, kChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(L, L);
    for (std::size_t i = begin; i < end; ++i) {
      const Eigen::Map<const Eigen::VectorXd> y(observations.data() + i * length, L);
      acc.selfadjointView<Eigen::Lower>().rankUpdate(y);
    }
    partial[c] = std::move(acc);
  });
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(L, L);
  for (const auto& p : partial) total += p;
  Eigen::MatrixXd full = total.selfadjointView<Eigen::Lower>();
  total = full / static_cast<double>(n);
  total.diagonal().array() -= sigma * sigma;
  return MomentTensor::dense(std::move(total));
}

}  // namespace mra
