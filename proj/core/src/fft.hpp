#pragma once

#include <complex>
#include <cstddef>

// Thin FFTW wrapper working on residue-ordered arrays (index 0 first).
namespace mra::detail {

using cplx = std::complex<double>;

// out[j] = sum_k in[k] exp(-2 pi i jk / L)
void fft_forward(const cplx* in, cplx* out, std::size_t length);
// out[k] = sum_j in[j] exp(+2 pi i jk / L), no 1/L factor.
void fft_backward(const cplx* in, cplx* out, std::size_t length);
// Real input, L/2 + 1 nonredundant outputs.
void fft_r2c(const double* in, cplx* out, std::size_t length);
// Hermitian half-spectrum in, real out, no 1/L factor. Input is not modified.
void fft_c2r(const cplx* in, double* out, std::size_t length);

}  // namespace mra::detail
