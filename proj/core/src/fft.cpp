#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace mra::detail {
namespace {

enum class Kind { forward, backward, r2c, c2r };

std::mutex plan_mutex;

// Plans are created once per (kind, length) with FFTW_UNALIGNED so the
// new-array execute functions accept arbitrary buffers from any thread.
fftw_plan plan_for(Kind kind, std::size_t length) {
  static std::map<std::pair<Kind, std::size_t>, fftw_plan> cache;
  std::lock_guard lock(plan_mutex);
  auto key = std::make_pair(kind, length);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  const int n = static_cast<int>(length);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::vector<fftw_complex> cbuf_in(length), cbuf_out(length);
  std::vector<double> rbuf(length);
  fftw_plan plan = nullptr;
  switch (kind) {
    case Kind::forward:
      plan = fftw_plan_dft_1d(n, cbuf_in.data(), cbuf_out.data(), FFTW_FORWARD, flags);
      break;
    case Kind::backward:
      plan = fftw_plan_dft_1d(n, cbuf_in.data(), cbuf_out.data(), FFTW_BACKWARD, flags);
      break;
    case Kind::r2c:
      plan = fftw_plan_dft_r2c_1d(n, rbuf.data(), cbuf_out.data(), flags);
      break;
    case Kind::c2r:
      plan = fftw_plan_dft_c2r_1d(n, cbuf_in.data(), rbuf.data(), flags);
      break;
  }
  cache.emplace(key, plan);
  return plan;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }
fftw_complex* as_fftw(const cplx* p) {
  return reinterpret_cast<fftw_complex*>(const_cast<cplx*>(p));
}

}  // namespace

void fft_forward(const cplx* in, cplx* out, std::size_t length) {
  fftw_execute_dft(plan_for(Kind::forward, length), as_fftw(in), as_fftw(out));
}

void fft_backward(const cplx* in, cplx* out, std::size_t length) {
  fftw_execute_dft(plan_for(Kind::backward, length), as_fftw(in), as_fftw(out));
}

void fft_r2c(const double* in, cplx* out, std::size_t length) {
  fftw_execute_dft_r2c(plan_for(Kind::r2c, length), const_cast<double*>(in), as_fftw(out));
}

void fft_c2r(const cplx* in, double* out, std::size_t length) {
  // c2r transforms clobber their input.
  std::vector<cplx> scratch(in, in + length / 2 + 1);
  fftw_execute_dft_c2r(plan_for(Kind::c2r, length), as_fftw(scratch.data()), out);
}

}  // namespace mra::detail
